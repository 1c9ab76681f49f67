#include "delaynet/evaluation.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/csv.h"

namespace delaynet {

std::string_view to_string(protocol p) {
  return p == protocol::simultaneous ? "simultaneous" : "nonsimultaneous";
}

protocol parse_protocol(std::string_view s) {
  auto const v = to_lower(trim(s));
  if (v == "simultaneous") {
    return protocol::simultaneous;
  }
  if (v == "nonsimultaneous" || v == "non-simultaneous") {
    return protocol::nonsimultaneous;
  }
  throw std::invalid_argument(fmt::format(
      "unknown protocol \"{}\" (simultaneous, nonsimultaneous)", s));
}

protocol_plan plan_simultaneous(labeled_dataset const& ds, std::uint64_t seed,
                                simultaneous_options const& opt) {
  if (ds.empty()) {
    throw data_error("simultaneous protocol: empty dataset");
  }
  auto split = time_based_split(ds, opt.train_fraction, seed);
  protocol_plan plan;
  plan.kind = protocol::simultaneous;
  plan.seed = seed;
  plan.warnings = std::move(split.warnings);
  if (!opt.per_period) {
    plan.parts.push_back({std::nullopt, std::move(split.train),
                          std::move(split.test)});
    return plan;
  }
  std::map<month_key, protocol_plan::part> parts;
  for (auto const i : split.train) {
    parts[ds.month(i)].train.push_back(i);
  }
  for (auto const i : split.test) {
    parts[ds.month(i)].test.push_back(i);
  }
  for (auto& [m, p] : parts) {
    p.period = m;
    plan.parts.push_back(std::move(p));
  }
  return plan;
}

protocol_plan plan_nonsimultaneous(labeled_dataset const& ds,
                                   std::span<month_key const> train_months,
                                   std::span<month_key const> test_months,
                                   std::uint64_t seed) {
  if (train_months.empty() || test_months.empty()) {
    throw std::invalid_argument(
        "non-simultaneous protocol needs train and test months");
  }
  auto const last_train =
      *std::max_element(begin(train_months), end(train_months));
  auto const first_test =
      *std::min_element(begin(test_months), end(test_months));
  if (!(last_train < first_test)) {
    throw std::invalid_argument(fmt::format(
        "train months must precede test months ({} is not before {})",
        last_train.str(), first_test.str()));
  }
  std::set<month_key> const tr{begin(train_months), end(train_months)};
  std::set<month_key> const te{begin(test_months), end(test_months)};
  protocol_plan::part part;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (tr.contains(ds.month(i))) {
      part.train.push_back(i);
    } else if (te.contains(ds.month(i))) {
      part.test.push_back(i);
    }
  }
  if (part.train.empty() || part.test.empty()) {
    throw data_error(fmt::format(
        "non-simultaneous protocol: {} train rows, {} test rows",
        part.train.size(), part.test.size()));
  }
  protocol_plan plan;
  plan.kind = protocol::nonsimultaneous;
  plan.seed = seed;
  plan.parts.push_back(std::move(part));
  return plan;
}

std::pair<std::vector<month_key>, std::vector<month_key>>
default_nonsimultaneous_months(labeled_dataset const& ds,
                               double train_fraction) {
  auto const months = ds.distinct_months();
  if (months.size() < 2) {
    throw data_error("non-simultaneous protocol needs at least two months");
  }
  auto cut = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(months.size())));
  cut = std::clamp<std::size_t>(cut, 1, months.size() - 1);
  return {{begin(months), begin(months) + static_cast<std::ptrdiff_t>(cut)},
          {begin(months) + static_cast<std::ptrdiff_t>(cut), end(months)}};
}

std::vector<std::optional<trained_model>> fit_plan(
    protocol_plan const& plan, labeled_dataset const& ds,
    model_spec const& spec, std::vector<std::string>* warnings) {
  std::vector<std::optional<trained_model>> models;
  models.reserve(plan.parts.size());
  for (std::size_t k = 0; k < plan.parts.size(); ++k) {
    auto const& part = plan.parts[k];
    auto const name = part.period ? part.period->str() : std::string{"all"};
    auto const pos = static_cast<std::size_t>(
        std::count_if(begin(part.train), end(part.train),
                      [&](auto i) { return ds.label(i); }));
    if (pos == 0 || pos == part.train.size()) {
      if (warnings != nullptr) {
        warnings->push_back(
            fmt::format("{}: training side holds a single class; no model", name));
      }
      models.emplace_back();
      continue;
    }
    auto const rows =
        random_undersample(ds, part.train, derive_seed(plan.seed, 2 * k));
    auto part_spec = spec;
    part_spec.seed = derive_seed(spec.seed ^ plan.seed, 2 * k + 1);
    auto model = train(part_spec, ds.subset(rows));
    if (warnings != nullptr) {
      for (auto const& w : model.info().warnings) {
        warnings->push_back(fmt::format("{}: {}", name, w));
      }
    }
    models.emplace_back(std::move(model));
  }
  return models;
}

metrics_report evaluate_plan(
    protocol_plan const& plan, labeled_dataset const& ds,
    std::span<std::optional<trained_model> const> models) {
  if (models.size() != plan.parts.size()) {
    throw std::invalid_argument("evaluate_plan: one model slot per part");
  }
  metrics_report r;
  r.kind = plan.kind;
  r.seed = plan.seed;
  r.warnings = plan.warnings;

  std::vector<std::uint8_t> truth, train_truth;
  std::vector<double> scores;
  std::map<month_key, std::pair<std::vector<double>, std::vector<std::uint8_t>>>
      by_month;
  for (std::size_t k = 0; k < plan.parts.size(); ++k) {
    auto const& part = plan.parts[k];
    for (auto const i : part.train) {
      train_truth.push_back(ds.label(i) ? 1 : 0);
    }
    if (!models[k]) {
      if (!part.test.empty()) {
        r.warnings.push_back(fmt::format(
            "{}: {} test rows not scored (no model)",
            part.period ? part.period->str() : std::string{"all"},
            part.test.size()));
      }
      continue;
    }
    for (auto const i : part.test) {
      auto const p = models[k]->predict_proba(ds.row(i));
      auto const y = static_cast<std::uint8_t>(ds.label(i) ? 1 : 0);
      truth.push_back(y);
      scores.push_back(p);
      r.cm.add(y != 0, p >= 0.5);
      auto& [ms, mt] = by_month[ds.month(i)];
      ms.push_back(p);
      mt.push_back(y);
    }
  }
  if (truth.empty()) {
    throw data_error("no test rows were scored");
  }
  for (auto const& [m, st] : by_month) {
    auto const& [ms, mt] = st;
    period_metrics pm;
    pm.month = m;
    pm.rows = ms.size();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      pm.cm.add(mt[i] != 0, ms[i] >= 0.5);
    }
    pm.balanced_accuracy = try_balanced_accuracy(pm.cm);
    pm.f1 = try_f1(pm.cm);
    pm.roc_auc = try_roc_auc(ms, mt);
    r.per_period.push_back(pm);
    r.months.push_back(m);
  }
  r.balanced_accuracy = balanced_accuracy(r.cm);
  r.f1 = try_f1(r.cm).value_or(0.0);
  r.roc_auc = roc_auc(scores, truth);
  auto const null = null_baseline(train_truth, truth);
  r.null_balanced_accuracy = null.balanced_accuracy.value_or(0.5);
  return r;
}

namespace {

metrics_report run_plan(protocol_plan const& plan, labeled_dataset const& ds,
                        model_spec const& spec) {
  std::vector<std::string> warnings;
  auto const models = fit_plan(plan, ds, spec, &warnings);
  auto r = evaluate_plan(plan, ds, models);
  r.classifier = std::string{to_string(spec.algo)};
  r.warnings.insert(end(r.warnings), begin(warnings), end(warnings));
  return r;
}

}  // namespace

metrics_report run_simultaneous(labeled_dataset const& ds,
                                model_spec const& spec, std::uint64_t seed,
                                simultaneous_options const& opt) {
  return run_plan(plan_simultaneous(ds, seed, opt), ds, spec);
}

metrics_report run_nonsimultaneous(labeled_dataset const& ds,
                                   std::span<month_key const> train_months,
                                   std::span<month_key const> test_months,
                                   model_spec const& spec, std::uint64_t seed) {
  return run_plan(plan_nonsimultaneous(ds, train_months, test_months, seed),
                  ds, spec);
}

std::vector<feature_importance> permutation_importance(
    trained_model const& model, labeled_dataset const& test,
    importance_metric metric, std::size_t repeats, std::uint64_t seed,
    std::span<std::string const> features) {
  if (repeats == 0) {
    throw std::invalid_argument("permutation importance: repeats must be > 0");
  }
  if (test.size() < 2) {
    throw std::invalid_argument("permutation importance: need >= 2 test rows");
  }
  auto const& names = test.feature_names();
  std::vector<std::size_t> cols;
  if (features.empty()) {
    cols.resize(names.size());
    std::iota(begin(cols), end(cols), std::size_t{0});
  } else {
    for (auto const& f : features) {
      auto const it = std::find(begin(names), end(names), f);
      if (it == end(names)) {
        throw std::invalid_argument(
            fmt::format("permutation importance: unknown feature \"{}\"", f));
      }
      cols.push_back(static_cast<std::size_t>(it - begin(names)));
    }
  }

  auto const score = [&](labeled_dataset const& d) {
    if (metric == importance_metric::roc_auc) {
      return roc_auc(model.predict_proba(d), d.labels());
    }
    confusion_matrix cm;
    for (std::size_t i = 0; i < d.size(); ++i) {
      cm.add(d.label(i), model.predict(d.row(i)));
    }
    return balanced_accuracy(cm);
  };

  auto const base = score(test);
  auto work = test;
  std::vector<feature_importance> out;
  for (auto const c : cols) {
    std::mt19937_64 rng{derive_seed(seed, c)};
    std::vector<double> original(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      original[i] = test.value(i, c);
    }
    std::vector<double> drops;
    for (std::size_t r = 0; r < repeats; ++r) {
      auto shuffled = original;
      std::shuffle(begin(shuffled), end(shuffled), rng);
      for (std::size_t i = 0; i < test.size(); ++i) {
        work.set_value(i, c, shuffled[i]);
      }
      drops.push_back(base - score(work));
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      work.set_value(i, c, original[i]);
    }
    auto const mean = std::accumulate(begin(drops), end(drops), 0.0) /
                      static_cast<double>(repeats);
    double var = 0.0;
    for (auto const d : drops) {
      var += (d - mean) * (d - mean);
    }
    auto const sd =
        repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
    out.push_back({names[c], mean, sd});
  }
  return out;
}

void write_report_record(std::ostream& out, metrics_report const& r) {
  std::string months;
  for (auto const& m : r.months) {
    if (!months.empty()) {
      months += ',';
    }
    months += m.str();
  }
  out << "protocol=" << to_string(r.kind) << " classifier=" << r.classifier
      << " feature_set=" << r.feature_set << " months=" << months
      << " ba=" << format_double(r.balanced_accuracy)
      << " f1=" << format_double(r.f1) << " auc=" << format_double(r.roc_auc)
      << " tp=" << r.cm.tp << " fp=" << r.cm.fp << " tn=" << r.cm.tn
      << " fn=" << r.cm.fn
      << " null_ba=" << format_double(r.null_balanced_accuracy)
      << " seed=" << r.seed << '\n';
}

void write_period_header(std::ostream& out) {
  out << "protocol,classifier,feature_set,month,rows,tp,fp,tn,fn,ba,f1,auc\n";
}

void write_period_metrics(std::ostream& out, metrics_report const& r) {
  auto const opt = [](std::optional<double> v) {
    return v ? format_double(*v) : std::string{};
  };
  for (auto const& p : r.per_period) {
    csv::write_row(out, {std::string{to_string(r.kind)}, r.classifier,
                         r.feature_set, p.month.str(), std::to_string(p.rows),
                         std::to_string(p.cm.tp), std::to_string(p.cm.fp),
                         std::to_string(p.cm.tn), std::to_string(p.cm.fn),
                         opt(p.balanced_accuracy), opt(p.f1), opt(p.roc_auc)});
  }
}

std::vector<report_record> read_report_records(std::istream& in) {
  std::vector<report_record> out;
  csv::line_reader reader{in};
  std::string line;
  while (reader.next(line)) {
    std::map<std::string, std::string> kv;
    std::istringstream tokens{line};
    std::string tok;
    while (tokens >> tok) {
      auto const eq = tok.find('=');
      if (eq == std::string::npos) {
        throw format_error(fmt::format("report line {}: bad token \"{}\"",
                                       reader.line_number(), tok));
      }
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto const num = [&](std::string const& key) {
      auto const v = parse_double(kv[key]);
      if (!v) {
        throw format_error(fmt::format("report line {}: bad or missing {}",
                                       reader.line_number(), key));
      }
      return *v;
    };
    out.push_back({kv["protocol"], kv["classifier"], kv["feature_set"],
                   num("ba"), num("f1"), num("auc")});
  }
  return out;
}

void write_metric_matrix(std::ostream& out,
                         std::span<report_record const> records,
                         std::string_view protocol_name,
                         std::string_view field) {
  if (field != "ba" && field != "f1" && field != "auc") {
    throw std::invalid_argument(
        fmt::format("unknown metric field \"{}\" (ba, f1, auc)", field));
  }
  std::vector<std::string> classifiers, sets;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (auto const& r : records) {
    if (r.protocol != protocol_name) {
      continue;
    }
    if (std::find(begin(classifiers), end(classifiers), r.classifier) ==
        end(classifiers)) {
      classifiers.push_back(r.classifier);
    }
    if (std::find(begin(sets), end(sets), r.feature_set) == end(sets)) {
      sets.push_back(r.feature_set);
    }
    cells[{r.classifier, r.feature_set}] = field == "ba"   ? r.balanced_accuracy
                                           : field == "f1" ? r.f1
                                                           : r.roc_auc;
  }
  std::vector<std::string> header{"classifier"};
  for (auto s : sets) {
    std::transform(begin(s), end(s), begin(s),
                   [](unsigned char c) { return std::toupper(c); });
    header.push_back(std::move(s));
  }
  csv::write_row(out, header);
  for (auto const& c : classifiers) {
    std::vector<std::string> row{c};
    for (auto const& s : sets) {
      auto const it = cells.find({c, s});
      row.push_back(it == end(cells) ? "" : fmt::format("{:.3f}", it->second));
    }
    csv::write_row(out, row);
  }
}

void write_plan(std::ostream& out, protocol_plan const& plan) {
  out << "plan " << to_string(plan.kind) << ' ' << plan.seed << ' '
      << plan.parts.size() << '\n';
  auto const indices = [&](std::string_view tag,
                           std::vector<std::size_t> const& v) {
    out << tag << ' ' << v.size();
    for (auto const i : v) {
      out << ' ' << i;
    }
    out << '\n';
  };
  for (auto const& p : plan.parts) {
    out << "part " << (p.period ? p.period->str() : std::string{"-"}) << '\n';
    indices("train", p.train);
    indices("test", p.test);
  }
}

protocol_plan read_plan(std::istream& in) {
  auto const fail = [] { return format_error("plan: malformed record"); };
  std::string tag, kind;
  std::size_t parts = 0;
  protocol_plan plan;
  // Skip manifest lines.
  while (in >> std::ws && in.peek() == '#') {
    std::string skip;
    std::getline(in, skip);
  }
  if (!(in >> tag >> kind >> plan.seed >> parts) || tag != "plan") {
    throw fail();
  }
  plan.kind = parse_protocol(kind);
  auto const indices = [&](std::string_view want) {
    std::string t;
    std::size_t n = 0;
    if (!(in >> t >> n) || t != want) {
      throw fail();
    }
    std::vector<std::size_t> v(n);
    for (auto& i : v) {
      if (!(in >> i)) {
        throw fail();
      }
    }
    return v;
  };
  for (std::size_t k = 0; k < parts; ++k) {
    std::string period;
    if (!(in >> tag >> period) || tag != "part") {
      throw fail();
    }
    protocol_plan::part p;
    if (period != "-") {
      p.period = month_key::parse(period);
    }
    p.train = indices("train");
    p.test = indices("test");
    plan.parts.push_back(std::move(p));
  }
  return plan;
}

}  // namespace delaynet
