#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fmt/core.h"

#include "delaynet/common.h"
#include "delaynet/csv.h"
#include "delaynet/dataset.h"
#include "delaynet/evaluation.h"
#include "delaynet/features.h"
#include "delaynet/ingest.h"
#include "delaynet/models.h"
#include "delaynet/search.h"
#include "delaynet/snapshot.h"
#include "delaynet/synth.h"

namespace fs = std::filesystem;
using namespace delaynet;

namespace {

constexpr auto version = "1";

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct run_config {
  std::string config_path;
  std::uint64_t seed{1};
  std::string out{"out"};
  std::vector<std::string> inputs;
  std::string kind{"rail"};
  std::string stations;
  std::int64_t min_rides{4};
  double percentile{0.5};
  std::string feature_sets{"tf,wtf,ncm"};
  std::string classifiers{
      "adaboost,decision_tree,gradient_boosting,logistic,random_forest,"
      "xgboost"};
  std::string protocol_name{"simultaneous"};
  std::string train_months;
  std::string test_months;
  double train_fraction{0.7};
  bool pooled{false};
  std::size_t search_iter{25};
  std::size_t search_folds{10};
  std::size_t importance_repeats{5};
  std::string importance_metric_name{"ba"};
  std::size_t row_limit{0};
  std::vector<std::string> params;
  std::size_t synth_months{24};
  std::size_t synth_nodes{60};
  double synth_edge_probability{0.5};
  std::string synth_signal{"deg_src"};
  double synth_strength{4.0};
  bool synth_stationary{true};

  std::string canonical() const {
    std::ostringstream o;
    // Names only; contents enter through the inputs digest.
    o << "seed=" << seed << "\ninputs=";
    for (auto const& i : inputs) {
      o << fs::path{i}.filename().string() << ';';
    }
    o << "\nkind=" << kind << "\nstations=" << stations
      << "\nmin_rides=" << min_rides
      << "\npercentile=" << format_double(percentile)
      << "\nfeature_sets=" << feature_sets << "\nclassifiers=" << classifiers
      << "\nprotocol=" << protocol_name << "\ntrain_months=" << train_months
      << "\ntest_months=" << test_months
      << "\ntrain_fraction=" << format_double(train_fraction)
      << "\npooled=" << pooled << "\nsearch_iter=" << search_iter
      << "\nsearch_folds=" << search_folds
      << "\nimportance_repeats=" << importance_repeats
      << "\nimportance_metric=" << importance_metric_name
      << "\nrow_limit=" << row_limit << "\nparams=";
    for (auto const& p : params) {
      o << p << ';';
    }
    o << "\nsynth=" << synth_months << ',' << synth_nodes << ','
      << format_double(synth_edge_probability) << ',' << synth_signal << ','
      << format_double(synth_strength) << ',' << synth_stationary << '\n';
    return o.str();
  }

  std::string digest() const { return hex64(fnv1a(canonical())); }
};

// Field-level validation; every problem is reported at once.
void validate(run_config const& c) {
  std::vector<std::string> problems;
  auto const check = [&](bool ok, std::string msg) {
    if (!ok) {
      problems.push_back(std::move(msg));
    }
  };
  check(c.kind == "rail" || c.kind == "air" || c.kind == "synthetic",
        "kind: must be rail, air or synthetic");
  check(c.percentile > 0.0 && c.percentile < 1.0,
        "percentile: must lie in (0, 1)");
  check(c.min_rides >= 1, "min-rides: must be >= 1");
  check(c.train_fraction > 0.0 && c.train_fraction < 1.0,
        "train-fraction: must lie in (0, 1)");
  check(c.search_folds >= 2, "search-folds: must be >= 2");
  check(c.search_iter >= 1, "search-iter: must be >= 1");
  check(c.importance_repeats >= 1, "importance-repeats: must be >= 1");
  check(c.importance_metric_name == "ba" || c.importance_metric_name == "auc",
        "importance-metric: must be ba or auc");
  for (auto const& i : c.inputs) {
    check(fs::exists(i), fmt::format("input: {} does not exist", i));
  }
  check(c.stations.empty() || fs::exists(c.stations),
        fmt::format("stations: {} does not exist", c.stations));
  auto const parses = [&](std::string_view field, auto&& fn) {
    try {
      fn();
    } catch (std::invalid_argument const& e) {
      problems.push_back(fmt::format("{}: {}", field, e.what()));
    }
  };
  parses("feature-sets", [&] { parse_feature_sets(c.feature_sets); });
  parses("classifiers", [&] {
    for (auto const& a : split(c.classifiers, ',')) {
      parse_algorithm(a);
    }
  });
  parses("protocol", [&] { parse_protocol(c.protocol_name); });
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (auto const& p : problems) {
      msg += "\n  " + p;
    }
    throw usage_error(msg);
  }
}

// --- artifacts ----------------------------------------------------------------

struct stage_context {
  run_config const& cfg;
  fs::path out;
  std::string inputs_digest{hex64(fnv1a(""))};

  fs::path path(std::string_view name) const { return out / name; }

  std::string manifest(std::string_view stage) const {
    return fmt::format("# delaynet stage={} config={} inputs={} seed={} "
                       "version={}\n",
                       stage, cfg.digest(), inputs_digest, cfg.seed, version);
  }

  void write(std::string_view name, std::string_view stage,
             std::string const& body) const {
    fs::create_directories(path(name).parent_path());
    std::ofstream f{path(name), std::ios::binary};
    if (!f) {
      throw std::runtime_error(
          fmt::format("cannot write {}", path(name).string()));
    }
    f << manifest(stage) << body;
  }
};

std::string slurp(fs::path const& p) {
  std::ifstream f{p, std::ios::binary};
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Reads a stage input; a missing file names the command that produces it.
std::string require_artifact(stage_context& ctx, std::string_view name,
                             std::string_view producer) {
  auto const p = ctx.path(name);
  if (!fs::exists(p)) {
    throw usage_error(fmt::format(
        "missing {}: run `delaynet {}` first (same --out)", p.string(),
        producer));
  }
  auto body = slurp(p);
  ctx.inputs_digest = hex64(fnv1a(body, fnv1a(ctx.inputs_digest)));
  return body;
}

std::vector<month_key> parse_months(std::string_view spec) {
  std::vector<month_key> out;
  for (auto const& part : split(spec, ',')) {
    if (part.empty()) {
      continue;
    }
    auto const dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(month_key::parse(part));
      continue;
    }
    auto m = month_key::parse(part.substr(0, dots));
    auto const last = month_key::parse(part.substr(dots + 2));
    if (last < m) {
      throw std::invalid_argument(fmt::format("empty month range {}", part));
    }
    for (; m <= last; m = m.successor()) {
      out.push_back(m);
    }
  }
  return out;
}

std::vector<algorithm> roster(run_config const& c) {
  std::vector<algorithm> out;
  for (auto const& a : split(c.classifiers, ',')) {
    out.push_back(parse_algorithm(a));
  }
  return out;
}

// --param entries look like "<classifier>.<name>=<value>".
model_spec spec_for(run_config const& c, algorithm a) {
  hyperparameters overrides;
  for (auto const& p : c.params) {
    auto const dot = p.find('.');
    auto const eq = p.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
      throw usage_error(fmt::format(
          "param: \"{}\" is not <classifier>.<name>=<value>", p));
    }
    if (parse_algorithm(p.substr(0, dot)) != a) {
      continue;
    }
    overrides[p.substr(dot + 1, eq - dot - 1)] =
        parse_hyper_value(p.substr(eq + 1));
  }
  try {
    return make_spec(a, overrides, c.seed);
  } catch (std::invalid_argument const& e) {
    throw usage_error(fmt::format("param: {}", e.what()));
  }
}

std::string model_file(algorithm a, feature_set s) {
  return fmt::format("models/{}.{}.txt", to_string(a), to_string(s));
}

// --- stages --------------------------------------------------------------------

void cmd_synth(stage_context& ctx) {
  auto const& c = ctx.cfg;
  synth_config sc;
  sc.months = c.synth_months;
  sc.nodes = c.synth_nodes;
  sc.edge_probability = c.synth_edge_probability;
  sc.signal_feature = c.synth_signal;
  sc.signal_strength = c.synth_strength;
  sc.stationary = c.synth_stationary;
  sc.seed = c.seed;
  try {
    sc.validate();
  } catch (std::invalid_argument const& e) {
    throw usage_error(e.what());
  }
  auto const corpus = generate(sc);
  std::ostringstream body;
  write_aggregates(body, corpus.aggregates);
  ctx.write("synthetic.csv", "synth", body.str());
  std::cout << fmt::format("synthetic corpus: {} months, {} labelled edges, "
                           "generator balanced accuracy {:.4f}\n",
                           corpus.snapshots.size(), corpus.aggregates.size(),
                           bayes_balanced_accuracy(corpus));
}

void cmd_ingest(stage_context& ctx) {
  auto const& c = ctx.cfg;
  if (c.inputs.empty()) {
    throw usage_error("input: ingest needs at least one --input file");
  }
  parse_options opt;
  if (c.row_limit > 0) {
    opt.row_limit = c.row_limit;
  }
  std::vector<monthly_edge_aggregate> aggregates;
  std::string input_bytes;
  if (c.kind == "rail") {
    std::vector<stop_record> records;
    for (auto const& in : c.inputs) {
      auto archive = parse_service_archive(fs::path{in}, opt);
      for (auto const& e : archive.report.errors) {
        std::cerr << fmt::format("{}:{}: {}\n", in, e.line, e.message);
      }
      records.insert(end(records),
                     std::make_move_iterator(begin(archive.records)),
                     std::make_move_iterator(end(archive.records)));
      input_bytes += slurp(in);
    }
    clean_report cr;
    auto cleaned = clean_services(std::move(records), {}, &cr);
    extract_report er;
    auto const trajectories = extract_trajectories(cleaned, &er);
    std::cerr << fmt::format(
        "kept {} stops (dropped {} by company, {} by type); {} trajectories "
        "from {} services\n",
        cr.kept, cr.dropped_company, cr.dropped_type, er.trajectories,
        er.services);
    ctx.inputs_digest = hex64(fnv1a(input_bytes));
    std::ostringstream tb;
    write_trajectories(tb, trajectories);
    ctx.write("trajectories.csv", "ingest", tb.str());
    aggregates = aggregate_monthly(trajectories);
  } else if (c.kind == "air") {
    std::vector<flight_record> flights;
    for (auto const& in : c.inputs) {
      std::ifstream f{in};
      parse_report report;
      auto rows = parse_flights(f, opt, &report);
      for (auto const& e : report.errors) {
        std::cerr << fmt::format("{}:{}: {}\n", in, e.line, e.message);
      }
      flights.insert(end(flights), begin(rows), end(rows));
      input_bytes += slurp(in);
    }
    flight_clean_report fr;
    flights = clean_flights(std::move(flights), &fr);
    std::cerr << fmt::format("kept {} flight rows ({} self-loops, {} zero "
                             "weight dropped)\n",
                             fr.kept, fr.dropped_self_loop,
                             fr.dropped_zero_weight);
    ctx.inputs_digest = hex64(fnv1a(input_bytes));
    aggregates = aggregate_flights(flights);
  } else {
    for (auto const& in : c.inputs) {
      std::ifstream f{in};
      auto rows = read_aggregates(f);
      aggregates.insert(end(aggregates), begin(rows), end(rows));
      input_bytes += slurp(in);
    }
    ctx.inputs_digest = hex64(fnv1a(input_bytes));
  }
  std::ostringstream body;
  write_aggregates(body, aggregates);
  ctx.write("aggregates.csv", "ingest", body.str());
  std::cerr << fmt::format("{} monthly edge aggregates\n", aggregates.size());
}

void cmd_label(stage_context& ctx) {
  auto const& c = ctx.cfg;
  std::istringstream in{require_artifact(ctx, "aggregates.csv", "ingest")};
  auto aggregates = read_aggregates(in);

  std::set<std::string> stations;
  if (!c.stations.empty()) {
    std::ifstream f{c.stations};
    std::string line;
    while (std::getline(f, line)) {
      auto const s = trim(line);
      if (!s.empty() && s.front() != '#') {
        stations.emplace(s);
      }
    }
  }

  std::vector<monthly_edge_aggregate> labeled;
  std::vector<graph_snapshot> snapshots;
  std::ostringstream summary;
  if (c.kind == "synthetic") {
    // Planted labels are kept, and the graphs must stay the generator's.
    labeled = std::move(aggregates);
    for (auto const& a : labeled) {
      if (!a.label) {
        throw data_error(fmt::format("synthetic row {} {} -> {} has no label",
                                     a.month.str(), a.source, a.target));
      }
    }
    snapshots = build_graphs(labeled);
    summary << "mode=planted\n";
  } else {
    filter_report fr;
    auto filtered = apply_filters(std::move(aggregates), c.min_rides,
                                  stations.empty() ? nullptr : &stations, &fr);
    summary << "kept=" << fr.kept << "\ndropped_min_rides="
            << fr.dropped_min_rides << "\ndropped_foreign=" << fr.dropped_foreign
            << '\n';
    if (c.kind == "rail") {
      auto const threshold = significant_delay_threshold(filtered, c.percentile);
      label_significant_delay(filtered, threshold);
      labeled = std::move(filtered);
      snapshots = build_graphs(labeled);
      summary << "mode=significant_delay\npercentile="
              << format_double(c.percentile)
              << "\nthreshold=" << format_double(threshold) << '\n';
      std::cout << fmt::format("significant-delay threshold at percentile "
                               "{}: {:.4f}\n",
                               c.percentile, threshold);
    } else {
      snapshots = build_graphs(filtered);
      labeled = label_removed_links(snapshots);
      summary << "mode=removed_links\n";
    }
  }
  std::size_t positives = 0;
  for (auto const& a : labeled) {
    positives += a.label.value_or(false) ? 1 : 0;
  }
  summary << "rows=" << labeled.size() << "\npositives=" << positives << '\n';

  std::ostringstream lb, sb;
  write_aggregates(lb, labeled);
  write_snapshots(sb, snapshots);
  ctx.write("labeled.csv", "label", lb.str());
  ctx.write("snapshots.csv", "label", sb.str());
  ctx.write("label_summary.txt", "label", summary.str());
}

void cmd_featurize(stage_context& ctx) {
  std::istringstream lin{require_artifact(ctx, "labeled.csv", "label")};
  std::istringstream sin{require_artifact(ctx, "snapshots.csv", "label")};
  auto const rows = read_aggregates(lin);
  auto const snapshots = read_snapshots(sin);
  auto const sets = parse_feature_sets(ctx.cfg.feature_sets);
  auto const table = featurize(snapshots, rows, sets);
  std::ostringstream body;
  write_feature_table(body, table);
  ctx.write("features.csv", "featurize", body.str());
  std::cerr << fmt::format("{} feature rows, {} columns\n", table.rows.size(),
                           table.columns.size());
}

feature_table load_features(stage_context& ctx) {
  std::istringstream in{require_artifact(ctx, "features.csv", "featurize")};
  return read_feature_table(in);
}

labeled_dataset dataset_for(feature_table const& t, feature_set s) {
  try {
    std::vector<feature_set> const one{s};
    return to_dataset(t, one);
  } catch (data_error const& e) {
    throw usage_error(fmt::format(
        "{}: rerun `delaynet featurize` with this feature set", e.what()));
  }
}

protocol_plan make_plan(run_config const& c, labeled_dataset const& ds) {
  auto const kind = parse_protocol(c.protocol_name);
  if (kind == protocol::simultaneous) {
    return plan_simultaneous(ds, c.seed, {c.train_fraction, !c.pooled});
  }
  auto months = default_nonsimultaneous_months(ds, c.train_fraction);
  if (!c.train_months.empty()) {
    months.first = parse_months(c.train_months);
  }
  if (!c.test_months.empty()) {
    months.second = parse_months(c.test_months);
  }
  return plan_nonsimultaneous(ds, months.first, months.second, c.seed);
}

void cmd_train(stage_context& ctx) {
  auto const& c = ctx.cfg;
  auto const table = load_features(ctx);
  auto const sets = parse_feature_sets(c.feature_sets);
  auto const algos = roster(c);

  std::optional<protocol_plan> plan;
  for (auto const s : sets) {
    auto const ds = dataset_for(table, s);
    if (!plan) {
      plan = make_plan(c, ds);
      for (auto const& w : plan->warnings) {
        std::cerr << "warning: " << w << '\n';
      }
      std::ostringstream pb;
      write_plan(pb, *plan);
      ctx.write("plan.txt", "train", pb.str());
    }
    for (auto const a : algos) {
      std::vector<std::string> warnings;
      auto const models = fit_plan(*plan, ds, spec_for(c, a), &warnings);
      for (auto const& w : warnings) {
        std::cerr << fmt::format("warning: {} {}: {}\n", to_string(a),
                                 to_string(s), w);
      }
      std::ostringstream mb;
      mb << "models " << models.size() << '\n';
      for (auto const& m : models) {
        if (m) {
          mb << "slot model\n";
          m->save(mb);
        } else {
          mb << "slot none\n";
        }
      }
      ctx.write(model_file(a, s), "train", mb.str());
      std::cerr << fmt::format("trained {} on {} ({} parts)\n", to_string(a),
                               to_string(s), models.size());
    }
  }
}

std::vector<std::optional<trained_model>> load_models(stage_context& ctx,
                                                      algorithm a,
                                                      feature_set s) {
  std::istringstream in{require_artifact(ctx, model_file(a, s), "train")};
  std::string line;
  while (in.peek() == '#') {
    std::getline(in, line);
  }
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "models") {
    throw format_error(fmt::format("{}: bad model file", model_file(a, s)));
  }
  std::vector<std::optional<trained_model>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::string kind;
    in >> tag >> kind;
    if (tag != "slot") {
      throw format_error(fmt::format("{}: bad model slot", model_file(a, s)));
    }
    if (kind == "model") {
      out.emplace_back(trained_model::load(in));
    } else {
      out.emplace_back();
    }
  }
  return out;
}

protocol_plan load_plan(stage_context& ctx) {
  std::istringstream in{require_artifact(ctx, "plan.txt", "train")};
  return read_plan(in);
}

void cmd_evaluate(stage_context& ctx) {
  auto const& c = ctx.cfg;
  auto const table = load_features(ctx);
  auto const plan = load_plan(ctx);
  auto const sets = parse_feature_sets(c.feature_sets);
  auto const algos = roster(c);

  std::ostringstream records, periods;
  write_period_header(periods);
  std::vector<report_record> parsed;
  for (auto const a : algos) {
    for (auto const s : sets) {
      auto const ds = dataset_for(table, s);
      auto const models = load_models(ctx, a, s);
      auto r = evaluate_plan(plan, ds, models);
      r.classifier = std::string{to_string(a)};
      r.feature_set = std::string{to_string(s)};
      for (auto const& w : r.warnings) {
        std::cerr << fmt::format("warning: {} {}: {}\n", r.classifier,
                                 r.feature_set, w);
      }
      write_report_record(records, r);
      write_period_metrics(periods, r);
      parsed.push_back({std::string{to_string(r.kind)}, r.classifier,
                        r.feature_set, r.balanced_accuracy, r.f1, r.roc_auc});
    }
  }
  ctx.write("metrics.txt", "evaluate", records.str());
  ctx.write("metrics_by_month.csv", "evaluate", periods.str());
  auto const proto = std::string{to_string(plan.kind)};
  for (auto const field : {"ba", "f1", "auc"}) {
    std::ostringstream m;
    write_metric_matrix(m, parsed, proto, field);
    ctx.write(fmt::format("matrix_{}.csv", field), "evaluate", m.str());
    if (std::string_view{field} == "ba") {
      std::cout << proto << " balanced accuracy\n" << m.str();
    }
  }
}

void cmd_search(stage_context& ctx) {
  auto const& c = ctx.cfg;
  auto const table = load_features(ctx);
  auto const sets = parse_feature_sets(c.feature_sets);
  std::ostringstream best;
  for (auto const s : sets) {
    auto const ds = dataset_for(table, s);
    auto const split = time_based_split(ds, c.train_fraction, c.seed);
    auto const rows = random_undersample(ds, split.train, c.seed);
    auto const train_side = ds.subset(rows);
    for (auto const a : roster(c)) {
      auto const grid = default_grid(a);
      if (grid.empty()) {
        std::cerr << fmt::format("{} has no search grid; skipped\n",
                                 to_string(a));
        continue;
      }
      auto const base = spec_for(c, a);
      hyperparameters fixed;
      for (auto const& [k, v] : base.params) {
        fixed[k] = v;
      }
      auto const r = randomized_search_cv(a, grid, train_side, c.search_iter,
                                          c.search_folds, c.seed, fixed);
      for (auto const& w : r.warnings) {
        std::cerr << "warning: " << w << '\n';
      }
      std::ostringstream report;
      write_search_report(report, r);
      ctx.write(fmt::format("search/{}.{}.csv", to_string(a), to_string(s)),
                "search", report.str());
      best << "classifier=" << to_string(a) << " feature_set=" << to_string(s)
           << " mean_ba=" << format_double(r.table[r.best_index].mean_ba)
           << " params=" << to_string(r.table[r.best_index].config) << '\n';
    }
  }
  ctx.write("search/best.txt", "search", best.str());
  std::cout << best.str();
}

void cmd_importance(stage_context& ctx) {
  auto const& c = ctx.cfg;
  auto const table = load_features(ctx);
  auto const plan = load_plan(ctx);
  auto const metric = c.importance_metric_name == "auc"
                          ? importance_metric::roc_auc
                          : importance_metric::balanced_accuracy;
  std::ostringstream out;
  csv::write_row(out, {"classifier", "feature_set", "feature",
                       "mean_importance", "parts"});
  for (auto const a : roster(c)) {
    for (auto const s : parse_feature_sets(c.feature_sets)) {
      auto const ds = dataset_for(table, s);
      auto const models = load_models(ctx, a, s);
      std::vector<double> sum(ds.width(), 0.0);
      std::size_t parts = 0;
      for (std::size_t k = 0; k < plan.parts.size(); ++k) {
        auto const test = ds.subset(plan.parts[k].test);
        if (!models.at(k) || test.size() < 2) {
          continue;
        }
        auto const pos = test.positives();
        if (pos == 0 || pos == test.size()) {
          continue;
        }
        auto const imp = permutation_importance(
            *models[k], test, metric, c.importance_repeats,
            derive_seed(c.seed, k));
        for (std::size_t f = 0; f < imp.size(); ++f) {
          sum[f] += imp[f].mean;
        }
        ++parts;
      }
      for (std::size_t f = 0; f < ds.width(); ++f) {
        csv::write_row(
            out, {std::string{to_string(a)}, std::string{to_string(s)},
                  ds.feature_names()[f],
                  parts > 0 ? format_double(sum[f] / static_cast<double>(parts))
                            : "",
                  std::to_string(parts)});
      }
    }
  }
  ctx.write("importance.csv", "importance", out.str());
  std::cout << out.str();
}

// key=value lines become leading --key=value arguments, so that flags given
// on the command line (which come later) take precedence.
std::vector<std::string> config_arguments(std::string const& path) {
  std::ifstream f{path};
  if (!f) {
    throw usage_error(fmt::format("config: cannot open {}", path));
  }
  std::vector<std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    auto const t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == '[') {
      continue;
    }
    auto const eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw usage_error(fmt::format("config {}:{}: expected key=value", path, n));
    }
    auto key = std::string{trim(t.substr(0, eq))};
    std::replace(begin(key), end(key), '_', '-');
    if (key == "config") {
      throw usage_error(fmt::format("config {}:{}: nested config", path, n));
    }
    out.push_back(fmt::format("--{}={}", key, trim(t.substr(eq + 1))));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  run_config cfg;
  CLI::App app{"delaynet: transport network snapshots, edge features and "
               "delay classifiers"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  app.add_option("--config", cfg.config_path, "key=value config file");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--out", cfg.out, "artifact directory");
  app.add_option("--input", cfg.inputs, "input file(s)")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--kind", cfg.kind, "rail | air | synthetic");
  app.add_option("--stations", cfg.stations, "domestic station allowlist");
  app.add_option("--min-rides", cfg.min_rides, "minimum planned rides");
  app.add_option("--percentile", cfg.percentile, "delay label percentile");
  app.add_option("--feature-sets", cfg.feature_sets, "tf,wtf,ncm");
  app.add_option("--classifiers", cfg.classifiers, "classifier roster");
  app.add_option("--protocol", cfg.protocol_name,
                 "simultaneous | nonsimultaneous");
  app.add_option("--train-months", cfg.train_months,
                 "YYYY-MM list or YYYY-MM..YYYY-MM");
  app.add_option("--test-months", cfg.test_months,
                 "YYYY-MM list or YYYY-MM..YYYY-MM");
  app.add_option("--train-fraction", cfg.train_fraction);
  app.add_flag("--pooled", cfg.pooled,
                 "simultaneous: one model over all months");
  app.add_option("--search-iter", cfg.search_iter);
  app.add_option("--search-folds", cfg.search_folds);
  app.add_option("--importance-repeats", cfg.importance_repeats);
  app.add_option("--importance-metric", cfg.importance_metric_name, "ba | auc");
  app.add_option("--row-limit", cfg.row_limit, "0: unlimited");
  app.add_option("--param", cfg.params, "<classifier>.<name>=<value>")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--synth-months", cfg.synth_months);
  app.add_option("--synth-nodes", cfg.synth_nodes);
  app.add_option("--synth-edge-probability", cfg.synth_edge_probability);
  app.add_option("--synth-signal", cfg.synth_signal);
  app.add_option("--synth-strength", cfg.synth_strength);
  app.add_option("--synth-stationary", cfg.synth_stationary);

  std::vector<std::pair<CLI::App*, void (*)(stage_context&)>> commands{
      {app.add_subcommand("synth", "generate a planted-signal corpus"),
       cmd_synth},
      {app.add_subcommand("ingest", "parse and clean raw archives"),
       cmd_ingest},
      {app.add_subcommand("label", "filter, build snapshots and label edges"),
       cmd_label},
      {app.add_subcommand("featurize", "compute edge features"), cmd_featurize},
      {app.add_subcommand("train", "fit classifiers per protocol plan"),
       cmd_train},
      {app.add_subcommand("evaluate", "score fitted models"), cmd_evaluate},
      {app.add_subcommand("search", "randomized hyperparameter search"),
       cmd_search},
      {app.add_subcommand("importance", "permutation feature importance"),
       cmd_importance}};
  auto* pipeline =
      app.add_subcommand("pipeline", "ingest, label, featurize, train, evaluate");
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  try {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
      std::string_view const a{argv[i]};
      if (a == "--config" && i + 1 < argc) {
        auto const extra = config_arguments(argv[i + 1]);
        args.insert(begin(args), begin(extra), end(extra));
      } else if (a.starts_with("--config=")) {
        auto const extra = config_arguments(std::string{a.substr(9)});
        args.insert(begin(args), begin(extra), end(extra));
      }
    }
    for (int i = 1; i < argc; ++i) {
      args.emplace_back(argv[i]);
    }
    std::reverse(begin(args), end(args));  // CLI11 consumes from the back
    app.parse(args);
  } catch (CLI::ParseError const& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (usage_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    validate(cfg);
    stage_context ctx{cfg, fs::path{cfg.out}};
    fs::create_directories(ctx.out);
    if (pipeline->parsed()) {
      if (cfg.kind == "synthetic" && cfg.inputs.empty()) {
        stage_context s{cfg, ctx.out};
        cmd_synth(s);
        cfg.inputs.push_back((ctx.out / "synthetic.csv").string());
      }
      for (auto const step :
           {cmd_ingest, cmd_label, cmd_featurize, cmd_train, cmd_evaluate}) {
        stage_context s{cfg, ctx.out};
        step(s);
      }
      return 0;
    }
    for (auto const& [sub, fn] : commands) {
      if (sub->parsed()) {
        fn(ctx);
      }
    }
    return 0;
  } catch (usage_error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (std::invalid_argument const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (data_error const& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (format_error const& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 2;
  } catch (std::exception const& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
