#include "delaynet/dataset.h"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

#include "delaynet/common.h"

namespace delaynet {

labeled_dataset::labeled_dataset(std::vector<std::string> feature_names)
    : names_{std::move(feature_names)} {}

void labeled_dataset::add_row(month_key m, std::span<double const> values,
                              bool label) {
  if (values.size() != width()) {
    throw std::invalid_argument(fmt::format(
        "add_row: {} values for {} columns", values.size(), width()));
  }
  months_.push_back(m);
  values_.insert(end(values_), begin(values), end(values));
  labels_.push_back(label ? 1 : 0);
}

labeled_dataset labeled_dataset::subset(
    std::span<std::size_t const> rows) const {
  labeled_dataset out{names_};
  out.months_.reserve(rows.size());
  out.labels_.reserve(rows.size());
  out.values_.reserve(rows.size() * width());
  for (auto const r : rows) {
    if (r >= size()) {
      throw std::out_of_range("subset: row index out of range");
    }
    out.add_row(months_[r], row(r), label(r));
  }
  return out;
}

labeled_dataset labeled_dataset::select_columns(
    std::span<std::string const> names) const {
  std::vector<std::size_t> cols;
  for (auto const& n : names) {
    auto const it = std::find(begin(names_), end(names_), n);
    if (it == end(names_)) {
      throw std::invalid_argument(fmt::format("unknown column \"{}\"", n));
    }
    cols.push_back(static_cast<std::size_t>(it - begin(names_)));
  }
  labeled_dataset out{{begin(names), end(names)}};
  std::vector<double> buf(cols.size());
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      buf[c] = value(r, cols[c]);
    }
    out.add_row(months_[r], buf, label(r));
  }
  return out;
}

std::vector<month_key> labeled_dataset::distinct_months() const {
  std::vector<month_key> out{begin(months_), end(months_)};
  std::sort(begin(out), end(out));
  out.erase(std::unique(begin(out), end(out)), end(out));
  return out;
}

std::size_t labeled_dataset::positives() const {
  return static_cast<std::size_t>(
      std::count(begin(labels_), end(labels_), std::uint8_t{1}));
}

labeled_dataset to_dataset(feature_table const& t,
                           std::span<feature_set const> sets) {
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (auto const s : sets) {
    for (auto const n : component_names(s)) {
      auto const it = std::find(begin(t.columns), end(t.columns), n);
      if (it == end(t.columns)) {
        throw data_error(fmt::format(
            "feature table has no column \"{}\" (set {})", n, to_string(s)));
      }
      cols.push_back(static_cast<std::size_t>(it - begin(t.columns)));
      names.emplace_back(n);
    }
  }
  labeled_dataset ds{names};
  std::vector<double> buf(cols.size());
  for (auto const& r : t.rows) {
    if (!r.label) {
      continue;
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      buf[c] = r.values.at(cols[c]);
    }
    ds.add_row(r.month, buf, *r.label);
  }
  return ds;
}

split_plan time_based_split(labeled_dataset const& ds, double train_fraction,
                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  split_plan plan;
  plan.seed = seed;
  plan.train_fraction = train_fraction;

  std::map<month_key, std::vector<std::size_t>> by_month;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_month[ds.month(i)].push_back(i);
  }
  std::uint64_t k = 0;
  for (auto& [m, idx] : by_month) {
    std::mt19937_64 rng{derive_seed(seed, k++)};
    std::shuffle(begin(idx), end(idx), rng);
    auto const n = idx.size();
    auto take = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
    take = std::max<std::size_t>(take, 1);
    if (n >= 2) {
      take = std::min(take, n - 1);
    } else {
      plan.warnings.push_back(
          fmt::format("{}: single row, no test rows", m.str()));
    }
    plan.train.insert(end(plan.train), begin(idx), begin(idx) + take);
    plan.test.insert(end(plan.test), begin(idx) + take, end(idx));
  }
  std::sort(begin(plan.train), end(plan.train));
  std::sort(begin(plan.test), end(plan.test));
  return plan;
}

std::vector<std::size_t> random_undersample(labeled_dataset const& ds,
                                            std::span<std::size_t const> rows,
                                            std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (auto const r : rows) {
    (ds.label(r) ? pos : neg).push_back(r);
  }
  if (pos.empty() || neg.empty()) {
    throw data_error(fmt::format(
        "cannot undersample: training rows hold a single class ({} positive, "
        "{} negative)",
        pos.size(), neg.size()));
  }
  auto& minority = pos.size() <= neg.size() ? pos : neg;
  auto& majority = pos.size() <= neg.size() ? neg : pos;
  std::mt19937_64 rng{seed};
  std::shuffle(begin(majority), end(majority), rng);
  majority.resize(minority.size());

  std::vector<std::size_t> out;
  out.reserve(2 * minority.size());
  out.insert(end(out), begin(minority), end(minority));
  out.insert(end(out), begin(majority), end(majority));
  std::sort(begin(out), end(out));
  return out;
}

std::vector<std::size_t> stratified_kfold(std::span<std::uint8_t const> labels,
                                          std::size_t k, std::uint64_t seed) {
  if (k < 2) {
    throw std::invalid_argument("stratified_kfold: k must be >= 2");
  }
  std::vector<std::size_t> fold(labels.size(), 0);
  std::mt19937_64 rng{seed};
  std::size_t next = 0;
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if ((labels[i] != 0) == (cls != 0)) {
        idx.push_back(i);
      }
    }
    std::shuffle(begin(idx), end(idx), rng);
    for (auto const i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

}  // namespace delaynet
