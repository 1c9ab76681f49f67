#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "delaynet/features.h"
#include "delaynet/month.h"

namespace delaynet {

// Row-major feature matrix with a binary label and a month tag per row.
class labeled_dataset {
public:
  labeled_dataset() = default;
  explicit labeled_dataset(std::vector<std::string> feature_names);

  std::size_t size() const { return labels_.size(); }
  std::size_t width() const { return names_.size(); }
  bool empty() const { return labels_.empty(); }

  std::vector<std::string> const& feature_names() const { return names_; }
  std::span<double const> row(std::size_t i) const {
    return {values_.data() + i * width(), width()};
  }
  double value(std::size_t i, std::size_t f) const {
    return values_[i * width() + f];
  }
  bool label(std::size_t i) const { return labels_[i] != 0; }
  month_key month(std::size_t i) const { return months_[i]; }

  std::vector<std::uint8_t> const& labels() const { return labels_; }
  std::vector<month_key> const& months() const { return months_; }
  std::vector<double> const& values() const { return values_; }

  void add_row(month_key m, std::span<double const> values, bool label);
  void set_label(std::size_t i, bool label) { labels_[i] = label ? 1 : 0; }
  void set_value(std::size_t i, std::size_t f, double v) {
    values_[i * width() + f] = v;
  }

  labeled_dataset subset(std::span<std::size_t const> rows) const;
  // Throws std::invalid_argument on an unknown column name.
  labeled_dataset select_columns(std::span<std::string const> names) const;

  // Ascending distinct months.
  std::vector<month_key> distinct_months() const;
  std::size_t positives() const;

private:
  std::vector<std::string> names_;
  std::vector<month_key> months_;
  std::vector<double> values_;
  std::vector<std::uint8_t> labels_;
};

// Labelled rows of a feature table restricted to `sets`; unlabelled rows
// are dropped.
labeled_dataset to_dataset(feature_table const& t,
                           std::span<feature_set const> sets);

struct split_plan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed{0};
  double train_fraction{0.7};
  std::vector<std::string> warnings;
};

// Within each month, floor(fraction * n) rows (at least 1, and at most n-1
// when n >= 2) are drawn into train; the rest go to test.
split_plan time_based_split(labeled_dataset const& ds,
                            double train_fraction = 0.7,
                            std::uint64_t seed = 0);

// Keeps every minority row and a uniform sample (without replacement) of
// the majority class of equal size. Returned indices are ascending.
// Throws data_error when `rows` holds a single class.
std::vector<std::size_t> random_undersample(labeled_dataset const& ds,
                                            std::span<std::size_t const> rows,
                                            std::uint64_t seed);

// Fold id (0..k-1) per row; each class is dealt round-robin after a shuffle,
// so per-fold class counts differ by at most one.
std::vector<std::size_t> stratified_kfold(std::span<std::uint8_t const> labels,
                                          std::size_t k, std::uint64_t seed);

}  // namespace delaynet
