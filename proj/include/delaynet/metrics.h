#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace delaynet {

// Positive class: significantly delayed / removed.
struct confusion_matrix {
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t tn{0};
  std::size_t fn{0};

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(bool truth, bool predicted);

  friend bool operator==(confusion_matrix const&,
                         confusion_matrix const&) = default;
};

confusion_matrix confusion(std::span<std::uint8_t const> truth,
                           std::span<std::uint8_t const> predicted);

// Mean of per-class recalls. Throws data_error when a class is absent from
// the truth.
double balanced_accuracy(confusion_matrix const& cm);

// 2tp / (2tp + fp + fn). Throws data_error when tp + fp + fn = 0.
double f1(confusion_matrix const& cm);

double accuracy(confusion_matrix const& cm);

// Mann-Whitney rank statistic with mid-ranks for ties. Throws data_error
// unless both classes are present.
double roc_auc(std::span<double const> scores,
               std::span<std::uint8_t const> labels);

// Same quantities, std::nullopt where undefined.
std::optional<double> try_balanced_accuracy(confusion_matrix const& cm);
std::optional<double> try_f1(confusion_matrix const& cm);
std::optional<double> try_roc_auc(std::span<double const> scores,
                                  std::span<std::uint8_t const> labels);

struct null_prediction {
  bool predicted_class{false};
  confusion_matrix cm;
  double accuracy{0.0};
  std::optional<double> balanced_accuracy;  // absent for single-class tests
};

// Majority class of `train` (ties predict negative), scored on `test`.
// Throws std::invalid_argument when either side is empty.
null_prediction null_baseline(std::span<std::uint8_t const> train,
                              std::span<std::uint8_t const> test);

}  // namespace delaynet
