#include "delaynet/metrics.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

#include "delaynet/common.h"

namespace delaynet {

void confusion_matrix::add(bool truth, bool predicted) {
  if (truth) {
    ++(predicted ? tp : fn);
  } else {
    ++(predicted ? fp : tn);
  }
}

confusion_matrix confusion(std::span<std::uint8_t const> truth,
                           std::span<std::uint8_t const> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  confusion_matrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cm.add(truth[i] != 0, predicted[i] != 0);
  }
  return cm;
}

std::optional<double> try_balanced_accuracy(confusion_matrix const& cm) {
  auto const p = cm.tp + cm.fn;
  auto const n = cm.tn + cm.fp;
  if (p == 0 || n == 0) {
    return std::nullopt;
  }
  return 0.5 * (static_cast<double>(cm.tp) / static_cast<double>(p) +
                static_cast<double>(cm.tn) / static_cast<double>(n));
}

std::optional<double> try_f1(confusion_matrix const& cm) {
  auto const den = 2 * cm.tp + cm.fp + cm.fn;
  if (den == 0) {
    return std::nullopt;
  }
  return 2.0 * static_cast<double>(cm.tp) / static_cast<double>(den);
}

double balanced_accuracy(confusion_matrix const& cm) {
  if (auto const v = try_balanced_accuracy(cm)) {
    return *v;
  }
  throw data_error("balanced accuracy undefined: a class is absent");
}

double f1(confusion_matrix const& cm) {
  if (auto const v = try_f1(cm)) {
    return *v;
  }
  throw data_error("F1 undefined: no positives predicted or present");
}

double accuracy(confusion_matrix const& cm) {
  if (cm.total() == 0) {
    throw data_error("accuracy undefined on an empty set");
  }
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

std::optional<double> try_roc_auc(std::span<double const> scores,
                                  std::span<std::uint8_t const> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_auc: length mismatch");
  }
  auto const n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(begin(order), end(order), std::size_t{0});
  std::sort(begin(order), end(order),
            [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Sum of (mid-)ranks of positives; ranks doubled to stay integral.
  std::uint64_t rank2_sum = 0;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    auto j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      ++j;
    }
    auto const mid2 = static_cast<std::uint64_t>(i + 1 + j);
    for (auto k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        rank2_sum += mid2;
        ++pos;
      }
    }
    i = j;
  }
  auto const neg = n - pos;
  if (pos == 0 || neg == 0) {
    return std::nullopt;
  }
  auto const u2 = rank2_sum - pos * (pos + 1);
  return static_cast<double>(u2) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double roc_auc(std::span<double const> scores,
               std::span<std::uint8_t const> labels) {
  if (auto const v = try_roc_auc(scores, labels)) {
    return *v;
  }
  throw data_error("ROC AUC undefined: both classes must be present");
}

null_prediction null_baseline(std::span<std::uint8_t const> train,
                              std::span<std::uint8_t const> test) {
  if (train.empty() || test.empty()) {
    throw std::invalid_argument("null baseline needs train and test labels");
  }
  auto const pos = static_cast<std::size_t>(
      std::count_if(begin(train), end(train), [](auto v) { return v != 0; }));
  null_prediction out;
  out.predicted_class = 2 * pos > train.size();
  for (auto const t : test) {
    out.cm.add(t != 0, out.predicted_class);
  }
  out.accuracy = accuracy(out.cm);
  out.balanced_accuracy = try_balanced_accuracy(out.cm);
  return out;
}

}  // namespace delaynet
