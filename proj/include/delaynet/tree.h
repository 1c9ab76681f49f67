#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

namespace delaynet {

// Read-only row-major matrix.
struct matrix_view {
  std::span<double const> data;
  std::size_t rows{0};
  std::size_t cols{0};

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double const> row(std::size_t r) const {
    return data.subspan(r * cols, cols);
  }
};

enum class impurity { gini, entropy };

// How many features each split may look at.
struct max_features_rule {
  enum class kind { all, sqrt, log2, count, fraction } k{kind::all};
  double amount{0.0};

  std::size_t resolve(std::size_t width) const;
};

struct tree_node {
  int feature{-1};  // -1: leaf
  double threshold{0.0};
  int left{-1};
  int right{-1};
  double value{0.0};  // leaf: P(label) or additive leaf weight
  double cover{0.0};  // weighted sample count (hessian sum for boosting)
  std::size_t samples{0};
  int depth{0};

  bool is_leaf() const { return feature < 0; }
};

// Binary tree; internal nodes route x[feature] <= threshold to the left.
class decision_tree {
public:
  decision_tree() = default;
  explicit decision_tree(std::vector<tree_node> nodes)
      : nodes_{std::move(nodes)} {}

  double predict(std::span<double const> x) const;
  std::vector<tree_node> const& nodes() const { return nodes_; }
  int depth() const;
  std::size_t leaf_count() const;

  void save(std::ostream& out) const;
  static decision_tree load(std::istream& in);

private:
  std::vector<tree_node> nodes_;
};

struct cart_params {
  impurity criterion{impurity::gini};
  std::optional<int> max_depth;
  std::size_t min_samples_split{2};
  std::size_t min_samples_leaf{1};
  max_features_rule max_features;
};

// CART classification tree on `rows` (with repetition allowed via weights).
// Leaves hold the weighted fraction of positive labels.
decision_tree fit_cart(matrix_view x, std::span<std::uint8_t const> labels,
                       std::span<double const> weights,
                       std::span<std::size_t const> rows,
                       cart_params const& params, std::mt19937_64& rng);

struct gradient_tree_params {
  int max_depth{6};
  double min_child_weight{1.0};
  double lambda{1.0};
  double alpha{0.0};
  double gamma{0.0};
  std::size_t min_samples_split{2};
  std::size_t min_samples_leaf{1};
  max_features_rule max_features;
};

// Second-order regression tree: gain from regularised gradient/hessian sums,
// leaf weight -T_alpha(G) / (H + lambda). Only `columns` are considered.
decision_tree fit_gradient_tree(matrix_view x, std::span<double const> grad,
                                std::span<double const> hess,
                                std::span<std::size_t const> rows,
                                std::span<std::size_t const> columns,
                                gradient_tree_params const& params,
                                std::mt19937_64& rng);

// L1 soft threshold.
double soft_threshold(double g, double alpha);

}  // namespace delaynet
