#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "delaynet/tree.h"

using namespace delaynet;

namespace {

struct table {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  std::size_t rows, cols;
  matrix_view view() const { return {x, rows, cols}; }
};

table random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  table t{{}, {}, rows, cols};
  std::normal_distribution<double> g{0.0, 1.0};
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      t.x.push_back(g(rng));
      s += t.x.back() * static_cast<double>(c + 1);
    }
    t.y.push_back(s + g(rng) > 0.0 ? 1 : 0);
  }
  return t;
}

// Walks the tree and returns the rows reaching each node.
void route(decision_tree const& t, table const& d,
           std::vector<std::vector<std::size_t>>& reach) {
  reach.assign(t.nodes().size(), {});
  for (std::size_t r = 0; r < d.rows; ++r) {
    std::size_t n = 0;
    while (true) {
      reach[n].push_back(r);
      auto const& node = t.nodes()[n];
      if (node.is_leaf()) {
        break;
      }
      n = static_cast<std::size_t>(d.x[r * d.cols + node.feature] <=
                                           node.threshold
                                       ? node.left
                                       : node.right);
    }
  }
}

}  // namespace

TEST(max_features_rule, resolve) {
  EXPECT_EQ((max_features_rule{}.resolve(10)), 10u);
  EXPECT_EQ((max_features_rule{max_features_rule::kind::sqrt}.resolve(10)), 3u);
  EXPECT_EQ((max_features_rule{max_features_rule::kind::log2}.resolve(16)), 4u);
  EXPECT_EQ((max_features_rule{max_features_rule::kind::count, 30}.resolve(10)),
            10u);
  EXPECT_EQ(
      (max_features_rule{max_features_rule::kind::fraction, 0.01}.resolve(10)),
      1u);
}

TEST(soft_threshold, shrinks_towards_zero) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
}

// Depth and leaf-size limits hold on every fitted tree, and each leaf value
// is the positive fraction of the rows that reach it.
TEST(fit_cart, structural_audit) {
  std::mt19937_64 rng{21};
  for (auto round = 0; round < 40; ++round) {
    auto const d = random_table(rng, 120, 4);
    cart_params p;
    p.max_depth = std::uniform_int_distribution<int>{1, 6}(rng);
    p.min_samples_leaf = std::uniform_int_distribution<std::size_t>{1, 10}(rng);
    p.criterion = round % 2 ? impurity::entropy : impurity::gini;
    std::vector<double> const w(d.rows, 1.0);
    std::vector<std::size_t> rows(d.rows);
    std::iota(begin(rows), end(rows), 0);
    auto const t = fit_cart(d.view(), d.y, w, rows, p, rng);
    EXPECT_LE(t.depth(), *p.max_depth);
    std::vector<std::vector<std::size_t>> reach;
    route(t, d, reach);
    for (std::size_t n = 0; n < t.nodes().size(); ++n) {
      auto const& node = t.nodes()[n];
      EXPECT_EQ(node.samples, reach[n].size());
      if (!node.is_leaf()) {
        continue;
      }
      EXPECT_GE(reach[n].size(), p.min_samples_leaf);
      double pos = 0.0;
      for (auto const r : reach[n]) {
        pos += d.y[r];
      }
      EXPECT_NEAR(node.value, pos / static_cast<double>(reach[n].size()),
                  1e-12);
    }
  }
}

TEST(fit_cart, pure_labels_give_one_leaf) {
  table d{{1, 2, 3, 4}, {1, 1, 1, 1}, 4, 1};
  std::vector<double> const w(4, 1.0);
  std::vector<std::size_t> const rows{0, 1, 2, 3};
  std::mt19937_64 rng{1};
  auto const t = fit_cart(d.view(), d.y, w, rows, {}, rng);
  EXPECT_EQ(t.leaf_count(), 1u);
  std::vector<double> const x{2.5};
  EXPECT_EQ(t.predict(x), 1.0);
}

TEST(fit_cart, weights_act_as_repetition) {
  table d{{0, 1, 2, 3}, {0, 0, 1, 1}, 4, 1};
  std::vector<double> const w{3, 1, 2};  // per entry of rows
  std::vector<std::size_t> const rows{0, 2, 3};
  std::vector<std::size_t> const repeated{0, 0, 0, 2, 3, 3};
  std::vector<double> const ones(6, 1.0);
  cart_params p;
  p.max_depth = 0;
  std::mt19937_64 a{1}, b{1};
  auto const tw = fit_cart(d.view(), d.y, w, rows, p, a);
  auto const tr = fit_cart(d.view(), d.y, ones, repeated, p, b);
  std::vector<double> const x{1.5};
  EXPECT_DOUBLE_EQ(tw.predict(x), 0.5);
  EXPECT_DOUBLE_EQ(tr.predict(x), 0.5);
}

TEST(fit_gradient_tree, root_leaf_weight) {
  table d{{0, 1, 2, 3}, {}, 4, 1};
  std::vector<double> const g{0.5, -1.0, 2.0, 0.5};
  std::vector<double> const h{0.25, 0.25, 0.25, 0.25};
  std::vector<std::size_t> const rows{0, 1, 2, 3};
  std::vector<std::size_t> const cols{0};
  gradient_tree_params p;
  p.max_depth = 0;
  p.lambda = 1.0;
  p.alpha = 0.5;
  std::mt19937_64 rng{1};
  auto const t = fit_gradient_tree(d.view(), g, h, rows, cols, p, rng);
  ASSERT_EQ(t.leaf_count(), 1u);
  std::vector<double> const x{0.0};
  EXPECT_DOUBLE_EQ(t.predict(x), -(2.0 - 0.5) / (1.0 + 1.0));
}

TEST(fit_gradient_tree, min_child_weight_blocks_splits) {
  std::mt19937_64 rng{4};
  auto const d = random_table(rng, 50, 2);
  std::vector<double> g(d.rows), h(d.rows, 0.25);
  for (std::size_t r = 0; r < d.rows; ++r) {
    g[r] = d.y[r] ? -0.5 : 0.5;
  }
  std::vector<std::size_t> rows(d.rows);
  std::iota(begin(rows), end(rows), 0);
  std::vector<std::size_t> const cols{0, 1};
  gradient_tree_params p;
  p.max_depth = 4;
  p.min_child_weight = 3.0;
  auto const t = fit_gradient_tree(d.view(), g, h, rows, cols, p, rng);
  for (auto const& n : t.nodes()) {
    EXPECT_GE(n.cover, 3.0 - 1e-12);
  }
}

TEST(decision_tree, save_load_round_trip) {
  std::mt19937_64 rng{6};
  auto const d = random_table(rng, 80, 3);
  std::vector<double> const w(d.rows, 1.0);
  std::vector<std::size_t> rows(d.rows);
  std::iota(begin(rows), end(rows), 0);
  auto const t = fit_cart(d.view(), d.y, w, rows, {}, rng);
  std::stringstream s;
  t.save(s);
  auto const back = decision_tree::load(s);
  ASSERT_EQ(back.nodes().size(), t.nodes().size());
  for (std::size_t r = 0; r < d.rows; ++r) {
    EXPECT_EQ(back.predict(d.view().row(r)), t.predict(d.view().row(r)));
  }
}
