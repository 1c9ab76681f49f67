#include "delaynet/tree.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

#include "delaynet/common.h"

namespace delaynet {

std::size_t max_features_rule::resolve(std::size_t width) const {
  if (width == 0) {
    return 0;
  }
  auto const w = static_cast<double>(width);
  double n = w;
  switch (k) {
    case kind::all: n = w; break;
    case kind::sqrt: n = std::floor(std::sqrt(w)); break;
    case kind::log2: n = std::floor(std::log2(w)); break;
    case kind::count: n = std::floor(amount); break;
    case kind::fraction: n = std::floor(amount * w); break;
  }
  return static_cast<std::size_t>(std::clamp(n, 1.0, w));
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) {
    return g - alpha;
  }
  if (g < -alpha) {
    return g + alpha;
  }
  return 0.0;
}

double decision_tree::predict(std::span<double const> x) const {
  if (nodes_.empty()) {
    throw std::logic_error("predict on an empty tree");
  }
  auto n = 0;
  while (!nodes_[n].is_leaf()) {
    auto const& node = nodes_[n];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right;
  }
  return nodes_[n].value;
}

int decision_tree::depth() const {
  auto d = 0;
  for (auto const& n : nodes_) {
    d = std::max(d, n.depth);
  }
  return d;
}

std::size_t decision_tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      begin(nodes_), end(nodes_), [](auto const& n) { return n.is_leaf(); }));
}

void decision_tree::save(std::ostream& out) const {
  out << "tree " << nodes_.size() << '\n';
  for (auto const& n : nodes_) {
    out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left
        << ' ' << n.right << ' ' << format_double(n.value) << ' '
        << format_double(n.cover) << ' ' << n.samples << ' ' << n.depth
        << '\n';
  }
}

decision_tree decision_tree::load(std::istream& in) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "tree") {
    throw format_error("model: expected a tree record");
  }
  std::vector<tree_node> nodes(count);
  for (auto& n : nodes) {
    std::string threshold, value, cover;
    if (!(in >> n.feature >> threshold >> n.left >> n.right >> value >>
          cover >> n.samples >> n.depth)) {
      throw format_error("model: truncated tree record");
    }
    auto const t = parse_double(threshold);
    auto const v = parse_double(value);
    auto const c = parse_double(cover);
    if (!t || !v || !c) {
      throw format_error("model: bad number in tree record");
    }
    n.threshold = *t;
    n.value = *v;
    n.cover = *c;
    auto const in_range = [&](int i) {
      return i > 0 && static_cast<std::size_t>(i) < count;
    };
    if (!n.is_leaf() && (!in_range(n.left) || !in_range(n.right))) {
      throw format_error("model: tree child index out of range");
    }
  }
  return decision_tree{std::move(nodes)};
}

namespace {

struct grow_limits {
  int max_depth{-1};  // < 0: unlimited
  std::size_t min_samples_split{2};
  std::size_t min_samples_leaf{1};
  std::size_t features_per_split{0};
  double min_gain{1e-12};
};

// Greedy top-down growth shared by both tree kinds. `Policy` provides the
// per-sample statistics and how they score.
template <typename Policy>
class grower {
public:
  using stats = typename Policy::stats;

  grower(matrix_view x, std::span<std::size_t const> rows,
         std::span<std::size_t const> columns, Policy const& policy,
         grow_limits const& limits, std::mt19937_64& rng)
      : x_{x},
        rows_{rows},
        columns_{begin(columns), end(columns)},
        policy_{policy},
        limits_{limits},
        rng_{rng} {}

  decision_tree run() {
    if (rows_.empty()) {
      throw std::invalid_argument("cannot fit a tree on zero rows");
    }
    std::vector<std::size_t> items(rows_.size());
    std::iota(begin(items), end(items), std::size_t{0});
    build(items, 0);
    return decision_tree{std::move(nodes_)};
  }

private:
  struct split {
    int feature{-1};
    double threshold{0.0};
    double gain{0.0};
  };

  stats sum(std::vector<std::size_t> const& items) const {
    stats s{};
    for (auto const k : items) {
      s += policy_.of(k);
    }
    return s;
  }

  std::vector<std::size_t> candidates() {
    auto const m = std::min(limits_.features_per_split, columns_.size());
    if (m == 0 || m >= columns_.size()) {
      return columns_;
    }
    auto c = columns_;
    for (std::size_t t = 0; t < m; ++t) {
      std::uniform_int_distribution<std::size_t> pick{t, c.size() - 1};
      std::swap(c[t], c[pick(rng_)]);
    }
    c.resize(m);
    return c;
  }

  split best_split(std::vector<std::size_t> const& items, stats const& total) {
    split best;
    best.gain = limits_.min_gain;
    auto const parent = policy_.score(total);
    auto const n = items.size();
    std::vector<std::pair<double, std::size_t>> order(n);
    for (auto const f : candidates()) {
      for (std::size_t t = 0; t < n; ++t) {
        order[t] = {x_.at(rows_[items[t]], f), items[t]};
      }
      std::stable_sort(begin(order), end(order), [](auto const& a,
                                                    auto const& b) {
        return a.first < b.first;
      });
      stats left{};
      for (std::size_t t = 0; t + 1 < n; ++t) {
        left += policy_.of(order[t].second);
        if (!(order[t].first < order[t + 1].first)) {
          continue;
        }
        auto const nl = t + 1;
        if (nl < limits_.min_samples_leaf ||
            n - nl < limits_.min_samples_leaf) {
          continue;
        }
        auto const right = total - left;
        if (!policy_.valid(left) || !policy_.valid(right)) {
          continue;
        }
        auto const gain =
            policy_.score(left) + policy_.score(right) - parent;
        if (gain > best.gain) {
          auto mid = order[t].first + (order[t + 1].first - order[t].first) / 2;
          if (!(mid < order[t + 1].first)) {
            mid = order[t].first;
          }
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  int build(std::vector<std::size_t>& items, int depth) {
    auto const total = sum(items);
    auto const id = static_cast<int>(nodes_.size());
    tree_node node;
    node.value = policy_.leaf(total);
    node.cover = policy_.cover(total);
    node.samples = items.size();
    node.depth = depth;
    nodes_.push_back(node);

    auto const stop =
        (limits_.max_depth >= 0 && depth >= limits_.max_depth) ||
        items.size() < limits_.min_samples_split ||
        items.size() < 2 * limits_.min_samples_leaf || policy_.pure(total);
    if (stop) {
      return id;
    }
    auto const s = best_split(items, total);
    if (s.feature < 0) {
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto const k : items) {
      (x_.at(rows_[k], static_cast<std::size_t>(s.feature)) <= s.threshold
           ? left
           : right)
          .push_back(k);
    }
    items.clear();
    items.shrink_to_fit();
    nodes_[id].feature = s.feature;
    nodes_[id].threshold = s.threshold;
    auto const l = build(left, depth + 1);
    auto const r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  matrix_view x_;
  std::span<std::size_t const> rows_;
  std::vector<std::size_t> columns_;
  Policy const& policy_;
  grow_limits limits_;
  std::mt19937_64& rng_;
  std::vector<tree_node> nodes_;
};

struct class_stats {
  double w{0.0};
  double pos{0.0};
  class_stats& operator+=(class_stats const& o) {
    w += o.w;
    pos += o.pos;
    return *this;
  }
  friend class_stats operator-(class_stats a, class_stats const& b) {
    a.w -= b.w;
    a.pos -= b.pos;
    return a;
  }
};

struct cart_policy {
  using stats = class_stats;

  std::span<std::uint8_t const> labels;
  std::span<double const> weights;
  std::span<std::size_t const> rows;
  impurity criterion;

  stats of(std::size_t k) const {
    auto const w = weights.empty() ? 1.0 : weights[k];
    return {w, labels[rows[k]] != 0 ? w : 0.0};
  }
  double node_impurity(stats const& s) const {
    if (s.w <= 0.0) {
      return 0.0;
    }
    auto const p = std::clamp(s.pos / s.w, 0.0, 1.0);
    if (criterion == impurity::gini) {
      return 2.0 * p * (1.0 - p);
    }
    auto const h = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
    return h(p) + h(1.0 - p);
  }
  // Negative weighted impurity, so that a split gain is a sum difference.
  double score(stats const& s) const { return -s.w * node_impurity(s); }
  bool valid(stats const& s) const { return s.w > 1e-12; }
  bool pure(stats const& s) const {
    return s.pos <= 0.0 || s.pos >= s.w;
  }
  double leaf(stats const& s) const {
    return s.w > 0.0 ? std::clamp(s.pos / s.w, 0.0, 1.0) : 0.0;
  }
  double cover(stats const& s) const { return s.w; }
};

struct grad_stats {
  double g{0.0};
  double h{0.0};
  grad_stats& operator+=(grad_stats const& o) {
    g += o.g;
    h += o.h;
    return *this;
  }
  friend grad_stats operator-(grad_stats a, grad_stats const& b) {
    a.g -= b.g;
    a.h -= b.h;
    return a;
  }
};

struct gradient_policy {
  using stats = grad_stats;

  std::span<double const> grad;
  std::span<double const> hess;
  std::span<std::size_t const> rows;
  gradient_tree_params const& params;

  stats of(std::size_t k) const { return {grad[rows[k]], hess[rows[k]]}; }
  double score(stats const& s) const {
    auto const den = s.h + params.lambda;
    if (den <= 0.0) {
      return 0.0;
    }
    auto const t = soft_threshold(s.g, params.alpha);
    return t * t / den;
  }
  bool valid(stats const& s) const { return s.h >= params.min_child_weight; }
  bool pure(stats const&) const { return false; }
  double leaf(stats const& s) const {
    auto const den = s.h + params.lambda;
    return den > 0.0 ? -soft_threshold(s.g, params.alpha) / den : 0.0;
  }
  double cover(stats const& s) const { return s.h; }
};

}  // namespace

decision_tree fit_cart(matrix_view x, std::span<std::uint8_t const> labels,
                       std::span<double const> weights,
                       std::span<std::size_t const> rows,
                       cart_params const& params, std::mt19937_64& rng) {
  if (!weights.empty() && weights.size() != rows.size()) {
    throw std::invalid_argument("fit_cart: weights must align with rows");
  }
  if (params.max_depth && *params.max_depth < 0) {
    throw std::invalid_argument("fit_cart: negative max_depth");
  }
  std::vector<std::size_t> columns(x.cols);
  std::iota(begin(columns), end(columns), std::size_t{0});
  cart_policy const policy{labels, weights, rows, params.criterion};
  grow_limits limits;
  limits.max_depth = params.max_depth.value_or(-1);
  limits.min_samples_split = std::max<std::size_t>(params.min_samples_split, 2);
  limits.min_samples_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
  limits.features_per_split = params.max_features.resolve(x.cols);
  return grower<cart_policy>{x, rows, columns, policy, limits, rng}.run();
}

decision_tree fit_gradient_tree(matrix_view x, std::span<double const> grad,
                                std::span<double const> hess,
                                std::span<std::size_t const> rows,
                                std::span<std::size_t const> columns,
                                gradient_tree_params const& params,
                                std::mt19937_64& rng) {
  if (params.max_depth < 0) {
    throw std::invalid_argument("fit_gradient_tree: negative max_depth");
  }
  gradient_policy const policy{grad, hess, rows, params};
  grow_limits limits;
  limits.max_depth = params.max_depth;
  limits.min_samples_split = std::max<std::size_t>(params.min_samples_split, 2);
  limits.min_samples_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
  limits.features_per_split = params.max_features.resolve(columns.size());
  limits.min_gain = std::max(params.gamma, 1e-12);
  return grower<gradient_policy>{x, rows, columns, policy, limits, rng}.run();
}

}  // namespace delaynet
