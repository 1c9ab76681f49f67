#include "delaynet/models.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

#include "delaynet/common.h"

namespace delaynet {

namespace {

constexpr std::array<algorithm, 6> algorithms{
    algorithm::logistic,          algorithm::decision_tree,
    algorithm::random_forest,     algorithm::gradient_boosting,
    algorithm::adaboost,          algorithm::xgboost};

constexpr int model_format_version = 1;

// --- hyperparameter schema --------------------------------------------------

enum class value_kind {
  real,          // finite double (ints accepted)
  positive_real,
  unit_real,     // (0, 1]
  count,         // int >= 0
  positive_int,  // int >= 1
  depth,         // None or int >= 1
  features,      // None | auto | sqrt | log2 | int >= 1 | real in (0, 1]
  boolean,
  choice
};

struct param_schema {
  std::string_view name;
  value_kind kind;
  std::vector<std::string_view> choices{};
};

std::vector<param_schema> const& schema(algorithm a) {
  static std::vector<param_schema> const logistic{
      {"C", value_kind::positive_real},
      {"penalty", value_kind::choice, {"l1", "l2", "elasticnet", "none"}},
      {"solver", value_kind::choice, {"lbfgs", "liblinear", "saga"}},
      {"l1_ratio", value_kind::real},
      {"max_iter", value_kind::positive_int},
      {"tol", value_kind::positive_real}};
  static std::vector<param_schema> const tree{
      {"criterion", value_kind::choice, {"gini", "entropy"}},
      {"max_depth", value_kind::depth},
      {"min_samples_split", value_kind::positive_int},
      {"min_samples_leaf", value_kind::positive_int},
      {"max_features", value_kind::features}};
  static std::vector<param_schema> const forest{
      {"n_estimators", value_kind::positive_int},
      {"criterion", value_kind::choice, {"gini", "entropy"}},
      {"max_depth", value_kind::depth},
      {"min_samples_split", value_kind::positive_int},
      {"min_samples_leaf", value_kind::positive_int},
      {"max_features", value_kind::features},
      {"bootstrap", value_kind::boolean}};
  static std::vector<param_schema> const boosting{
      {"n_estimators", value_kind::count},
      {"learning_rate", value_kind::positive_real},
      {"max_depth", value_kind::positive_int},
      {"min_samples_split", value_kind::positive_int},
      {"min_samples_leaf", value_kind::positive_int},
      {"max_features", value_kind::features},
      {"subsample", value_kind::unit_real},
      {"colsample_bytree", value_kind::unit_real},
      {"lambda", value_kind::real},
      {"alpha", value_kind::real},
      {"min_child_weight", value_kind::real},
      {"gamma", value_kind::real},
      {"objective", value_kind::choice,
       {"binary:logistic", "reg:squarederror"}}};
  static std::vector<param_schema> const ada{
      {"n_estimators", value_kind::positive_int},
      {"learning_rate", value_kind::positive_real}};
  switch (a) {
    case algorithm::logistic: return logistic;
    case algorithm::decision_tree: return tree;
    case algorithm::random_forest: return forest;
    case algorithm::gradient_boosting:
    case algorithm::xgboost: return boosting;
    case algorithm::adaboost: return ada;
  }
  throw std::logic_error("unknown algorithm");
}

std::optional<double> as_real(hyper_value const& v) {
  if (auto const* d = std::get_if<double>(&v)) {
    return *d;
  }
  if (auto const* i = std::get_if<std::int64_t>(&v)) {
    return static_cast<double>(*i);
  }
  return std::nullopt;
}

std::optional<std::int64_t> as_int(hyper_value const& v) {
  if (auto const* i = std::get_if<std::int64_t>(&v)) {
    return *i;
  }
  if (auto const* d = std::get_if<double>(&v)) {
    if (std::isfinite(*d) && std::floor(*d) == *d) {
      return static_cast<std::int64_t>(*d);
    }
  }
  return std::nullopt;
}

bool check(param_schema const& s, hyper_value const& v) {
  auto const real = as_real(v);
  auto const integer = as_int(v);
  auto const* str = std::get_if<std::string>(&v);
  switch (s.kind) {
    case value_kind::real: return real && std::isfinite(*real) && *real >= 0;
    case value_kind::positive_real:
      return real && std::isfinite(*real) && *real > 0;
    case value_kind::unit_real: return real && *real > 0 && *real <= 1;
    case value_kind::count: return integer && *integer >= 0;
    case value_kind::positive_int: return integer && *integer >= 1;
    case value_kind::depth:
      return std::holds_alternative<std::monostate>(v) ||
             (integer && *integer >= 1);
    case value_kind::features:
      if (std::holds_alternative<std::monostate>(v)) {
        return true;
      }
      if (str) {
        return *str == "auto" || *str == "sqrt" || *str == "log2";
      }
      if (std::holds_alternative<std::int64_t>(v)) {
        return *integer >= 1;
      }
      return real && *real > 0 && *real <= 1;
    case value_kind::boolean: return std::holds_alternative<bool>(v);
    case value_kind::choice:
      return str && std::find(begin(s.choices), end(s.choices), *str) !=
                        end(s.choices);
  }
  return false;
}

// --- typed access -----------------------------------------------------------

struct param_reader {
  hyperparameters const& h;

  hyper_value const& at(std::string const& k) const {
    auto const it = h.find(k);
    if (it == end(h)) {
      throw std::invalid_argument(fmt::format("missing hyperparameter {}", k));
    }
    return it->second;
  }
  double real(std::string const& k) const { return *as_real(at(k)); }
  std::int64_t integer(std::string const& k) const { return *as_int(at(k)); }
  std::size_t size(std::string const& k) const {
    return static_cast<std::size_t>(integer(k));
  }
  std::string const& str(std::string const& k) const {
    return std::get<std::string>(at(k));
  }
  bool flag(std::string const& k) const { return std::get<bool>(at(k)); }
  std::optional<int> depth(std::string const& k) const {
    auto const& v = at(k);
    if (std::holds_alternative<std::monostate>(v)) {
      return std::nullopt;
    }
    return static_cast<int>(*as_int(v));
  }
  max_features_rule features(std::string const& k) const {
    using kind = max_features_rule::kind;
    auto const& v = at(k);
    if (std::holds_alternative<std::monostate>(v)) {
      return {kind::all, 0.0};
    }
    if (auto const* s = std::get_if<std::string>(&v)) {
      if (*s == "sqrt") {
        return {kind::sqrt, 0.0};
      }
      if (*s == "log2") {
        return {kind::log2, 0.0};
      }
      return {kind::all, 0.0};  // auto
    }
    if (auto const* i = std::get_if<std::int64_t>(&v)) {
      return {kind::count, static_cast<double>(*i)};
    }
    return {kind::fraction, *as_real(v)};
  }
};

// --- training helpers ---------------------------------------------------------

void check_training_data(labeled_dataset const& data) {
  if (data.size() < 2) {
    throw data_error("training needs at least 2 rows");
  }
  auto const pos = data.positives();
  if (pos == 0 || pos == data.size()) {
    throw data_error(
        fmt::format("training rows hold a single class ({} of {} positive)",
                    pos, data.size()));
  }
  for (auto const v : data.values()) {
    if (!std::isfinite(v)) {
      throw data_error("training rows contain a non-finite feature value");
    }
  }
}

matrix_view view(labeled_dataset const& d) {
  return {d.values(), d.size(), d.width()};
}

double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// Mean logistic loss + l2/2 |w|^2 over a row-major matrix; the intercept is
// params[cols]. Gradient written to `grad` when non-null.
double logistic_loss(matrix_view x, std::span<std::uint8_t const> y,
                     std::span<double const> params, double l2,
                     std::vector<double>* grad) {
  auto const d = x.cols;
  auto const n = static_cast<double>(x.rows);
  if (grad != nullptr) {
    grad->assign(d + 1, 0.0);
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto const row = x.row(r);
    double z = params[d];
    for (std::size_t c = 0; c < d; ++c) {
      z += params[c] * row[c];
    }
    auto const t = y[r] != 0 ? 1.0 : 0.0;
    loss += softplus(z) - t * z;
    if (grad != nullptr) {
      auto const e = sigmoid(z) - t;
      for (std::size_t c = 0; c < d; ++c) {
        (*grad)[c] += e * row[c];
      }
      (*grad)[d] += e;
    }
  }
  loss /= n;
  double penalty = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    penalty += params[c] * params[c];
  }
  if (grad != nullptr) {
    for (std::size_t c = 0; c < d; ++c) {
      (*grad)[c] = (*grad)[c] / n + l2 * params[c];
    }
    (*grad)[d] /= n;
  }
  return loss + 0.5 * l2 * penalty;
}

trained_model fit_logistic(model_spec const& spec, labeled_dataset const& data) {
  param_reader const p{spec.params};
  auto const d = data.width();
  auto const n = data.size();
  training_info info;

  logistic_model m;
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      s += data.value(r, c);
    }
    m.mean[c] = s / static_cast<double>(n);
    double v = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      auto const dv = data.value(r, c) - m.mean[c];
      v += dv * dv;
    }
    auto const sd = std::sqrt(v / static_cast<double>(n));
    m.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<double> z(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      z[r * d + c] = (data.value(r, c) - m.mean[c]) / m.scale[c];
    }
  }
  matrix_view const x{z, n, d};

  auto const& penalty = p.str("penalty");
  auto const strength = 1.0 / (p.real("C") * static_cast<double>(n));
  auto const ratio = penalty == "elasticnet" ? p.real("l1_ratio")
                     : penalty == "l1"       ? 1.0
                                             : 0.0;
  if (ratio < 0.0 || ratio > 1.0) {
    throw std::invalid_argument("l1_ratio must lie in [0, 1]");
  }
  auto const l2 = penalty == "none" ? 0.0 : strength * (1.0 - ratio);
  auto const l1 = penalty == "none" ? 0.0 : strength * ratio;
  if (p.str("solver") != "lbfgs") {
    info.warnings.push_back(fmt::format(
        "solver {} ignored; proximal gradient used", p.str("solver")));
  }

  // Lipschitz bound of the smooth part on standardised columns.
  auto const lipschitz = 0.25 * static_cast<double>(d + 1) + l2;
  auto const step = 1.0 / lipschitz;
  auto const max_iter = p.size("max_iter");
  auto const tol = p.real("tol");

  auto const objective = [&](std::vector<double> const& th) {
    double l1_term = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      l1_term += std::abs(th[c]);
    }
    return logistic_loss(x, data.labels(), th, l2, nullptr) + l1 * l1_term;
  };

  std::vector<double> theta(d + 1, 0.0), prev = theta, y = theta, grad;
  double t = 1.0;
  double f = objective(theta);
  info.loss_trace.push_back(f);
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    logistic_loss(x, data.labels(), y, l2, &grad);
    std::vector<double> next(d + 1);
    for (std::size_t c = 0; c <= d; ++c) {
      next[c] = y[c] - step * grad[c];
      if (c < d) {
        next[c] = soft_threshold(next[c], step * l1);
      }
    }
    auto const f_next = objective(next);
    if (f_next > f) {
      // Adaptive restart: drop the momentum and take a plain step.
      t = 1.0;
      y = theta;
      continue;
    }
    auto const t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    for (std::size_t c = 0; c <= d; ++c) {
      y[c] = next[c] + (t - 1.0) / t_next * (next[c] - theta[c]);
    }
    prev = theta;
    theta = std::move(next);
    t = t_next;
    auto const change = f - f_next;
    f = f_next;
    info.loss_trace.push_back(f);
    if (change <= tol * std::max(1.0, std::abs(f))) {
      ++it;
      break;
    }
  }
  info.iterations = it;
  if (it >= max_iter) {
    info.warnings.push_back(
        fmt::format("logistic regression stopped at max_iter={}", max_iter));
  }
  m.coef.assign(begin(theta), begin(theta) + static_cast<std::ptrdiff_t>(d));
  m.intercept = theta[d];
  return {spec, d, std::move(m), std::move(info)};
}

cart_params cart_from(param_reader const& p) {
  cart_params c;
  c.criterion =
      p.str("criterion") == "entropy" ? impurity::entropy : impurity::gini;
  c.max_depth = p.depth("max_depth");
  c.min_samples_split = p.size("min_samples_split");
  c.min_samples_leaf = p.size("min_samples_leaf");
  c.max_features = p.features("max_features");
  return c;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(begin(rows), end(rows), std::size_t{0});
  return rows;
}

trained_model fit_tree(model_spec const& spec, labeled_dataset const& data) {
  std::mt19937_64 rng{spec.seed};
  auto const rows = all_rows(data.size());
  auto tree = fit_cart(view(data), data.labels(), {}, rows,
                       cart_from(param_reader{spec.params}), rng);
  training_info info;
  info.iterations = 1;
  return {spec, data.width(), tree_model{std::move(tree)}, std::move(info)};
}

trained_model fit_forest(model_spec const& spec, labeled_dataset const& data) {
  param_reader const p{spec.params};
  auto const params = cart_from(p);
  auto const n_trees = p.size("n_estimators");
  auto const bootstrap = p.flag("bootstrap");
  auto const n = data.size();

  forest_model f;
  f.trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::mt19937_64 rng{derive_seed(spec.seed, t)};
    std::vector<std::size_t> rows;
    std::vector<double> weights;
    if (bootstrap) {
      std::vector<std::size_t> counts(n, 0);
      std::uniform_int_distribution<std::size_t> pick{0, n - 1};
      for (std::size_t k = 0; k < n; ++k) {
        ++counts[pick(rng)];
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (counts[r] > 0) {
          rows.push_back(r);
          weights.push_back(static_cast<double>(counts[r]));
        }
      }
    } else {
      rows = all_rows(n);
    }
    f.trees.push_back(
        fit_cart(view(data), data.labels(), weights, rows, params, rng));
  }
  training_info info;
  info.iterations = n_trees;
  return {spec, data.width(), std::move(f), std::move(info)};
}

double mean_logloss(std::span<double const> margin,
                    std::span<std::uint8_t const> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    s += softplus(margin[i]) - (y[i] != 0 ? margin[i] : 0.0);
  }
  return s / static_cast<double>(margin.size());
}

trained_model fit_boosting(model_spec const& spec,
                           labeled_dataset const& data) {
  param_reader const p{spec.params};
  training_info info;
  if (p.str("objective") == "reg:squarederror") {
    info.warnings.push_back(
        "objective reg:squarederror replaced by logistic loss");
  }
  gradient_tree_params tp;
  tp.max_depth = static_cast<int>(p.integer("max_depth"));
  tp.min_child_weight = p.real("min_child_weight");
  tp.lambda = p.real("lambda");
  tp.alpha = p.real("alpha");
  tp.gamma = p.real("gamma");
  tp.min_samples_split = p.size("min_samples_split");
  tp.min_samples_leaf = p.size("min_samples_leaf");
  tp.max_features = p.features("max_features");

  auto const n = data.size();
  auto const d = data.width();
  auto const rate = static_cast<double>(data.positives()) / static_cast<double>(n);
  boosted_model m;
  m.base_margin = std::log(rate / (1.0 - rate));
  m.learning_rate = p.real("learning_rate");

  auto const x = view(data);
  std::vector<double> margin(n, m.base_margin), grad(n), hess(n);
  auto const& y = data.labels();
  info.loss_trace.push_back(mean_logloss(margin, y));

  auto const stages = p.size("n_estimators");
  auto const row_take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(p.real("subsample") *
                                             static_cast<double>(n))));
  auto const col_take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(p.real("colsample_bytree") *
                                             static_cast<double>(d))));
  std::vector<std::size_t> rows = all_rows(n), cols = all_rows(d);
  m.trees.reserve(stages);
  for (std::size_t s = 0; s < stages; ++s) {
    std::mt19937_64 rng{derive_seed(spec.seed, s)};
    for (std::size_t i = 0; i < n; ++i) {
      auto const q = sigmoid(margin[i]);
      grad[i] = q - (y[i] != 0 ? 1.0 : 0.0);
      hess[i] = std::max(q * (1.0 - q), 1e-16);
    }
    std::vector<std::size_t> stage_rows = rows;
    if (row_take < n) {
      std::shuffle(begin(stage_rows), end(stage_rows), rng);
      stage_rows.resize(row_take);
      std::sort(begin(stage_rows), end(stage_rows));
    }
    std::vector<std::size_t> stage_cols = cols;
    if (col_take < d) {
      std::shuffle(begin(stage_cols), end(stage_cols), rng);
      stage_cols.resize(col_take);
      std::sort(begin(stage_cols), end(stage_cols));
    }
    auto tree =
        fit_gradient_tree(x, grad, hess, stage_rows, stage_cols, tp, rng);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += m.learning_rate * tree.predict(data.row(i));
    }
    m.trees.push_back(std::move(tree));
    info.loss_trace.push_back(mean_logloss(margin, y));
  }
  info.iterations = stages;
  return {spec, d, std::move(m), std::move(info)};
}

trained_model fit_adaboost(model_spec const& spec,
                           labeled_dataset const& data) {
  param_reader const p{spec.params};
  auto const n = data.size();
  auto const lr = p.real("learning_rate");
  auto const rounds = p.size("n_estimators");
  auto const rows = all_rows(n);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  cart_params stump;
  stump.max_depth = 1;

  adaboost_model m;
  training_info info;
  std::mt19937_64 rng{spec.seed};
  for (std::size_t t = 0; t < rounds; ++t) {
    auto tree = fit_cart(view(data), data.labels(), w, rows, stump, rng);
    std::vector<bool> miss(n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      miss[i] = (tree.predict(data.row(i)) >= 0.5) != data.label(i);
      if (miss[i]) {
        err += w[i];
      }
    }
    if (err <= 0.0) {
      m.stumps.push_back(std::move(tree));
      m.alphas.push_back(1.0);
      info.warnings.push_back(
          fmt::format("round {} fit perfectly; stopping", t + 1));
      break;
    }
    if (err >= 0.5) {
      if (m.stumps.empty()) {
        throw data_error("adaboost: first stump is no better than chance");
      }
      info.warnings.push_back(
          fmt::format("round {} no better than chance; stopping", t + 1));
      break;
    }
    auto const alpha = lr * std::log((1.0 - err) / err);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) {
        w[i] *= std::exp(alpha);
      }
      total += w[i];
    }
    for (auto& wi : w) {
      wi /= total;
    }
    m.stumps.push_back(std::move(tree));
    m.alphas.push_back(alpha);
    info.loss_trace.push_back(err);
  }
  info.iterations = m.stumps.size();
  return {spec, data.width(), std::move(m), std::move(info)};
}

// --- serialisation ----------------------------------------------------------

void write_values(std::ostream& out, std::string_view tag,
                  std::vector<double> const& v) {
  out << tag << ' ' << v.size();
  for (auto const x : v) {
    out << ' ' << format_double(x);
  }
  out << '\n';
}

double read_number(std::istream& in) {
  std::string s;
  if (!(in >> s)) {
    throw format_error("model: truncated record");
  }
  auto const v = parse_double(s);
  if (!v) {
    throw format_error(fmt::format("model: bad number \"{}\"", s));
  }
  return *v;
}

void expect(std::istream& in, std::string_view tag) {
  std::string s;
  if (!(in >> s) || s != tag) {
    throw format_error(fmt::format("model: expected \"{}\"", tag));
  }
}

std::vector<double> read_values(std::istream& in, std::string_view tag) {
  expect(in, tag);
  std::size_t count = 0;
  if (!(in >> count)) {
    throw format_error("model: bad count");
  }
  std::vector<double> v(count);
  for (auto& x : v) {
    x = read_number(in);
  }
  return v;
}

std::size_t read_count(std::istream& in, std::string_view tag) {
  expect(in, tag);
  std::size_t count = 0;
  if (!(in >> count)) {
    throw format_error("model: bad count");
  }
  return count;
}

}  // namespace

std::string_view to_string(algorithm a) {
  switch (a) {
    case algorithm::logistic: return "logistic";
    case algorithm::decision_tree: return "decision_tree";
    case algorithm::random_forest: return "random_forest";
    case algorithm::gradient_boosting: return "gradient_boosting";
    case algorithm::adaboost: return "adaboost";
    case algorithm::xgboost: return "xgboost";
  }
  return "?";
}

algorithm parse_algorithm(std::string_view s) {
  auto const v = to_lower(trim(s));
  for (auto const a : algorithms) {
    if (v == to_string(a)) {
      return a;
    }
  }
  throw std::invalid_argument(fmt::format(
      "unknown classifier \"{}\" (logistic, decision_tree, random_forest, "
      "gradient_boosting, adaboost, xgboost)",
      s));
}

std::span<algorithm const> all_algorithms() { return algorithms; }

std::string to_string(hyper_value const& v) {
  return std::visit(
      [](auto const& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "None";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "True" : "False";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          auto s = format_double(x);
          if (s.find_first_of(".eEn") == std::string::npos) {
            s += ".0";
          }
          return s;
        } else {
          return x;
        }
      },
      v);
}

hyper_value parse_hyper_value(std::string_view s) {
  s = trim(s);
  if (s == "None") {
    return std::monostate{};
  }
  if (s == "True" || s == "true") {
    return true;
  }
  if (s == "False" || s == "false") {
    return false;
  }
  if (auto const i = parse_int(s)) {
    return *i;
  }
  if (auto const d = parse_double(s)) {
    return *d;
  }
  return std::string{s};
}

std::string to_string(hyperparameters const& h) {
  std::string out;
  for (auto const& [k, v] : h) {
    if (!out.empty()) {
      out += ';';
    }
    out += k + "=" + to_string(v);
  }
  return out;
}

hyperparameters default_hyperparameters(algorithm a) {
  using namespace std::string_literals;
  switch (a) {
    case algorithm::logistic:
      return {{"C", 1.0},
              {"penalty", "l2"s},
              {"solver", "lbfgs"s},
              {"l1_ratio", 0.5},
              {"max_iter", std::int64_t{1000}},
              {"tol", 1e-8}};
    case algorithm::decision_tree:
      return {{"criterion", "gini"s},
              {"max_depth", std::monostate{}},
              {"min_samples_split", std::int64_t{2}},
              {"min_samples_leaf", std::int64_t{1}},
              {"max_features", std::monostate{}}};
    case algorithm::random_forest:
      return {{"n_estimators", std::int64_t{100}},
              {"criterion", "gini"s},
              {"max_depth", std::monostate{}},
              {"min_samples_split", std::int64_t{2}},
              {"min_samples_leaf", std::int64_t{1}},
              {"max_features", "sqrt"s},
              {"bootstrap", true}};
    case algorithm::gradient_boosting:
      return {{"n_estimators", std::int64_t{100}},
              {"learning_rate", 0.1},
              {"max_depth", std::int64_t{3}},
              {"min_samples_split", std::int64_t{2}},
              {"min_samples_leaf", std::int64_t{1}},
              {"max_features", std::monostate{}},
              {"subsample", 1.0},
              {"colsample_bytree", 1.0},
              {"lambda", 0.0},
              {"alpha", 0.0},
              {"min_child_weight", 0.0},
              {"gamma", 0.0},
              {"objective", "binary:logistic"s}};
    case algorithm::xgboost:
      return {{"n_estimators", std::int64_t{625}},
              {"learning_rate", 0.009},
              {"max_depth", std::int64_t{5}},
              {"min_samples_split", std::int64_t{2}},
              {"min_samples_leaf", std::int64_t{1}},
              {"max_features", std::monostate{}},
              {"subsample", 0.5},
              {"colsample_bytree", 1.0},
              {"lambda", 0.5650701862593042},
              {"alpha", 0.0016650896783581535},
              {"min_child_weight", 6.0},
              {"gamma", 0.0},
              {"objective", "reg:squarederror"s}};
    case algorithm::adaboost:
      return {{"n_estimators", std::int64_t{50}}, {"learning_rate", 1.0}};
  }
  return {};
}

void validate(model_spec const& spec) {
  auto const& s = schema(spec.algo);
  for (auto const& [k, v] : spec.params) {
    auto const it = std::find_if(begin(s), end(s),
                                 [&](auto const& e) { return e.name == k; });
    if (it == end(s)) {
      throw std::invalid_argument(fmt::format(
          "{}: unknown hyperparameter \"{}\"", to_string(spec.algo), k));
    }
    if (!check(*it, v)) {
      throw std::invalid_argument(fmt::format("{}: invalid value {} for \"{}\"",
                                              to_string(spec.algo),
                                              to_string(v), k));
    }
  }
  for (auto const& e : s) {
    if (!spec.params.contains(std::string{e.name})) {
      throw std::invalid_argument(fmt::format(
          "{}: missing hyperparameter \"{}\"", to_string(spec.algo), e.name));
    }
  }
}

model_spec make_spec(algorithm a, hyperparameters const& overrides,
                     std::uint64_t seed) {
  model_spec spec{a, default_hyperparameters(a), seed};
  for (auto const& [k, v] : overrides) {
    spec.params[k] = v;
  }
  validate(spec);
  return spec;
}

trained_model::trained_model(model_spec spec, std::size_t width, parameters p,
                             training_info info)
    : spec_{std::move(spec)},
      width_{width},
      params_{std::move(p)},
      info_{std::move(info)} {}

double trained_model::predict_proba(std::span<double const> x) const {
  if (x.size() != width_) {
    throw std::invalid_argument(fmt::format(
        "model expects {} features, got {}", width_, x.size()));
  }
  auto const p = std::visit(
      [&](auto const& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, logistic_model>) {
          double z = m.intercept;
          for (std::size_t c = 0; c < x.size(); ++c) {
            z += m.coef[c] * (x[c] - m.mean[c]) / m.scale[c];
          }
          return sigmoid(z);
        } else if constexpr (std::is_same_v<T, tree_model>) {
          return m.tree.predict(x);
        } else if constexpr (std::is_same_v<T, forest_model>) {
          double s = 0.0;
          for (auto const& t : m.trees) {
            s += t.predict(x);
          }
          return m.trees.empty() ? 0.5 : s / static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<T, boosted_model>) {
          double z = m.base_margin;
          for (auto const& t : m.trees) {
            z += m.learning_rate * t.predict(x);
          }
          return sigmoid(z);
        } else {
          double z = 0.0, norm = 0.0;
          for (std::size_t t = 0; t < m.stumps.size(); ++t) {
            z += m.alphas[t] * (m.stumps[t].predict(x) >= 0.5 ? 1.0 : -1.0);
            norm += m.alphas[t];
          }
          return sigmoid(norm > 0.0 ? 2.0 * z / norm : 0.0);
        }
      },
      params_);
  return std::isfinite(p) ? std::clamp(p, 0.0, 1.0) : 0.5;
}

std::vector<double> trained_model::predict_proba(
    labeled_dataset const& ds) const {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out[i] = predict_proba(ds.row(i));
  }
  return out;
}

void trained_model::save(std::ostream& out) const {
  out << "delaynet-model " << model_format_version << '\n';
  out << "algorithm " << to_string(spec_.algo) << '\n';
  out << "seed " << spec_.seed << '\n';
  out << "width " << width_ << '\n';
  out << "params " << spec_.params.size() << '\n';
  for (auto const& [k, v] : spec_.params) {
    out << k << ' ' << to_string(v) << '\n';
  }
  out << "iterations " << info_.iterations << '\n';
  std::visit(
      [&](auto const& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, logistic_model>) {
          write_values(out, "mean", m.mean);
          write_values(out, "scale", m.scale);
          write_values(out, "coef", m.coef);
          out << "intercept " << format_double(m.intercept) << '\n';
        } else if constexpr (std::is_same_v<T, tree_model>) {
          m.tree.save(out);
        } else if constexpr (std::is_same_v<T, forest_model>) {
          out << "trees " << m.trees.size() << '\n';
          for (auto const& t : m.trees) {
            t.save(out);
          }
        } else if constexpr (std::is_same_v<T, boosted_model>) {
          out << "base_margin " << format_double(m.base_margin) << '\n';
          out << "learning_rate " << format_double(m.learning_rate) << '\n';
          out << "trees " << m.trees.size() << '\n';
          for (auto const& t : m.trees) {
            t.save(out);
          }
        } else {
          out << "stumps " << m.stumps.size() << '\n';
          for (std::size_t t = 0; t < m.stumps.size(); ++t) {
            out << "alpha " << format_double(m.alphas[t]) << '\n';
            m.stumps[t].save(out);
          }
        }
      },
      params_);
}

trained_model trained_model::load(std::istream& in) {
  expect(in, "delaynet-model");
  int version = 0;
  if (!(in >> version) || version != model_format_version) {
    throw format_error(
        fmt::format("model: unsupported format version {}", version));
  }
  model_spec spec;
  expect(in, "algorithm");
  std::string algo;
  in >> algo;
  spec.algo = parse_algorithm(algo);
  expect(in, "seed");
  in >> spec.seed;
  auto const width = read_count(in, "width");
  auto const n_params = read_count(in, "params");
  for (std::size_t i = 0; i < n_params; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) {
      throw format_error("model: truncated parameter list");
    }
    spec.params[k] = parse_hyper_value(v);
  }
  validate(spec);
  training_info info;
  info.iterations = read_count(in, "iterations");

  auto const read_trees = [&](std::size_t count) {
    std::vector<decision_tree> trees;
    trees.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
      trees.push_back(decision_tree::load(in));
    }
    return trees;
  };

  switch (spec.algo) {
    case algorithm::logistic: {
      logistic_model m;
      m.mean = read_values(in, "mean");
      m.scale = read_values(in, "scale");
      m.coef = read_values(in, "coef");
      expect(in, "intercept");
      m.intercept = read_number(in);
      if (m.mean.size() != width || m.scale.size() != width ||
          m.coef.size() != width) {
        throw format_error("model: coefficient count does not match width");
      }
      return {spec, width, std::move(m), std::move(info)};
    }
    case algorithm::decision_tree:
      return {spec, width, tree_model{decision_tree::load(in)},
              std::move(info)};
    case algorithm::random_forest: {
      forest_model m;
      m.trees = read_trees(read_count(in, "trees"));
      return {spec, width, std::move(m), std::move(info)};
    }
    case algorithm::gradient_boosting:
    case algorithm::xgboost: {
      boosted_model m;
      expect(in, "base_margin");
      m.base_margin = read_number(in);
      expect(in, "learning_rate");
      m.learning_rate = read_number(in);
      m.trees = read_trees(read_count(in, "trees"));
      return {spec, width, std::move(m), std::move(info)};
    }
    case algorithm::adaboost: {
      adaboost_model m;
      auto const count = read_count(in, "stumps");
      for (std::size_t t = 0; t < count; ++t) {
        expect(in, "alpha");
        m.alphas.push_back(read_number(in));
        m.stumps.push_back(decision_tree::load(in));
      }
      return {spec, width, std::move(m), std::move(info)};
    }
  }
  throw format_error("model: unknown algorithm");
}

trained_model train(model_spec const& spec, labeled_dataset const& data) {
  validate(spec);
  check_training_data(data);
  switch (spec.algo) {
    case algorithm::logistic: return fit_logistic(spec, data);
    case algorithm::decision_tree: return fit_tree(spec, data);
    case algorithm::random_forest: return fit_forest(spec, data);
    case algorithm::gradient_boosting:
    case algorithm::xgboost: return fit_boosting(spec, data);
    case algorithm::adaboost: return fit_adaboost(spec, data);
  }
  throw std::logic_error("unknown algorithm");
}

double logistic_objective(labeled_dataset const& data,
                          std::span<double const> params, double l2,
                          std::vector<double>* grad) {
  if (params.size() != data.width() + 1) {
    throw std::invalid_argument("logistic_objective: params must be width + 1");
  }
  return logistic_loss(view(data), data.labels(), params, l2, grad);
}

}  // namespace delaynet
