#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "delaynet/common.h"
#include "delaynet/metrics.h"
#include "delaynet/models.h"
#include "delaynet/synth.h"

using namespace delaynet;

namespace {

double test_ba(trained_model const& m, labeled_dataset const& ds) {
  confusion_matrix cm;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    cm.add(ds.label(i), m.predict(ds.row(i)));
  }
  return balanced_accuracy(cm);
}

labeled_dataset separable(std::uint64_t seed, std::size_t n) {
  labeled_dataset ds{{"a", "b"}};
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> u{0.5, 2.0};
  std::normal_distribution<double> g{0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    auto const pos = i % 2 == 0;
    std::vector<double> const x{pos ? u(rng) : -u(rng), g(rng)};
    ds.add_row({2019, 1}, x, pos);
  }
  return ds;
}

labeled_dataset xor_table(std::uint64_t seed, std::size_t n) {
  labeled_dataset ds{{"a", "b"}};
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> u{-1.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> const x{u(rng), u(rng)};
    ds.add_row({2019, 1}, x, x[0] * x[1] > 0.0);
  }
  return ds;
}

}  // namespace

TEST(hyperparameters, parse_and_print) {
  EXPECT_TRUE(std::holds_alternative<std::monostate>(parse_hyper_value("None")));
  EXPECT_EQ(std::get<bool>(parse_hyper_value("True")), true);
  EXPECT_EQ(std::get<std::int64_t>(parse_hyper_value("12")), 12);
  EXPECT_EQ(std::get<double>(parse_hyper_value("0.5")), 0.5);
  EXPECT_EQ(std::get<std::string>(parse_hyper_value("sqrt")), "sqrt");
  EXPECT_EQ(to_string(hyperparameters{{"a", std::int64_t{1}}, {"b", 0.5}}),
            "a=1;b=0.5");
}

TEST(hyperparameters, baseline_booster_defaults) {
  auto const h = default_hyperparameters(algorithm::xgboost);
  EXPECT_EQ(std::get<double>(h.at("lambda")), 0.5650701862593042);
  EXPECT_EQ(std::get<double>(h.at("alpha")), 0.0016650896783581535);
  EXPECT_EQ(std::get<double>(h.at("learning_rate")), 0.009);
  EXPECT_EQ(std::get<std::int64_t>(h.at("n_estimators")), 625);
  EXPECT_EQ(std::get<std::int64_t>(h.at("max_depth")), 5);
  EXPECT_EQ(std::get<double>(h.at("min_child_weight")), 6.0);
  EXPECT_EQ(std::get<double>(h.at("subsample")), 0.5);
  EXPECT_EQ(std::get<double>(h.at("colsample_bytree")), 1.0);
  EXPECT_EQ(std::get<std::string>(h.at("objective")), "reg:squarederror");
}

TEST(make_spec, rejects_unknown_and_invalid) {
  EXPECT_THROW(make_spec(algorithm::logistic, {{"gamma", 1.0}}),
               std::invalid_argument);
  EXPECT_THROW(make_spec(algorithm::random_forest,
                         {{"n_estimators", std::int64_t{0}}}),
               std::invalid_argument);
  EXPECT_THROW(make_spec(algorithm::decision_tree, {{"criterion", std::string{"mse"}}}),
               std::invalid_argument);
  EXPECT_NO_THROW(make_spec(algorithm::decision_tree,
                            {{"max_depth", std::int64_t{3}}}));
  EXPECT_THROW(parse_algorithm("svm"), std::invalid_argument);
}

TEST(logistic, separable_data_is_fit_exactly) {
  auto const train_set = separable(1, 200);
  auto const test_set = separable(2, 200);
  auto const m = train(make_spec(algorithm::logistic, {{"C", 100.0}}), train_set);
  EXPECT_EQ(test_ba(m, test_set), 1.0);
}

TEST(logistic, zero_coefficients_give_one_half) {
  logistic_model lm{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, 0.0};
  trained_model const m{make_spec(algorithm::logistic), 2, lm};
  std::vector<double> const x{3.0, -7.0};
  EXPECT_EQ(m.predict_proba(x), 0.5);
}

TEST(logistic, gradient_matches_finite_differences) {
  auto const ds = planted_signal_table(60, 3, 1, 0.2, 7);
  std::mt19937_64 rng{3};
  std::normal_distribution<double> g{0.0, 1.0};
  for (auto k = 0; k < 20; ++k) {
    std::vector<double> th(4);
    for (auto& v : th) {
      v = g(rng);
    }
    std::vector<double> grad;
    logistic_objective(ds, th, 0.3, &grad);
    for (std::size_t c = 0; c < th.size(); ++c) {
      auto const h = 1e-6;
      auto up = th, down = th;
      up[c] += h;
      down[c] -= h;
      auto const fd = (logistic_objective(ds, up, 0.3) -
                       logistic_objective(ds, down, 0.3)) /
                      (2 * h);
      EXPECT_LE(std::abs(fd - grad[c]), 1e-5 * std::max(1.0, std::abs(grad[c])))
          << "point " << k << " coord " << c;
    }
  }
}

TEST(decision_tree_model, stump_cannot_solve_xor) {
  auto const m = train(make_spec(algorithm::decision_tree,
                                 {{"max_depth", std::int64_t{1}}}),
                       xor_table(1, 400));
  EXPECT_LE(test_ba(m, xor_table(2, 400)), 0.75);
}

TEST(gradient_boosting, baseline_booster_on_planted_signal) {
  auto const ds = planted_signal_table(200, 5, 2, 0.02, 17);
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (i % 4 == 3 ? te : tr).push_back(i);
  }
  auto const m = train(make_spec(algorithm::xgboost, {}, 5), ds.subset(tr));
  EXPECT_GE(test_ba(m, ds.subset(te)), 0.9);
  ASSERT_EQ(m.info().warnings.size(), 1u);
}

TEST(gradient_boosting, zero_estimators_predict_base_rate) {
  auto const ds = planted_signal_table(100, 2, 0, 0.1, 3);
  auto const m = train(make_spec(algorithm::gradient_boosting,
                                 {{"n_estimators", std::int64_t{0}}}),
                       ds);
  auto const rate =
      static_cast<double>(ds.positives()) / static_cast<double>(ds.size());
  EXPECT_NEAR(m.predict_proba(ds.row(0)), rate, 1e-12);
}

TEST(gradient_boosting, training_loss_never_increases) {
  auto const ds = planted_signal_table(300, 4, 1, 0.15, 9);
  auto const m = train(make_spec(algorithm::gradient_boosting,
                                 {{"n_estimators", std::int64_t{40}},
                                  {"lambda", 1.0}}),
                       ds);
  auto const& loss = m.info().loss_trace;
  ASSERT_EQ(loss.size(), 41u);  // initial loss, then one per stage
  for (std::size_t s = 1; s < loss.size(); ++s) {
    EXPECT_LE(loss[s], loss[s - 1] + 1e-12) << s;
  }
}

TEST(random_forest, single_full_tree_equals_decision_tree) {
  auto const ds = planted_signal_table(150, 4, 0, 0.2, 12);
  auto const forest = train(
      make_spec(algorithm::random_forest, {{"n_estimators", std::int64_t{1}},
                                           {"bootstrap", false},
                                           {"max_features", std::monostate{}}},
                3),
      ds);
  auto const tree = train(make_spec(algorithm::decision_tree, {}, 3), ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(forest.predict_proba(ds.row(i)), tree.predict_proba(ds.row(i)));
  }
}

TEST(random_forest, identical_trees_average_to_one_tree) {
  auto const ds = planted_signal_table(80, 2, 0, 0.2, 4);
  auto const tree = train(make_spec(algorithm::decision_tree, {}, 1), ds);
  auto const& t = tree.as<tree_model>()->tree;
  forest_model f{{t, t, t}};
  trained_model const forest{make_spec(algorithm::random_forest), 2, f};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_DOUBLE_EQ(forest.predict_proba(ds.row(i)), tree.predict_proba(ds.row(i)));
  }
}

TEST(adaboost, learns_planted_signal) {
  auto const ds = planted_signal_table(300, 3, 1, 0.05, 22);
  auto const m = train(make_spec(algorithm::adaboost), ds);
  EXPECT_GE(test_ba(m, planted_signal_table(300, 3, 1, 0.05, 23)), 0.85);
}

TEST(train, deterministic_for_a_seed) {
  auto const ds = planted_signal_table(120, 3, 0, 0.2, 8);
  for (auto const a : all_algorithms()) {
    auto const m1 = train(make_spec(a, {}, 42), ds);
    auto const m2 = train(make_spec(a, {}, 42), ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ASSERT_EQ(m1.predict_proba(ds.row(i)), m2.predict_proba(ds.row(i)))
          << to_string(a);
    }
  }
}

TEST(train, input_errors) {
  auto ds = planted_signal_table(20, 2, 0, 0.0, 1);
  auto const m = train(make_spec(algorithm::logistic), ds);
  std::vector<double> const wrong{1.0};
  EXPECT_THROW(m.predict_proba(wrong), std::invalid_argument);

  auto one = ds;
  for (std::size_t i = 0; i < one.size(); ++i) {
    one.set_label(i, true);
  }
  EXPECT_THROW(train(make_spec(algorithm::logistic), one), data_error);

  ds.set_value(3, 1, std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW(train(make_spec(algorithm::decision_tree), ds), data_error);
}

TEST(trained_model, save_load_round_trip) {
  auto const ds = planted_signal_table(100, 3, 2, 0.1, 30);
  for (auto const a : all_algorithms()) {
    auto const m = train(make_spec(a, {}, 7), ds);
    std::stringstream s;
    m.save(s);
    auto const back = trained_model::load(s);
    EXPECT_EQ(back.spec().algo, a);
    EXPECT_EQ(back.width(), 3u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ASSERT_EQ(back.predict_proba(ds.row(i)), m.predict_proba(ds.row(i)))
          << to_string(a);
    }
  }
}
