#include <algorithm>
#include <set>
#include <sstream>

#include "gtest/gtest.h"

#include "delaynet/common.h"
#include "delaynet/search.h"
#include "delaynet/synth.h"

using namespace delaynet;

TEST(grid, sizes_and_decoding) {
  search_grid const g{{"a", {std::int64_t{1}, std::int64_t{2}}},
                      {"b", {std::string{"x"}, std::string{"y"}, std::string{"z"}}}};
  EXPECT_EQ(grid_size(g), 6u);
  auto const c1 = grid_config(g, 1);
  EXPECT_EQ(std::get<std::int64_t>(c1.at("a")), 1);
  EXPECT_EQ(std::get<std::string>(c1.at("b")), "y");
  auto const c3 = grid_config(g, 3);
  EXPECT_EQ(std::get<std::int64_t>(c3.at("a")), 2);
  EXPECT_EQ(std::get<std::string>(c3.at("b")), "x");
  EXPECT_THROW(grid_config(g, 6), std::out_of_range);

  EXPECT_TRUE(default_grid(algorithm::xgboost).empty());
  for (auto const a : {algorithm::logistic, algorithm::decision_tree,
                       algorithm::random_forest, algorithm::gradient_boosting,
                       algorithm::adaboost}) {
    auto const grid = default_grid(a);
    ASSERT_GT(grid_size(grid), 1u) << to_string(a);
    // Every configuration is a valid spec.
    EXPECT_NO_THROW(make_spec(a, grid_config(grid, grid_size(grid) - 1)));
  }
}

TEST(randomized_search_cv, single_configuration) {
  auto const ds = planted_signal_table(100, 3, 0, 0.1, 2);
  search_grid const g{{"max_depth", {std::int64_t{2}}}};
  auto const r = randomized_search_cv(algorithm::decision_tree, g, ds, 25, 5, 1);
  ASSERT_EQ(r.table.size(), 1u);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(std::get<std::int64_t>(r.best.params.at("max_depth")), 2);
  EXPECT_EQ(r.table[0].fold_ba.size(), 5u);
}

TEST(randomized_search_cv, covers_grid_when_budget_exceeds_it) {
  auto const ds = planted_signal_table(100, 3, 0, 0.1, 2);
  search_grid const g{{"max_depth", {std::int64_t{1}, std::int64_t{3}}},
                      {"criterion", {std::string{"gini"}, std::string{"entropy"}}}};
  auto const r = randomized_search_cv(algorithm::decision_tree, g, ds, 50, 4, 1);
  ASSERT_EQ(r.table.size(), 4u);
  std::set<std::string> seen;
  for (auto const& row : r.table) {
    seen.insert(to_string(row.config));
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(randomized_search_cv, samples_distinct_configurations) {
  auto const ds = planted_signal_table(60, 2, 0, 0.1, 2);
  auto const grid = default_grid(algorithm::decision_tree);
  auto const r = randomized_search_cv(algorithm::decision_tree, grid, ds, 10, 3, 4);
  ASSERT_EQ(r.table.size(), 10u);
  std::set<std::string> seen;
  for (auto const& row : r.table) {
    seen.insert(to_string(row.config));
  }
  EXPECT_EQ(seen.size(), 10u);
}

// With the default configuration inside an exhaustively searched grid, the
// winner can be no worse, and it is the first row with the top mean.
TEST(randomized_search_cv, winner_dominates_default) {
  auto const ds = planted_signal_table(150, 4, 1, 0.25, 3);
  search_grid const g{{"max_depth", {std::monostate{}, std::int64_t{1},
                                     std::int64_t{2}, std::int64_t{4}}},
                      {"min_samples_leaf", {std::int64_t{1}, std::int64_t{5}}}};
  auto const r = randomized_search_cv(algorithm::decision_tree, g, ds, 100, 5, 9);
  ASSERT_EQ(r.table.size(), 8u);
  auto const def = std::find_if(begin(r.table), end(r.table), [](auto const& row) {
    return std::holds_alternative<std::monostate>(row.config.at("max_depth")) &&
           std::get<std::int64_t>(row.config.at("min_samples_leaf")) == 1;
  });
  ASSERT_NE(def, end(r.table));
  auto const best = r.table[r.best_index].mean_ba;
  EXPECT_GE(best, def->mean_ba - 1e-12);
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    EXPECT_LE(r.table[i].mean_ba, best);
    if (i < r.best_index) {
      EXPECT_LT(r.table[i].mean_ba, best);
    }
  }
}

TEST(randomized_search_cv, single_class_folds_are_skipped) {
  labeled_dataset ds{{"x"}};
  for (auto i = 0; i < 20; ++i) {
    std::vector<double> const v{static_cast<double>(i)};
    ds.add_row({2019, 1}, v, i < 2);
  }
  search_grid const g{{"max_depth", {std::int64_t{1}}}};
  auto const r = randomized_search_cv(algorithm::decision_tree, g, ds, 1, 5, 1);
  std::size_t skipped = 0;
  for (auto const& f : r.table[0].fold_ba) {
    skipped += f ? 0 : 1;
  }
  EXPECT_EQ(skipped, 3u);
  EXPECT_EQ(r.warnings.size(), 3u);
}

TEST(randomized_search_cv, deterministic_and_reported) {
  auto const ds = planted_signal_table(80, 2, 0, 0.2, 5);
  auto const grid = default_grid(algorithm::adaboost);
  auto const a = randomized_search_cv(algorithm::adaboost, grid, ds, 3, 3, 11);
  auto const b = randomized_search_cv(algorithm::adaboost, grid, ds, 3, 3, 11);
  std::ostringstream sa, sb;
  write_search_report(sa, a);
  write_search_report(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(sa.str().find("mean_ba"), std::string::npos);
}
