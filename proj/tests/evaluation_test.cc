#include <cmath>
#include <sstream>

#include "gtest/gtest.h"

#include "delaynet/common.h"
#include "delaynet/evaluation.h"
#include "delaynet/synth.h"

using namespace delaynet;

namespace {

labeled_dataset synthetic_ncm(synth_config const& cfg) {
  auto const c = generate(cfg);
  std::vector<feature_set> const sets{feature_set::ncm};
  return to_dataset(featurize(c.snapshots, c.aggregates, sets), sets);
}

}  // namespace

TEST(protocol, parse) {
  EXPECT_EQ(parse_protocol("simultaneous"), protocol::simultaneous);
  EXPECT_EQ(parse_protocol("nonsimultaneous"), protocol::nonsimultaneous);
  EXPECT_THROW(parse_protocol("later"), std::invalid_argument);
}

TEST(plan_simultaneous, one_part_per_month) {
  auto const ds = planted_signal_table(120, 2, 0, 0.1, 1, 4);
  auto const plan = plan_simultaneous(ds, 3);
  ASSERT_EQ(plan.parts.size(), 4u);
  for (auto const& p : plan.parts) {
    EXPECT_EQ(p.train.size(), 21u);
    EXPECT_EQ(p.test.size(), 9u);
    for (auto const i : p.test) {
      EXPECT_EQ(ds.month(i), *p.period);
    }
  }
  EXPECT_EQ(plan_simultaneous(ds, 3, {0.7, false}).parts.size(), 1u);
}

TEST(plan_nonsimultaneous, ordering_enforced) {
  auto const ds = planted_signal_table(120, 2, 0, 0.1, 1, 4);
  std::vector<month_key> const a{{2019, 1}, {2019, 2}};
  std::vector<month_key> const b{{2019, 2}, {2019, 3}};
  std::vector<month_key> const c{{2019, 3}, {2019, 4}};
  std::vector<month_key> const missing{{2020, 1}};
  EXPECT_THROW(plan_nonsimultaneous(ds, a, b, 1), std::invalid_argument);
  EXPECT_THROW(plan_nonsimultaneous(ds, c, a, 1), std::invalid_argument);
  EXPECT_THROW(plan_nonsimultaneous(ds, a, missing, 1), data_error);
  auto const plan = plan_nonsimultaneous(ds, a, c, 1);
  ASSERT_EQ(plan.parts.size(), 1u);
  EXPECT_EQ(plan.parts[0].train.size(), 60u);
  EXPECT_EQ(plan.parts[0].test.size(), 60u);

  auto const [tr, te] = default_nonsimultaneous_months(ds);
  EXPECT_EQ(tr.size(), 2u);
  EXPECT_EQ(te.size(), 2u);
}

// The overall confusion matrix equals scoring every test row with its
// part's model, and the headline metrics follow from it.
TEST(evaluate_plan, metrics_follow_from_predictions) {
  auto const ds = planted_signal_table(400, 3, 1, 0.15, 6, 4);
  auto const plan = plan_simultaneous(ds, 2);
  auto const spec = make_spec(algorithm::decision_tree,
                              {{"max_depth", std::int64_t{2}}}, 1);
  auto const models = fit_plan(plan, ds, spec);
  auto const r = evaluate_plan(plan, ds, models);

  confusion_matrix cm;
  for (std::size_t k = 0; k < plan.parts.size(); ++k) {
    ASSERT_TRUE(models[k]);
    for (auto const i : plan.parts[k].test) {
      cm.add(ds.label(i), models[k]->predict(ds.row(i)));
    }
  }
  EXPECT_EQ(r.cm, cm);
  EXPECT_EQ(r.balanced_accuracy, balanced_accuracy(cm));
  EXPECT_EQ(r.f1, f1(cm));
  EXPECT_EQ(r.per_period.size(), 4u);
  EXPECT_EQ(r.null_balanced_accuracy, 0.5);
}

TEST(run_simultaneous, reproducible) {
  auto const ds = planted_signal_table(300, 3, 1, 0.15, 6, 3);
  auto const spec = make_spec(algorithm::random_forest,
                              {{"n_estimators", std::int64_t{10}}}, 4);
  auto const a = run_simultaneous(ds, spec, 8);
  auto const b = run_simultaneous(ds, spec, 8);
  std::ostringstream sa, sb;
  write_report_record(sa, a);
  write_period_metrics(sa, a);
  write_report_record(sb, b);
  write_period_metrics(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(permutation_importance, unused_feature_scores_zero) {
  auto const ds = planted_signal_table(300, 3, 1, 0.1, 12);
  auto const stump = train(make_spec(algorithm::decision_tree,
                                     {{"max_depth", std::int64_t{1}}}),
                           ds);
  auto const test = planted_signal_table(200, 3, 1, 0.1, 13);
  auto const imp = permutation_importance(
      stump, test, importance_metric::balanced_accuracy, 5, 1);
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].mean, 0.0);
  EXPECT_EQ(imp[0].stddev, 0.0);
  EXPECT_EQ(imp[2].mean, 0.0);
  EXPECT_GT(imp[1].mean, 0.2);
  EXPECT_THROW(permutation_importance(stump, test,
                                      importance_metric::roc_auc, 0, 1),
               std::invalid_argument);
}

TEST(permutation_importance, planted_feature_ranks_first) {
  auto const ds = planted_signal_table(400, 5, 3, 0.1, 31);
  auto const m = train(make_spec(algorithm::gradient_boosting, {}, 2), ds);
  auto const test = planted_signal_table(300, 5, 3, 0.1, 32);
  for (auto const metric :
       {importance_metric::balanced_accuracy, importance_metric::roc_auc}) {
    auto const imp = permutation_importance(m, test, metric, 5, 3);
    for (std::size_t c = 0; c < imp.size(); ++c) {
      if (c != 3) {
        EXPECT_GT(imp[3].mean, imp[c].mean);
      }
    }
  }
}

TEST(plan, round_trip) {
  auto const ds = planted_signal_table(90, 2, 0, 0.1, 1, 3);
  auto const plan = plan_simultaneous(ds, 5);
  std::stringstream s;
  write_plan(s, plan);
  auto const back = read_plan(s);
  EXPECT_EQ(back.kind, plan.kind);
  EXPECT_EQ(back.seed, plan.seed);
  ASSERT_EQ(back.parts.size(), plan.parts.size());
  for (std::size_t k = 0; k < plan.parts.size(); ++k) {
    EXPECT_EQ(back.parts[k].period, plan.parts[k].period);
    EXPECT_EQ(back.parts[k].train, plan.parts[k].train);
    EXPECT_EQ(back.parts[k].test, plan.parts[k].test);
  }
}

TEST(metric_matrix, layout) {
  std::vector<report_record> const rows{
      {"simultaneous", "logistic", "tf", 0.81234, 0.5, 0.6},
      {"simultaneous", "logistic", "ncm", 0.9, 0.5, 0.6},
      {"nonsimultaneous", "logistic", "tf", 0.1, 0.5, 0.6}};
  std::ostringstream out;
  write_metric_matrix(out, rows, "simultaneous");
  EXPECT_NE(out.str().find("TF"), std::string::npos);
  EXPECT_NE(out.str().find("0.812"), std::string::npos);
  EXPECT_EQ(out.str().find("0.100"), std::string::npos);
}

// With a stationary generator, holding out later months costs little.
TEST(protocols, stationary_corpus_transfers) {
  synth_config cfg;
  cfg.months = 10;
  cfg.seed = 3;
  auto const ds = synthetic_ncm(cfg);
  auto const spec = make_spec(algorithm::gradient_boosting, {}, 1);
  auto const sim = run_simultaneous(ds, spec, 1);
  auto const [tr, te] = default_nonsimultaneous_months(ds);
  auto const non = run_nonsimultaneous(ds, tr, te, spec, 1);
  EXPECT_NEAR(non.balanced_accuracy, sim.balanced_accuracy, 0.05);
}

TEST(protocols, inverted_signal_defeats_later_months) {
  synth_config cfg;
  cfg.months = 6;
  cfg.stationary = false;
  cfg.seed = 4;
  auto const ds = synthetic_ncm(cfg);
  std::vector<month_key> const tr{{2019, 1}, {2019, 2}, {2019, 3}};
  std::vector<month_key> const te{{2019, 4}, {2019, 5}, {2019, 6}};
  auto const spec = make_spec(algorithm::gradient_boosting, {}, 1);
  auto const non = run_nonsimultaneous(ds, tr, te, spec, 1);
  EXPECT_LE(non.balanced_accuracy, 0.55);
}
