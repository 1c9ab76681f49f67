#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "delaynet/dataset.h"
#include "delaynet/metrics.h"
#include "delaynet/models.h"

namespace delaynet {

enum class protocol { simultaneous, nonsimultaneous };

std::string_view to_string(protocol p);
protocol parse_protocol(std::string_view s);

// Train/test index sets of one experiment. A simultaneous plan holds one
// part per month (models are fit per period) unless pooled; a
// non-simultaneous plan holds a single part.
struct protocol_plan {
  struct part {
    std::optional<month_key> period;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
  };

  protocol kind{protocol::simultaneous};
  std::uint64_t seed{0};
  std::vector<part> parts;
  std::vector<std::string> warnings;
};

struct simultaneous_options {
  double train_fraction{0.7};
  // One model per month; otherwise a single model on the pooled split.
  bool per_period{true};
};

protocol_plan plan_simultaneous(labeled_dataset const& ds, std::uint64_t seed,
                                simultaneous_options const& opt = {});

// Throws std::invalid_argument unless every train month precedes every test
// month; data_error when either side selects no rows.
protocol_plan plan_nonsimultaneous(labeled_dataset const& ds,
                                   std::span<month_key const> train_months,
                                   std::span<month_key const> test_months,
                                   std::uint64_t seed);

// Train on the first floor(fraction * M) distinct months (at least one on
// each side), test on the rest.
std::pair<std::vector<month_key>, std::vector<month_key>>
default_nonsimultaneous_months(labeled_dataset const& ds,
                               double train_fraction = 0.7);

// Undersamples each part's train side and fits a model. Parts whose train
// side is single-class are left empty and reported in `warnings`.
std::vector<std::optional<trained_model>> fit_plan(
    protocol_plan const& plan, labeled_dataset const& ds,
    model_spec const& spec, std::vector<std::string>* warnings = nullptr);

struct period_metrics {
  month_key month;
  std::size_t rows{0};
  confusion_matrix cm;
  std::optional<double> balanced_accuracy;
  std::optional<double> f1;
  std::optional<double> roc_auc;
};

struct metrics_report {
  protocol kind{protocol::simultaneous};
  std::string classifier;
  std::string feature_set;
  std::vector<month_key> months;  // test months covered
  std::uint64_t seed{0};
  confusion_matrix cm;
  double balanced_accuracy{0.0};
  double f1{0.0};
  double roc_auc{0.5};
  double null_balanced_accuracy{0.5};
  std::vector<period_metrics> per_period;
  std::vector<std::string> warnings;
};

metrics_report evaluate_plan(
    protocol_plan const& plan, labeled_dataset const& ds,
    std::span<std::optional<trained_model> const> models);

metrics_report run_simultaneous(labeled_dataset const& ds,
                                model_spec const& spec, std::uint64_t seed,
                                simultaneous_options const& opt = {});

metrics_report run_nonsimultaneous(labeled_dataset const& ds,
                                   std::span<month_key const> train_months,
                                   std::span<month_key const> test_months,
                                   model_spec const& spec, std::uint64_t seed);

enum class importance_metric { balanced_accuracy, roc_auc };

// Permutation importance; not SHAP. metric(original) - metric(column
// shuffled), averaged over repeats.
struct feature_importance {
  std::string feature;
  double mean{0.0};
  double stddev{0.0};
};

std::vector<feature_importance> permutation_importance(
    trained_model const& model, labeled_dataset const& test,
    importance_metric metric, std::size_t repeats, std::uint64_t seed,
    std::span<std::string const> features = {});

// One "key=value ..." record per run.
void write_report_record(std::ostream& out, metrics_report const& r);
// protocol,classifier,feature_set,month,rows,tp,fp,tn,fn,ba,f1,auc
void write_period_header(std::ostream& out);
void write_period_metrics(std::ostream& out, metrics_report const& r);

// Parsed back for aggregation.
struct report_record {
  std::string protocol;
  std::string classifier;
  std::string feature_set;
  double balanced_accuracy{0.0};
  double f1{0.0};
  double roc_auc{0.0};
};
std::vector<report_record> read_report_records(std::istream& in);

// classifier x feature-set matrix of `field` (ba | f1 | auc) for one
// protocol, as delimited text.
void write_metric_matrix(std::ostream& out,
                         std::span<report_record const> records,
                         std::string_view protocol_name,
                         std::string_view field = "ba");

void write_plan(std::ostream& out, protocol_plan const& plan);
protocol_plan read_plan(std::istream& in);

}  // namespace delaynet
