#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "delaynet/month.h"
#include "delaynet/snapshot.h"

namespace delaynet {

enum class feature_set { tf, wtf, ncm };

std::string_view to_string(feature_set s);
feature_set parse_feature_set(std::string_view s);  // "tf" | "wtf" | "ncm"
std::vector<feature_set> parse_feature_sets(std::string_view csv);

inline constexpr std::size_t tf_width = 11;
inline constexpr std::size_t wtf_width = 11;
inline constexpr std::size_t ncm_width = 6;

// Damping of the length-3 term in the local path indices.
inline constexpr double local_path_epsilon = 0.01;

using tf_values = std::array<double, tf_width>;
using wtf_values = std::array<double, wtf_width>;
using ncm_values = std::array<double, ncm_width>;

// Canonical component names, in output order.
std::span<std::string_view const> component_names(feature_set s);
std::size_t width(feature_set s);

// Locates a component by name across all sets.
struct component_ref {
  feature_set set;
  std::size_t index;
};
std::optional<component_ref> find_component(std::string_view name);

// Per-snapshot precomputation: walk-count matrices (A^2, W^2) and closeness.
// Immutable after construction; safe to share between readers.
class feature_extractor {
public:
  // Graphs above this node count use sparse matrix products.
  static constexpr std::size_t dense_limit = 2000;

  explicit feature_extractor(graph_snapshot const& g);
  feature_extractor(graph_snapshot const& g, bool force_sparse);

  graph_snapshot const& graph() const { return g_; }

  // cn sa ja so hpi hdi lhni pa aa ra lpi
  tf_values unweighted(std::size_t i, std::size_t j) const;
  // wcn wsa wja wso whpi whdi wlhni wpa waa wra wlpi; `waa_skips` counts
  // common neighbours dropped from WAA because their strength is <= 1.
  wtf_values weighted(std::size_t i, std::size_t j,
                      std::size_t* waa_skips = nullptr) const;
  // deg_src deg_tgt clo_src clo_tgt str_src str_tgt
  ncm_values centrality(std::size_t i, std::size_t j) const;

  std::vector<double> compute(feature_set s, std::size_t i,
                              std::size_t j) const;

  double closeness(std::size_t i) const { return closeness_.at(i); }

private:
  double walks2(bool weighted, std::size_t i, std::size_t j) const;
  double walks3(bool weighted, std::size_t i, std::size_t j) const;

  graph_snapshot const& g_;
  bool sparse_;
  Eigen::MatrixXd a_, w_, a2_, w2_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sa_, sw_, sa2_, sw2_;
  std::vector<double> closeness_;
};

tf_values unweighted_features(graph_snapshot const& g, std::string_view a,
                              std::string_view b);
wtf_values weighted_features(graph_snapshot const& g, std::string_view a,
                             std::string_view b);
ncm_values centrality_features(graph_snapshot const& g, std::string_view a,
                               std::string_view b);

struct feature_vector {
  month_key month;
  std::string source;
  std::string target;
  feature_set set;
  std::vector<double> values;
  std::optional<bool> label;
};

// One vector per requested set per row, in row-major then set order.
// Throws data_error naming the row when an endpoint is not in `g`.
std::vector<feature_vector> featurize_snapshot(
    graph_snapshot const& g, std::span<monthly_edge_aggregate const> rows,
    std::span<feature_set const> sets);

// Wide table: one line per labelled row, columns for every requested set.
struct feature_table {
  std::vector<std::string> columns;
  struct row {
    month_key month;
    std::string source;
    std::string target;
    std::optional<bool> label;
    std::vector<double> values;
  };
  std::vector<row> rows;
};

// Featurises every aggregate against the snapshot of its month.
feature_table featurize(std::span<graph_snapshot const> snapshots,
                        std::span<monthly_edge_aggregate const> rows,
                        std::span<feature_set const> sets);

void write_feature_table(std::ostream& out, feature_table const& t);
feature_table read_feature_table(std::istream& in);

}  // namespace delaynet
