#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semproj/dataset.hpp"
#include "semproj/eval_stats.hpp"

namespace semproj {

struct RunConfig {
  std::string embeddings_path;
  std::size_t vocab_limit = 500000;
  std::size_t n_perm = 10000;
  double fdr_q = 0.05;
  std::uint64_t seed = 0;
  double reliability_threshold = 0.07;
  int max_outlier_removals = 10;
  double norming_percentile = 75.0;
  std::size_t exhaustive_limit = 40320;
  unsigned threads = 1;
  bool keep_going = false;
  bool emit_svg = false;
  bool run_controls = true;
  bool run_sweeps = true;

  void validate() const;
};

struct ControlRow {
  std::string category;
  std::string feature;
  std::string method;  // subspace, single_end_strong, ..., euclidean_dist_weak
  double r = 0.0;
  double oc_p = 0.0;
};

struct SchemeComparisonRow {
  std::string measure;  // r | oc_p
  std::string scheme;
  SchemeComparison comparison;
};

struct RunOutput {
  std::vector<EvalReport> reports;        // every evaluated experiment
  std::vector<std::string> flagged;       // low-reliability experiment ids
  std::vector<std::string> kept;          // ids entering FDR and summaries
  std::vector<std::string> failures;      // "id: message" (only with keep_going)
  std::vector<ControlRow> controls;
  std::vector<SchemeComparisonRow> scheme_comparisons;
  std::map<std::string, std::vector<SweepRow>> sweeps;  // by experiment id

  double median_r = 0.0, iqr_r = 0.0;
  double median_ocp = 0.0, iqr_ocp = 0.0;
  double median_adjusted_r = 0.0, median_adjusted_ocp = 0.0;
  double median_is_r = 0.0, median_is_ocp = 0.0;
  int n_significant = 0;
};

/// Loads every ratings CSV in the directory, keyed by experiment id.
std::map<std::string, RatingsTable> load_ratings_dir(const std::string& dir);

/// Evaluates every dataset pair, flags low-reliability experiments, applies
/// FDR across the kept set per measure, and runs the control-scheme and
/// outlier-sweep analyses. Writes the report files into out_dir when it is
/// non-empty. Deterministic for a fixed config at any thread count.
RunOutput run_all(const EmbeddingStore& store, const Dataset& dataset,
                  const std::map<std::string, RatingsTable>& ratings, const RunConfig& config,
                  const std::string& out_dir = "");

/// Fixed-precision float formatting shared by all report writers so reruns
/// are byte-identical.
std::string format_value(double v);

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& items, const std::vector<double>& model_z,
                       const std::vector<double>& human_z);

}  // namespace semproj
