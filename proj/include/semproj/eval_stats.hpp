#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semproj/embed_store.hpp"
#include "semproj/projection.hpp"
#include "semproj/ratings.hpp"
#include "semproj/subspace.hpp"

namespace semproj {

enum class Measure { PearsonR, OrderConsistency };

std::string to_string(Measure measure);

/// Product-moment correlation. Requires n >= 3 and non-constant inputs.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

/// Fraction of unordered item pairs whose difference has the same sign in
/// both lists; ties earn 0.5 credit.
double pairwise_oc(const std::vector<double>& x, const std::vector<double>& y);

struct NullDistribution {
  Measure kind = Measure::PearsonR;
  std::vector<double> samples;
  double mu = 0.0;     // Gaussian fit (meaningful for PearsonR)
  double sigma = 0.0;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
};

struct PermutationOutcome {
  double observed = 0.0;
  double p = 0.0;
  NullDistribution null;
};

/// Null built by permuting the model scores against fixed human scores.
/// Exhaustive enumeration when n! <= exhaustive_limit, otherwise n_perm
/// seeded draws. PearsonR: one-sided upper-tail p from a Gaussian fit to
/// the null. OrderConsistency: exceedance count (null >= observed) / N.
PermutationOutcome permutation_test(const std::vector<double>& model,
                                    const std::vector<double>& human, Measure measure,
                                    std::size_t n_perm = 10000, std::uint64_t seed = 0,
                                    std::size_t exhaustive_limit = 40320);

struct FdrResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};

/// Benjamini-Yekutieli correction under dependency.
FdrResult fdr_by(const std::vector<double>& pvals, double q = 0.05);

/// Reliability-normalized score, capped at 1. For PearsonR this is
/// |value| / reliability (sqrt of the squared ratio); the caller keeps the
/// sign separately.
double adjust_upper_bound(double value, double reliability, Measure kind);

struct SchemeComparison {
  double median_a = 0.0;
  double median_b = 0.0;
  double mean_diff = 0.0;
  double cohen_d = 0.0;
  double p = 0.0;  // one-sided paired sign-flip test, H1: a > b
  std::size_t n = 0;
  bool exhaustive = false;
};

SchemeComparison compare_schemes(const std::map<std::string, double>& values_a,
                                 const std::map<std::string, double>& values_b,
                                 std::size_t n_perm = 10000, std::uint64_t seed = 0,
                                 std::size_t exhaustive_limit = 40320);

struct EvalConfig {
  std::size_t n_perm = 10000;
  std::uint64_t seed = 0;
  std::size_t exhaustive_limit = 40320;
};

struct EvalReport {
  std::string category;
  std::string feature;
  int n_items = 0;
  double r = 0.0;
  double p_r = 1.0;
  double oc_p = 0.0;
  double p_ocp = 1.0;
  double mean_is_r = 0.0;
  double is_ocp = 0.0;
  double adjusted_r = 0.0;
  bool adjusted_r_negative = false;
  double adjusted_ocp = 0.0;
  double fdr_p_r = 1.0;      // filled once FDR runs across experiments
  double fdr_p_ocp = 1.0;
  bool significant = false;
  int n_participants_retained = 0;
  std::vector<std::string> excluded_participants;
  std::vector<std::string> dropped_items;  // present on one side only
  std::vector<std::string> unresolved_items;

  std::string experiment_id() const { return category + ":" + feature; }
};

/// Paired model/human score vectors on the intersected item set, kept so
/// downstream consumers (sweep, scatter output) recompute nothing.
struct ExperimentEvaluation {
  EvalReport report;
  std::vector<std::string> items;
  std::vector<double> model_z;
  std::vector<double> human_mean_z;
  ReliabilityOutcome reliability;
  ProjectionResult projection;
};

/// Full per-experiment pipeline: resolve items, build the subspace, project,
/// run the ratings reliability pipeline, intersect item sets, and compute
/// r / OC_p with permutation p-values and reliability-adjusted scores.
/// FDR across experiments is applied afterwards by the caller.
ExperimentEvaluation evaluate_experiment(const EmbeddingStore& store,
                                         const std::string& category,
                                         const std::vector<std::string>& items,
                                         const FeaturePoles& poles,
                                         const RatingsTable& ratings,
                                         const EvalConfig& config);

struct SweepRow {
  int k = 0;
  std::string removed_item;  // the item removed at this step ("" for k=0)
  int n_items = 0;
  double r = 0.0;
  double oc_p = 0.0;
  double mean_is_r = 0.0;
  double is_ocp = 0.0;
};

/// Iterative extreme-item removal: items are ranked once on the full set by
/// |z| of their mean human z-rating (ties broken by name), then the top-k
/// are removed at step k and all four statistics recomputed.
std::vector<SweepRow> outlier_sweep(const ExperimentEvaluation& eval, int max_remove = 10);

}  // namespace semproj
