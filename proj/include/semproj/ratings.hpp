#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace semproj {

/// Complete participant x item rating matrix for one (category, feature)
/// experiment. Raw values are slider positions in [0, 100].
struct RatingsTable {
  std::string category;
  std::string feature;
  std::vector<std::string> participants;
  std::vector<std::string> items;
  Eigen::MatrixXd raw;      // participants x items
  Eigen::MatrixXd zscored;  // empty until zscore_participants has run

  std::string experiment_id() const { return category + ":" + feature; }
  bool has_zscores() const { return zscored.size() > 0; }
};

struct ReliabilityReport {
  std::vector<double> is_r;      // leave-one-out Pearson per participant
  std::vector<double> fisher_z;  // atanh(is_r)
  double mean_is_r = 0.0;        // tanh(mean of fisher_z)
  double is_ocp = 0.0;
  std::vector<std::string> excluded;
  int n_items = 0;
  int n_participants_retained = 0;
};

/// CSV with header `experiment,participant,item,rating`; experiment id is
/// `category:feature` and must be the same on every row.
RatingsTable load_ratings(const std::string& path);

/// Per-participant sample-SD z-scoring. Constant-rating participants are
/// dropped before scoring; their ids are appended to *dropped if given.
RatingsTable zscore_participants(const RatingsTable& table,
                                 std::vector<std::string>* dropped = nullptr);

/// Leave-one-out inter-subject correlations with Fisher-transformed mean.
ReliabilityReport inter_subject_r(const RatingsTable& table);

/// Single-pass removal of participants whose Fisher z lies below the group
/// mean by more than 2.5 sample SDs.
std::pair<RatingsTable, std::vector<std::string>> exclude_outlier_participants(
    const ReliabilityReport& report, const RatingsTable& table);

/// Leave-one-out order consistency, plain-averaged across participants.
double inter_subject_ocp(const RatingsTable& table);

/// Per-item mean of retained participants' z-scores, in item order.
std::vector<double> mean_item_ratings(const RatingsTable& table);

/// Full reliability pipeline: z-score, IS-r, outlier exclusion, then one
/// recomputation of IS-r and IS-OC_p on the retained set.
struct ReliabilityOutcome {
  RatingsTable table;  // z-scored, outliers removed
  ReliabilityReport report;
  std::vector<std::string> dropped_constant;
};

ReliabilityOutcome reliability_pipeline(const RatingsTable& table);

/// Splits experiments by mean IS-r against the low-reliability threshold
/// (strictly below is flagged).
std::pair<std::vector<std::string>, std::vector<std::string>> flag_low_reliability(
    const std::map<std::string, double>& mean_is_r_by_experiment, double threshold = 0.07);

}  // namespace semproj
