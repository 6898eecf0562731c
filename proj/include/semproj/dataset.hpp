#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "semproj/subspace.hpp"

namespace semproj {

using ExperimentPair = std::pair<std::string, std::string>;  // (category, feature)

/// Category items, feature pole definitions, and the experiment pair list.
struct Dataset {
  std::map<std::string, std::vector<std::string>> categories;
  std::map<std::string, FeaturePoles> features;
  std::vector<ExperimentPair> pairs;
  std::string provenance;

  const std::vector<std::string>& category_items(const std::string& name) const;
  const FeaturePoles& feature_poles(const std::string& name) const;
};

/// JSON schema: {"categories": {name: [items]},
///               "features": {name: {"strong": [words], "weak": [words]}},
///               "pairs": [{"category": ..., "feature": ...}],
///               "provenance": ..., "expected_counts": {name: n}}
/// expected_counts, when present, is asserted against the parsed categories.
Dataset load_dataset(const std::string& path);

Dataset parse_dataset_json(const std::string& text, const std::string& origin);

struct PairSelection {
  std::vector<ExperimentPair> pairs;
  double percentile_value = 0.0;  // nearest-rank percentile of all means
  double threshold = 0.0;         // smallest admitted mean
  std::map<ExperimentPair, std::string> route;  // normed / manual / normed+manual
};

/// Norming-based pair selection: pairs whose mean strictly exceeds the
/// nearest-rank percentile of all means, minus exclusions, unioned with the
/// manually pre-selected pairs. Exclusions never appear in the result.
PairSelection select_pairs(const std::map<ExperimentPair, double>& norming_means,
                           const std::vector<ExperimentPair>& manual_pairs,
                           const std::vector<ExperimentPair>& exclusions,
                           double percentile = 75.0);

/// CSV with header `category,feature,mean_rating`, means on the 1-5 scale.
std::map<ExperimentPair, double> load_norming(const std::string& path);

/// CSV with header `category,feature`.
std::vector<ExperimentPair> load_pair_list(const std::string& path);

}  // namespace semproj
