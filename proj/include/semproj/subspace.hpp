#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "semproj/embed_store.hpp"

namespace semproj {

/// Antonym pole word sets defining one semantic feature scale.
struct FeaturePoles {
  std::string name;
  std::vector<std::string> strong_words;  // the "more of the feature" end
  std::vector<std::string> weak_words;

  void validate() const;  // non-empty, disjoint after lowercasing
};

/// One-dimensional feature scale: the mean of all pairwise strong-minus-weak
/// vector differences. Larger projection = more of the feature.
struct FeatureSubspace {
  std::string name;
  Eigen::VectorXf direction;
  Eigen::VectorXf strong_centroid;
  Eigen::VectorXf weak_centroid;
  int line_count = 0;
  std::vector<std::string> resolved_strong;
  std::vector<std::string> resolved_weak;
};

FeatureSubspace build_subspace(const EmbeddingStore& store, const FeaturePoles& poles);

/// Centroid of the given pole words, used as a single-end control direction.
Eigen::VectorXf single_end_direction(const EmbeddingStore& store,
                                     const std::vector<std::string>& words);

struct FeatureAlignment {
  std::string name;
  double within = 0.0;          // mean leave-one-out cosine among this feature's lines
  double within_angle_deg = 0.0;
};

struct AlignmentReport {
  std::vector<FeatureAlignment> per_feature;
  double within_mean = 0.0;        // per-feature averages, then averaged
  double within_pooled = 0.0;      // all lines pooled directly
  double cross_mean = 0.0;         // per ordered feature pair, then averaged
  double cross_pooled = 0.0;
  double within_angle_deg = 0.0;
  double cross_angle_deg = 0.0;
  std::vector<std::string> skipped;  // features with < 2 lines
};

AlignmentReport alignment_diagnostics(const EmbeddingStore& store,
                                      const std::vector<FeaturePoles>& features);

}  // namespace semproj
