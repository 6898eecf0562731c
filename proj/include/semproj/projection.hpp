#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "semproj/embed_store.hpp"
#include "semproj/subspace.hpp"

namespace semproj {

enum class ScoreMethod { Subspace, SingleEndStrong, SingleEndWeak, CosineDist, EuclideanDist };

std::string to_string(ScoreMethod method);

/// Per-item scores for one (category, feature) experiment.
struct ProjectionResult {
  std::string category;
  std::string feature;
  ScoreMethod method = ScoreMethod::Subspace;
  std::vector<std::string> items;             // resolvable items, input order
  std::vector<double> raw;                    // inner products (or distances)
  std::vector<double> z;                      // zscore(raw)
  std::vector<EmbeddingStore::Resolution> provenance;
  std::vector<std::string> unresolved;        // items dropped with a warning
};

/// Sample-SD z-scoring (n-1 denominator). Throws on n < 2 or zero variance.
std::vector<double> zscore(const std::vector<double>& values);

double mean(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values);
double median(std::vector<double> values);

ProjectionResult project(const EmbeddingStore& store, const std::vector<std::string>& items,
                         const FeatureSubspace& subspace);

/// Single-end control: inner product with the centroid of one pole set.
ProjectionResult project_single_end(const EmbeddingStore& store,
                                    const std::vector<std::string>& items,
                                    const FeatureSubspace& subspace, bool strong_end);

enum class DistanceMetric { Cosine, Euclidean };

ProjectionResult distance_control(const EmbeddingStore& store,
                                  const std::vector<std::string>& items,
                                  const std::vector<std::string>& pole_words,
                                  DistanceMetric metric);

/// Mean-centered PCA coordinates for items plus the two pole centroids.
/// Sign convention: each component's largest-magnitude loading is positive.
struct PcaViz {
  std::vector<std::string> items;
  Eigen::MatrixXd coords;          // items x k
  Eigen::RowVectorXd strong_end;   // pole centroids in reduced coordinates
  Eigen::RowVectorXd weak_end;
  Eigen::VectorXd explained;       // variance captured per component
  double total_variance = 0.0;
};

PcaViz pca_viz(const EmbeddingStore& store, const std::vector<std::string>& items,
               const FeatureSubspace& subspace, int k);

}  // namespace semproj
