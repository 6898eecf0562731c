#include "semproj/projection.hpp"

#include <algorithm>
#include <cmath>

#include "semproj/error.hpp"

namespace semproj {

namespace {

struct ResolvedSet {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> vecs;
  std::vector<EmbeddingStore::Resolution> provenance;
  std::vector<std::string> unresolved;
};

ResolvedSet resolve_items(const EmbeddingStore& store, const std::vector<std::string>& items) {
  ResolvedSet out;
  for (const auto& item : items) {
    try {
      auto r = store.resolve_item(item);
      out.names.push_back(item);
      out.vecs.push_back(r.vec.cast<double>());
      out.provenance.push_back(r.resolution);
    } catch (const UnresolvableItem&) {
      out.unresolved.push_back(item);
    } catch (const NotInVocabulary&) {
      out.unresolved.push_back(item);
    }
  }
  return out;
}

ProjectionResult finish(ResolvedSet resolved, std::vector<double> raw, ScoreMethod method) {
  if (resolved.names.size() < 2)
    throw InvalidInput("fewer than 2 resolvable items");
  ProjectionResult result;
  result.method = method;
  result.items = std::move(resolved.names);
  result.provenance = std::move(resolved.provenance);
  result.unresolved = std::move(resolved.unresolved);
  result.z = zscore(raw);
  result.raw = std::move(raw);
  return result;
}

}  // namespace

std::string to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::Subspace: return "subspace";
    case ScoreMethod::SingleEndStrong: return "single_end_strong";
    case ScoreMethod::SingleEndWeak: return "single_end_weak";
    case ScoreMethod::CosineDist: return "cosine_dist";
    case ScoreMethod::EuclideanDist: return "euclidean_dist";
  }
  return "unknown";
}

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> zscore(const std::vector<double>& values) {
  if (values.size() < 2) throw InvalidInput("zscore requires at least 2 values");
  const double m = mean(values);
  const double sd = sample_sd(values);
  if (sd == 0.0) throw InvalidInput("zscore of constant values");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m) / sd;
  return out;
}

ProjectionResult project(const EmbeddingStore& store, const std::vector<std::string>& items,
                         const FeatureSubspace& subspace) {
  auto resolved = resolve_items(store, items);
  const Eigen::VectorXd dir = subspace.direction.cast<double>();
  std::vector<double> raw;
  raw.reserve(resolved.vecs.size());
  for (const auto& v : resolved.vecs) raw.push_back(v.dot(dir));
  auto result = finish(std::move(resolved), std::move(raw), ScoreMethod::Subspace);
  result.feature = subspace.name;
  return result;
}

ProjectionResult project_single_end(const EmbeddingStore& store,
                                    const std::vector<std::string>& items,
                                    const FeatureSubspace& subspace, bool strong_end) {
  auto resolved = resolve_items(store, items);
  const Eigen::VectorXd dir =
      (strong_end ? subspace.strong_centroid : subspace.weak_centroid).cast<double>();
  std::vector<double> raw;
  raw.reserve(resolved.vecs.size());
  for (const auto& v : resolved.vecs) raw.push_back(v.dot(dir));
  auto result = finish(std::move(resolved), std::move(raw),
                       strong_end ? ScoreMethod::SingleEndStrong : ScoreMethod::SingleEndWeak);
  result.feature = subspace.name;
  return result;
}

ProjectionResult distance_control(const EmbeddingStore& store,
                                  const std::vector<std::string>& items,
                                  const std::vector<std::string>& pole_words,
                                  DistanceMetric metric) {
  const Eigen::VectorXd centroid = single_end_direction(store, pole_words).cast<double>();
  auto resolved = resolve_items(store, items);
  std::vector<double> raw;
  raw.reserve(resolved.vecs.size());
  for (const auto& v : resolved.vecs) {
    if (metric == DistanceMetric::Euclidean) {
      raw.push_back((v - centroid).norm());
    } else {
      const double nv = v.norm(), nc = centroid.norm();
      if (nv == 0.0 || nc == 0.0)
        throw InvalidInput("cosine distance with zero-norm vector");
      raw.push_back(1.0 - v.dot(centroid) / (nv * nc));
    }
  }
  return finish(std::move(resolved), std::move(raw),
                metric == DistanceMetric::Cosine ? ScoreMethod::CosineDist
                                                 : ScoreMethod::EuclideanDist);
}

PcaViz pca_viz(const EmbeddingStore& store, const std::vector<std::string>& items,
               const FeatureSubspace& subspace, int k) {
  if (k != 2 && k != 3) throw InvalidInput("pca_viz supports k = 2 or 3");
  auto resolved = resolve_items(store, items);
  const int n_items = static_cast<int>(resolved.vecs.size());
  if (n_items < k + 1) throw InvalidInput("pca_viz needs at least k+1 resolvable items");
  const Eigen::Index dim = store.dim();
  if (dim < k) throw InvalidInput("pca_viz: input dimensionality below k");

  // Fit includes the two pole centroids so the scale segment lives in the
  // same reduced coordinates as the items.
  const int n = n_items + 2;
  Eigen::MatrixXd points(n, dim);
  for (int i = 0; i < n_items; ++i) points.row(i) = resolved.vecs[i].transpose();
  points.row(n_items) = subspace.strong_centroid.cast<double>().transpose();
  points.row(n_items + 1) = subspace.weak_centroid.cast<double>().transpose();

  const Eigen::RowVectorXd center = points.colwise().mean();
  points.rowwise() -= center;

  Eigen::MatrixXd cov = points.transpose() * points / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca_viz: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top k.
  Eigen::MatrixXd components(dim, k);
  Eigen::VectorXd explained(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = dim - 1 - c;
    Eigen::VectorXd comp = solver.eigenvectors().col(src);
    Eigen::Index max_idx = 0;
    comp.cwiseAbs().maxCoeff(&max_idx);
    if (comp(max_idx) < 0.0) comp = -comp;
    components.col(c) = comp;
    explained(c) = std::max(solver.eigenvalues()(src), 0.0);
  }

  PcaViz viz;
  viz.items = std::move(resolved.names);
  Eigen::MatrixXd coords = points * components;
  viz.coords = coords.topRows(n_items);
  viz.strong_end = coords.row(n_items);
  viz.weak_end = coords.row(n_items + 1);
  viz.explained = explained;
  viz.total_variance = solver.eigenvalues().cwiseMax(0.0).sum();
  return viz;
}

}  // namespace semproj
