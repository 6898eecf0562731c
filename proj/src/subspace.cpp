#include "semproj/subspace.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "semproj/error.hpp"

namespace semproj {

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine of zero-norm vector");
  return a.dot(b) / (na * nb);
}

double angle_deg(double cos_value) {
  const double c = std::clamp(cos_value, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

// All pairwise strong-minus-weak difference vectors ("lines"), in double
// precision for the alignment statistics.
std::vector<Eigen::VectorXd> feature_lines(const EmbeddingStore& store,
                                           const FeaturePoles& poles) {
  std::vector<Eigen::VectorXd> lines;
  for (const auto& s : poles.strong_words) {
    const Eigen::VectorXd vs = store.lookup(s).cast<double>();
    for (const auto& w : poles.weak_words) {
      lines.push_back(vs - store.lookup(w).cast<double>());
    }
  }
  return lines;
}

Eigen::VectorXd mean_of(const std::vector<Eigen::VectorXd>& vecs,
                        std::size_t skip = static_cast<std::size_t>(-1)) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(vecs.front().size());
  std::size_t n = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    if (i == skip) continue;
    sum += vecs[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

void FeaturePoles::validate() const {
  if (strong_words.empty() || weak_words.empty())
    throw InvalidInput("feature '" + name + "': both poles must be non-empty");
  std::set<std::string> strong;
  for (const auto& w : strong_words) strong.insert(to_lower(w));
  for (const auto& w : weak_words) {
    if (strong.count(to_lower(w)))
      throw InvalidInput("feature '" + name + "': word '" + w + "' appears in both poles");
  }
}

FeatureSubspace build_subspace(const EmbeddingStore& store, const FeaturePoles& poles) {
  poles.validate();

  std::vector<std::string> missing;
  for (const auto& w : poles.strong_words)
    if (!store.contains(w)) missing.push_back(w);
  for (const auto& w : poles.weak_words)
    if (!store.contains(w)) missing.push_back(w);
  if (!missing.empty()) {
    std::string msg = "feature '" + poles.name + "': pole words not in vocabulary:";
    for (const auto& w : missing) msg += " " + w;
    throw MissingPoleWord(msg);
  }

  FeatureSubspace sub;
  sub.name = poles.name;
  Eigen::VectorXf sum = Eigen::VectorXf::Zero(store.dim());
  for (const auto& s : poles.strong_words) {
    const Eigen::VectorXf vs = store.lookup(s);
    for (const auto& w : poles.weak_words) {
      sum += vs - store.lookup(w);
      ++sub.line_count;
    }
  }
  sub.direction = sum / static_cast<float>(sub.line_count);
  if (sub.direction.norm() == 0.0f)
    throw InvalidInput("feature '" + poles.name + "': zero-norm direction");

  sub.strong_centroid = single_end_direction(store, poles.strong_words);
  sub.weak_centroid = single_end_direction(store, poles.weak_words);
  for (const auto& w : poles.strong_words) sub.resolved_strong.push_back(to_lower(w));
  for (const auto& w : poles.weak_words) sub.resolved_weak.push_back(to_lower(w));
  return sub;
}

Eigen::VectorXf single_end_direction(const EmbeddingStore& store,
                                     const std::vector<std::string>& words) {
  if (words.empty()) throw InvalidInput("single_end_direction: empty word set");
  std::vector<std::string> missing;
  for (const auto& w : words)
    if (!store.contains(w)) missing.push_back(w);
  if (!missing.empty()) {
    std::string msg = "pole words not in vocabulary:";
    for (const auto& w : missing) msg += " " + w;
    throw MissingPoleWord(msg);
  }
  Eigen::VectorXf sum = Eigen::VectorXf::Zero(store.dim());
  for (const auto& w : words) sum += store.lookup(w);
  return sum / static_cast<float>(words.size());
}

AlignmentReport alignment_diagnostics(const EmbeddingStore& store,
                                      const std::vector<FeaturePoles>& features) {
  AlignmentReport report;
  std::vector<std::vector<Eigen::VectorXd>> all_lines;
  std::vector<std::string> names;

  for (const auto& poles : features) {
    auto lines = feature_lines(store, poles);
    if (lines.size() < 2) {
      report.skipped.push_back(poles.name);
      all_lines.push_back(std::move(lines));
      names.push_back(poles.name);
      continue;
    }
    FeatureAlignment fa;
    fa.name = poles.name;
    double sum = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i)
      sum += cosine(lines[i], mean_of(lines, i));
    fa.within = sum / static_cast<double>(lines.size());
    fa.within_angle_deg = angle_deg(fa.within);
    report.per_feature.push_back(fa);
    all_lines.push_back(std::move(lines));
    names.push_back(poles.name);
  }

  if (!report.per_feature.empty()) {
    double acc = 0.0, pooled = 0.0;
    std::size_t pooled_n = 0;
    for (std::size_t f = 0; f < all_lines.size(); ++f) {
      if (all_lines[f].size() < 2) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < all_lines[f].size(); ++i) {
        const double c = cosine(all_lines[f][i], mean_of(all_lines[f], i));
        sum += c;
        pooled += c;
        ++pooled_n;
      }
      acc += sum / static_cast<double>(all_lines[f].size());
    }
    report.within_mean = acc / static_cast<double>(report.per_feature.size());
    report.within_pooled = pooled / static_cast<double>(pooled_n);
    report.within_angle_deg = angle_deg(report.within_mean);
  }

  if (features.size() < 2)
    throw InvalidInput("alignment_diagnostics: at least two features required for cross score");

  double cross_acc = 0.0, cross_pooled = 0.0;
  std::size_t n_pairs = 0, pooled_n = 0;
  for (std::size_t a = 0; a < all_lines.size(); ++a) {
    if (all_lines[a].empty()) continue;
    for (std::size_t b = 0; b < all_lines.size(); ++b) {
      if (a == b || all_lines[b].empty()) continue;
      const Eigen::VectorXd mean_b = mean_of(all_lines[b]);
      double sum = 0.0;
      for (const auto& line : all_lines[a]) {
        const double c = cosine(line, mean_b);
        sum += c;
        cross_pooled += c;
        ++pooled_n;
      }
      cross_acc += sum / static_cast<double>(all_lines[a].size());
      ++n_pairs;
    }
  }
  if (n_pairs == 0)
    throw InvalidInput("alignment_diagnostics: no usable feature pairs");
  report.cross_mean = cross_acc / static_cast<double>(n_pairs);
  report.cross_pooled = cross_pooled / static_cast<double>(pooled_n);
  report.cross_angle_deg = angle_deg(report.cross_mean);
  return report;
}

}  // namespace semproj
