#include "semproj/eval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "semproj/error.hpp"
#include "semproj/rng.hpp"

namespace semproj {

namespace {

double factorial_capped(std::size_t n, std::size_t cap) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) {
    f *= static_cast<double>(i);
    if (f > static_cast<double>(cap)) return f;
  }
  return f;
}

double gaussian_upper_tail(double observed, double mu, double sigma) {
  if (sigma <= 0.0) return observed > mu ? 0.0 : 1.0;
  const double z = (observed - mu) / sigma;
  return std::clamp(0.5 * std::erfc(z / std::numbers::sqrt2), 0.0, 1.0);
}

template <typename Fn>
void for_each_permutation_sample(const std::vector<double>& model, bool exhaustive,
                                 std::size_t n_perm, std::uint64_t seed, Fn&& fn) {
  const std::size_t n = model.size();
  if (exhaustive) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> permuted(n);
    do {
      for (std::size_t i = 0; i < n; ++i) permuted[i] = model[idx[i]];
      fn(permuted);
    } while (std::next_permutation(idx.begin(), idx.end()));
  } else {
    std::vector<std::size_t> idx(n);
    std::vector<double> permuted(n);
    for (std::size_t iter = 0; iter < n_perm; ++iter) {
      auto rng = make_rng(seed, iter);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(idx[i], idx[j]);
      }
      for (std::size_t i = 0; i < n; ++i) permuted[i] = model[idx[i]];
      fn(permuted);
    }
  }
}

}  // namespace

std::string to_string(Measure measure) {
  return measure == Measure::PearsonR ? "r" : "oc_p";
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("pearson_r: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw InvalidInput("pearson_r: at least 3 points required");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidInput("pearson_r: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

double pairwise_oc(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidInput("pairwise_oc: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("pairwise_oc: at least 2 points required");
  // Doubled integer credit keeps the tie arithmetic exact.
  std::uint64_t credit2 = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 || dy == 0.0)
        credit2 += 1;
      else if ((dx > 0.0) == (dy > 0.0))
        credit2 += 2;
    }
  }
  return static_cast<double>(credit2) / (2.0 * static_cast<double>(pairs));
}

PermutationOutcome permutation_test(const std::vector<double>& model,
                                    const std::vector<double>& human, Measure measure,
                                    std::size_t n_perm, std::uint64_t seed,
                                    std::size_t exhaustive_limit) {
  if (n_perm < 1) throw InvalidInput("permutation_test: n_perm must be >= 1");
  if (model.size() != human.size()) throw InvalidInput("permutation_test: length mismatch");
  const auto score = [&](const std::vector<double>& m) {
    return measure == Measure::PearsonR ? pearson_r(m, human) : pairwise_oc(m, human);
  };

  PermutationOutcome out;
  out.observed = score(model);
  out.null.kind = measure;
  out.null.seed = seed;
  out.null.exhaustive =
      factorial_capped(model.size(), exhaustive_limit) <= static_cast<double>(exhaustive_limit);
  const std::size_t total =
      out.null.exhaustive ? static_cast<std::size_t>(factorial_capped(model.size(), exhaustive_limit))
                          : n_perm;
  out.null.n_permutations = total;
  out.null.samples.reserve(total);

  std::size_t exceed = 0;
  double sum = 0.0;
  for_each_permutation_sample(model, out.null.exhaustive, n_perm, seed,
                              [&](const std::vector<double>& permuted) {
                                const double v = score(permuted);
                                out.null.samples.push_back(v);
                                sum += v;
                                if (v >= out.observed) ++exceed;
                              });

  out.null.mu = sum / static_cast<double>(total);
  double ss = 0.0;
  for (double v : out.null.samples) ss += (v - out.null.mu) * (v - out.null.mu);
  out.null.sigma = total > 1 ? std::sqrt(ss / static_cast<double>(total - 1)) : 0.0;

  if (measure == Measure::PearsonR) {
    out.p = gaussian_upper_tail(out.observed, out.null.mu, out.null.sigma);
  } else {
    out.p = static_cast<double>(exceed) / static_cast<double>(total);
  }
  return out;
}

FdrResult fdr_by(const std::vector<double>& pvals, double q) {
  if (q <= 0.0 || q >= 1.0) throw InvalidInput("fdr_by: q must lie in (0, 1)");
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("fdr_by: p-value outside [0, 1]");
  }
  const std::size_t m = pvals.size();
  FdrResult result;
  result.adjusted.assign(m, 1.0);
  result.reject.assign(m, false);
  if (m == 0) return result;

  double c = 0.0;
  for (std::size_t i = 1; i <= m; ++i) c += 1.0 / static_cast<double>(i);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

  // Largest rank whose p-value clears its BY threshold; everything up to it
  // is rejected.
  std::size_t k = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double threshold = static_cast<double>(i) * q / (static_cast<double>(m) * c);
    if (pvals[order[i - 1]] <= threshold) k = i;
  }
  for (std::size_t i = 0; i < k; ++i) result.reject[order[i]] = true;

  // Monotone step-up adjustment, capped at 1.
  double running = 1.0;
  for (std::size_t i = m; i >= 1; --i) {
    const double adj =
        pvals[order[i - 1]] * static_cast<double>(m) * c / static_cast<double>(i);
    running = std::min(running, std::min(adj, 1.0));
    result.adjusted[order[i - 1]] = running;
    if (i == 1) break;
  }
  return result;
}

double adjust_upper_bound(double value, double reliability, Measure kind) {
  if (reliability <= 0.0) throw InvalidInput("adjust_upper_bound: reliability must be positive");
  double adjusted = 0.0;
  if (kind == Measure::PearsonR) {
    adjusted = std::sqrt((value * value) / (reliability * reliability));
  } else {
    adjusted = value / reliability;
  }
  return std::clamp(adjusted, 0.0, 1.0);
}

SchemeComparison compare_schemes(const std::map<std::string, double>& values_a,
                                 const std::map<std::string, double>& values_b,
                                 std::size_t n_perm, std::uint64_t seed,
                                 std::size_t exhaustive_limit) {
  if (values_a.size() != values_b.size())
    throw InvalidInput("compare_schemes: experiment key sets differ in size");
  if (values_a.size() < 2) throw InvalidInput("compare_schemes: at least 2 experiments required");

  std::vector<double> a, b, d;
  for (const auto& [key, va] : values_a) {
    auto it = values_b.find(key);
    if (it == values_b.end())
      throw InvalidInput("compare_schemes: experiment '" + key + "' missing from second scheme");
    a.push_back(va);
    b.push_back(it->second);
    d.push_back(va - it->second);
  }

  SchemeComparison cmp;
  cmp.n = d.size();
  cmp.median_a = median(a);
  cmp.median_b = median(b);
  cmp.mean_diff = mean(d);
  const double sd = sample_sd(d);
  if (sd == 0.0) {
    cmp.cohen_d = cmp.mean_diff == 0.0
                      ? 0.0
                      : std::copysign(std::numeric_limits<double>::infinity(), cmp.mean_diff);
  } else {
    cmp.cohen_d = cmp.mean_diff / sd;
  }

  const std::size_t n = d.size();
  cmp.exhaustive = n < 63 && (1ULL << n) <= exhaustive_limit;
  std::size_t exceed = 0;
  std::size_t total = 0;
  if (cmp.exhaustive) {
    total = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < total; ++mask) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += (mask >> i) & 1 ? -d[i] : d[i];
      if (sum / static_cast<double>(n) >= cmp.mean_diff) ++exceed;
    }
  } else {
    if (n_perm < 1) throw InvalidInput("compare_schemes: n_perm must be >= 1");
    total = n_perm;
    for (std::size_t iter = 0; iter < n_perm; ++iter) {
      auto rng = make_rng(seed, iter);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += (rng() & 1) ? -d[i] : d[i];
      if (sum / static_cast<double>(n) >= cmp.mean_diff) ++exceed;
    }
  }
  cmp.p = static_cast<double>(exceed) / static_cast<double>(total);
  return cmp;
}

namespace {

struct PairStats {
  double r = 0.0;
  double oc_p = 0.0;
  double mean_is_r = 0.0;
  double is_ocp = 0.0;
  int n_items = 0;
  std::vector<double> model_z;
  std::vector<double> human_mean_z;
  std::vector<std::string> items;
};

// Shared by the base evaluation and the outlier sweep so that the k = 0
// sweep row reproduces the base numbers bit-for-bit.
PairStats compute_pair_stats(const RatingsTable& retained,
                             const std::vector<std::string>& eval_items,
                             const std::unordered_map<std::string, double>& model_raw_by_item,
                             const std::set<std::string>& removed) {
  // Ratings columns: every table item not removed (including items outside
  // the model intersection; they still inform the reliability statistics).
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < retained.raw.cols(); ++c) {
    if (!removed.count(normalize_item(retained.items[static_cast<std::size_t>(c)])))
      cols.push_back(c);
  }
  RatingsTable sub;
  sub.category = retained.category;
  sub.feature = retained.feature;
  sub.participants = retained.participants;
  for (Eigen::Index c : cols) sub.items.push_back(retained.items[static_cast<std::size_t>(c)]);
  sub.raw.resize(retained.raw.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    sub.raw.col(static_cast<Eigen::Index>(k)) = retained.raw.col(cols[k]);

  RatingsTable scored = zscore_participants(sub);
  const auto reliability = inter_subject_r(scored);
  const double is_ocp = inter_subject_ocp(scored);
  const auto item_means = mean_item_ratings(scored);
  std::unordered_map<std::string, double> mean_by_item;
  for (std::size_t i = 0; i < scored.items.size(); ++i)
    mean_by_item[normalize_item(scored.items[i])] = item_means[i];

  PairStats stats;
  std::vector<double> model_raw;
  for (const auto& item : eval_items) {
    const std::string key = normalize_item(item);
    if (removed.count(key)) continue;
    stats.items.push_back(item);
    model_raw.push_back(model_raw_by_item.at(key));
    stats.human_mean_z.push_back(mean_by_item.at(key));
  }
  if (stats.items.size() < 3)
    throw InvalidInput("fewer than 3 items remain for evaluation");

  stats.model_z = zscore(model_raw);
  stats.r = pearson_r(stats.model_z, stats.human_mean_z);
  stats.oc_p = pairwise_oc(stats.model_z, stats.human_mean_z);
  stats.mean_is_r = reliability.mean_is_r;
  stats.is_ocp = is_ocp;
  stats.n_items = static_cast<int>(stats.items.size());
  return stats;
}

}  // namespace

ExperimentEvaluation evaluate_experiment(const EmbeddingStore& store,
                                         const std::string& category,
                                         const std::vector<std::string>& items,
                                         const FeaturePoles& poles,
                                         const RatingsTable& ratings,
                                         const EvalConfig& config) {
  ExperimentEvaluation eval;
  try {
    const FeatureSubspace subspace = build_subspace(store, poles);
    eval.projection = project(store, items, subspace);
    eval.projection.category = category;

    eval.reliability = reliability_pipeline(ratings);

    // Intersect model-resolvable items with rated items.
    std::unordered_map<std::string, double> model_raw_by_item;
    for (std::size_t i = 0; i < eval.projection.items.size(); ++i)
      model_raw_by_item[normalize_item(eval.projection.items[i])] = eval.projection.raw[i];
    std::unordered_set<std::string> rated;
    for (const auto& item : eval.reliability.table.items) rated.insert(normalize_item(item));

    std::vector<std::string> common;
    for (const auto& item : eval.projection.items) {
      if (rated.count(normalize_item(item)))
        common.push_back(item);
      else
        eval.report.dropped_items.push_back(item + " (not rated)");
    }
    std::unordered_set<std::string> in_model;
    for (const auto& item : eval.projection.items) in_model.insert(normalize_item(item));
    for (const auto& item : eval.reliability.table.items) {
      if (!in_model.count(normalize_item(item)))
        eval.report.dropped_items.push_back(item + " (not in embedding)");
    }

    const auto stats = compute_pair_stats(eval.reliability.table, common, model_raw_by_item, {});
    eval.items = stats.items;
    eval.model_z = stats.model_z;
    eval.human_mean_z = stats.human_mean_z;

    auto& rep = eval.report;
    rep.category = category;
    rep.feature = poles.name;
    rep.n_items = stats.n_items;
    rep.r = stats.r;
    rep.oc_p = stats.oc_p;
    rep.mean_is_r = stats.mean_is_r;
    rep.is_ocp = stats.is_ocp;
    rep.unresolved_items = eval.projection.unresolved;
    rep.excluded_participants = eval.reliability.report.excluded;
    rep.n_participants_retained = eval.reliability.report.n_participants_retained;

    const auto perm_r = permutation_test(eval.model_z, eval.human_mean_z, Measure::PearsonR,
                                         config.n_perm, config.seed, config.exhaustive_limit);
    const auto perm_oc = permutation_test(eval.model_z, eval.human_mean_z,
                                          Measure::OrderConsistency, config.n_perm,
                                          mix_seed(config.seed, 1), config.exhaustive_limit);
    rep.p_r = perm_r.p;
    rep.p_ocp = perm_oc.p;

    if (rep.mean_is_r > 0.0) {
      rep.adjusted_r = adjust_upper_bound(rep.r, rep.mean_is_r, Measure::PearsonR);
      rep.adjusted_r_negative = rep.r < 0.0;
    }
    if (rep.is_ocp > 0.0)
      rep.adjusted_ocp = adjust_upper_bound(rep.oc_p, rep.is_ocp, Measure::OrderConsistency);
  } catch (const Error& e) {
    throw Error("experiment " + category + ":" + poles.name + ": " + e.what());
  }
  return eval;
}

std::vector<SweepRow> outlier_sweep(const ExperimentEvaluation& eval, int max_remove) {
  if (max_remove < 0) throw InvalidInput("outlier_sweep: max_remove must be >= 0");
  if (static_cast<int>(eval.items.size()) - max_remove < 3)
    throw InvalidInput("outlier_sweep: fewer than 3 items would remain at max removal");

  // Extremeness is ranked once on the full set.
  const auto extremeness = zscore(eval.human_mean_z);
  std::vector<std::size_t> order(eval.items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ea = std::fabs(extremeness[a]);
    const double eb = std::fabs(extremeness[b]);
    if (ea != eb) return ea > eb;
    return eval.items[a] < eval.items[b];
  });

  std::unordered_map<std::string, double> model_raw_by_item;
  for (std::size_t i = 0; i < eval.projection.items.size(); ++i)
    model_raw_by_item[normalize_item(eval.projection.items[i])] = eval.projection.raw[i];

  std::vector<SweepRow> curve;
  std::set<std::string> removed;
  for (int k = 0; k <= max_remove; ++k) {
    SweepRow row;
    row.k = k;
    if (k > 0) {
      const auto& item = eval.items[order[static_cast<std::size_t>(k - 1)]];
      removed.insert(normalize_item(item));
      row.removed_item = item;
    }
    const auto stats =
        compute_pair_stats(eval.reliability.table, eval.items, model_raw_by_item, removed);
    row.n_items = stats.n_items;
    row.r = stats.r;
    row.oc_p = stats.oc_p;
    row.mean_is_r = stats.mean_is_r;
    row.is_ocp = stats.is_ocp;
    curve.push_back(row);
  }
  return curve;
}

}  // namespace semproj
