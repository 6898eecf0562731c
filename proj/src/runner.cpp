#include "semproj/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "semproj/error.hpp"
#include "semproj/rng.hpp"

namespace semproj {

namespace fs = std::filesystem;

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back((c == ' ' || c == '/' || c == ':') ? '-' : c);
  return out;
}

double percentile_iqr(std::vector<double> values) {
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return at(0.75) - at(0.25);
}

struct Histogram {
  double lo, hi;
  std::vector<std::size_t> counts;
};

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  Histogram h{lo, hi, std::vector<std::size_t>(static_cast<std::size_t>(bins), 0)};
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

// Parallel-for with a static round-robin split; each index is independent
// and lands in a preallocated slot, so the result is schedule-independent.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned t = std::max(1u, threads);
  if (t == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file: " + path.string());
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (vocab_limit == 0) throw InvalidInput("vocab_limit must be positive");
  if (n_perm == 0) throw InvalidInput("permutations must be positive");
  if (fdr_q <= 0.0 || fdr_q >= 1.0) throw InvalidInput("fdr_q must lie in (0, 1)");
  if (reliability_threshold < 0.0) throw InvalidInput("reliability threshold must be >= 0");
  if (max_outlier_removals < 0) throw InvalidInput("max outlier removals must be >= 0");
  if (norming_percentile <= 0.0 || norming_percentile >= 100.0)
    throw InvalidInput("norming percentile must lie in (0, 100)");
  if (exhaustive_limit == 0) throw InvalidInput("exhaustive limit must be positive");
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::map<std::string, RatingsTable> load_ratings_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("ratings directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, RatingsTable> tables;
  for (const auto& path : files) {
    RatingsTable table = load_ratings(path.string());
    const std::string id = table.experiment_id();
    if (!tables.emplace(id, std::move(table)).second)
      throw Error("duplicate ratings for experiment " + id + " (" + path.string() + ")");
  }
  return tables;
}

RunOutput run_all(const EmbeddingStore& store, const Dataset& dataset,
                  const std::map<std::string, RatingsTable>& ratings, const RunConfig& config,
                  const std::string& out_dir) {
  config.validate();
  if (dataset.pairs.empty()) throw InvalidInput("run: dataset has no experiment pairs");

  std::vector<ExperimentPair> pairs = dataset.pairs;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  struct Slot {
    bool ok = false;
    std::string failure;
    ExperimentEvaluation eval;
    std::vector<ControlRow> controls;
    std::vector<SweepRow> sweep;
  };
  std::vector<Slot> slots(pairs.size());

  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    const auto& [category, feature] = pairs[i];
    const std::string id = category + ":" + feature;
    Slot& slot = slots[i];
    try {
      auto rit = ratings.find(id);
      if (rit == ratings.end()) throw Error("no ratings file for experiment " + id);

      EvalConfig ec;
      ec.n_perm = config.n_perm;
      ec.seed = mix_seed(config.seed, hash_string(id));
      ec.exhaustive_limit = config.exhaustive_limit;

      const auto& items = dataset.category_items(category);
      const auto& poles = dataset.feature_poles(feature);
      slot.eval = evaluate_experiment(store, category, items, poles, rit->second, ec);

      if (config.run_controls) {
        const FeatureSubspace subspace = build_subspace(store, poles);
        std::map<std::string, double> human_by_item;
        for (std::size_t k = 0; k < slot.eval.items.size(); ++k)
          human_by_item[normalize_item(slot.eval.items[k])] = slot.eval.human_mean_z[k];

        const auto add_control = [&](const ProjectionResult& proj, const std::string& method) {
          std::vector<double> model, human;
          for (std::size_t k = 0; k < proj.items.size(); ++k) {
            auto hit = human_by_item.find(normalize_item(proj.items[k]));
            if (hit == human_by_item.end()) continue;
            model.push_back(proj.raw[k]);
            human.push_back(hit->second);
          }
          ControlRow row{category, feature, method, 0.0, 0.0};
          const auto model_z = zscore(model);
          row.r = pearson_r(model_z, human);
          row.oc_p = pairwise_oc(model_z, human);
          slot.controls.push_back(row);
        };

        add_control(slot.eval.projection, "subspace");
        add_control(project_single_end(store, items, subspace, true), "single_end_strong");
        add_control(project_single_end(store, items, subspace, false), "single_end_weak");
        add_control(distance_control(store, items, poles.strong_words, DistanceMetric::Cosine),
                    "cosine_dist_strong");
        add_control(distance_control(store, items, poles.weak_words, DistanceMetric::Cosine),
                    "cosine_dist_weak");
        add_control(distance_control(store, items, poles.strong_words, DistanceMetric::Euclidean),
                    "euclidean_dist_strong");
        add_control(distance_control(store, items, poles.weak_words, DistanceMetric::Euclidean),
                    "euclidean_dist_weak");
      }

      if (config.run_sweeps) {
        const int max_remove = std::min(config.max_outlier_removals,
                                        static_cast<int>(slot.eval.items.size()) - 3);
        if (max_remove > 0) slot.sweep = outlier_sweep(slot.eval, max_remove);
      }
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.failure = id + ": " + e.what();
    }
  });

  RunOutput out;
  std::vector<std::size_t> ok_indices;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].ok) {
      ok_indices.push_back(i);
    } else if (config.keep_going) {
      out.failures.push_back(slots[i].failure);
    } else {
      throw Error(slots[i].failure);
    }
  }
  if (ok_indices.empty()) throw Error("run: every experiment failed");

  for (std::size_t i : ok_indices) {
    out.reports.push_back(slots[i].eval.report);
    for (const auto& row : slots[i].controls) out.controls.push_back(row);
    if (!slots[i].sweep.empty())
      out.sweeps.emplace(slots[i].eval.report.experiment_id(), slots[i].sweep);
  }

  // Low-reliability flagging, then FDR on the kept experiments per measure.
  std::map<std::string, double> is_r_by_id;
  for (const auto& rep : out.reports) is_r_by_id[rep.experiment_id()] = rep.mean_is_r;
  auto [kept, flagged] = flag_low_reliability(is_r_by_id, config.reliability_threshold);
  out.kept = kept;
  out.flagged = flagged;
  const std::set<std::string> kept_set(kept.begin(), kept.end());

  std::vector<std::size_t> kept_report_idx;
  std::vector<double> p_r, p_ocp;
  for (std::size_t i = 0; i < out.reports.size(); ++i) {
    if (!kept_set.count(out.reports[i].experiment_id())) continue;
    kept_report_idx.push_back(i);
    p_r.push_back(out.reports[i].p_r);
    p_ocp.push_back(out.reports[i].p_ocp);
  }
  if (kept_report_idx.empty()) throw Error("run: every experiment was flagged as low reliability");

  const auto fdr_r = fdr_by(p_r, config.fdr_q);
  const auto fdr_oc = fdr_by(p_ocp, config.fdr_q);
  for (std::size_t k = 0; k < kept_report_idx.size(); ++k) {
    auto& rep = out.reports[kept_report_idx[k]];
    rep.fdr_p_r = fdr_r.adjusted[k];
    rep.fdr_p_ocp = fdr_oc.adjusted[k];
    rep.significant = fdr_r.reject[k] && fdr_oc.reject[k];
    if (rep.significant) ++out.n_significant;
  }

  // Summary statistics over the kept experiments.
  std::vector<double> rs, ocs, adj_rs, adj_ocs, is_rs, is_ocs;
  for (std::size_t i : kept_report_idx) {
    const auto& rep = out.reports[i];
    rs.push_back(rep.r);
    ocs.push_back(rep.oc_p);
    adj_rs.push_back(rep.adjusted_r);
    adj_ocs.push_back(rep.adjusted_ocp);
    is_rs.push_back(rep.mean_is_r);
    is_ocs.push_back(rep.is_ocp);
  }
  out.median_r = median(rs);
  out.iqr_r = percentile_iqr(rs);
  out.median_ocp = median(ocs);
  out.iqr_ocp = percentile_iqr(ocs);
  out.median_adjusted_r = median(adj_rs);
  out.median_adjusted_ocp = median(adj_ocs);
  out.median_is_r = median(is_rs);
  out.median_is_ocp = median(is_ocs);

  // Scheme comparisons against the full subspace projection (kept set only).
  if (config.run_controls) {
    std::map<std::string, std::map<std::string, double>> r_by_method, oc_by_method;
    for (const auto& row : out.controls) {
      const std::string id = row.category + ":" + row.feature;
      if (!kept_set.count(id)) continue;
      r_by_method[row.method][id] = row.r;
      oc_by_method[row.method][id] = row.oc_p;
    }
    const auto& base_r = r_by_method["subspace"];
    const auto& base_oc = oc_by_method["subspace"];
    for (const auto& [method, values] : r_by_method) {
      if (method == "subspace" || base_r.size() < 2) continue;
      SchemeComparisonRow row;
      row.measure = "r";
      row.scheme = method;
      row.comparison = compare_schemes(base_r, values, config.n_perm,
                                       mix_seed(config.seed, hash_string("cmp:r:" + method)),
                                       config.exhaustive_limit);
      out.scheme_comparisons.push_back(row);
      SchemeComparisonRow oc_row;
      oc_row.measure = "oc_p";
      oc_row.scheme = method;
      oc_row.comparison = compare_schemes(base_oc, oc_by_method[method], config.n_perm,
                                          mix_seed(config.seed, hash_string("cmp:oc:" + method)),
                                          config.exhaustive_limit);
      out.scheme_comparisons.push_back(oc_row);
    }
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path base(out_dir);

    {
      auto f = open_out(base / "experiments.csv");
      f << "category,feature,n_items,n_participants,r,p_r,oc_p,p_ocp,mean_is_r,is_ocp,"
           "adjusted_r,adjusted_ocp,fdr_p_r,fdr_p_ocp,significant,low_reliability,"
           "excluded_participants,dropped_items,unresolved_items\n";
      for (const auto& rep : out.reports) {
        f << sanitize(rep.category) << ',' << sanitize(rep.feature) << ',' << rep.n_items << ','
          << rep.n_participants_retained << ',' << format_value(rep.r) << ','
          << format_value(rep.p_r) << ',' << format_value(rep.oc_p) << ','
          << format_value(rep.p_ocp) << ',' << format_value(rep.mean_is_r) << ','
          << format_value(rep.is_ocp) << ','
          << (rep.adjusted_r_negative ? "-" : "") << format_value(rep.adjusted_r) << ','
          << format_value(rep.adjusted_ocp) << ',' << format_value(rep.fdr_p_r) << ','
          << format_value(rep.fdr_p_ocp) << ',' << (rep.significant ? 1 : 0) << ','
          << (kept_set.count(rep.experiment_id()) ? 0 : 1) << ','
          << rep.excluded_participants.size() << ',' << rep.dropped_items.size() << ','
          << rep.unresolved_items.size() << '\n';
      }
    }

    {
      auto f = open_out(base / "summary.csv");
      f << "metric,value\n";
      f << "n_experiments," << out.reports.size() << '\n';
      f << "n_kept," << kept_report_idx.size() << '\n';
      f << "n_flagged_low_reliability," << out.flagged.size() << '\n';
      f << "n_failed," << out.failures.size() << '\n';
      f << "n_significant," << out.n_significant << '\n';
      f << "median_r," << format_value(out.median_r) << '\n';
      f << "iqr_r," << format_value(out.iqr_r) << '\n';
      f << "median_oc_p," << format_value(out.median_ocp) << '\n';
      f << "iqr_oc_p," << format_value(out.iqr_ocp) << '\n';
      f << "median_adjusted_r," << format_value(out.median_adjusted_r) << '\n';
      f << "median_adjusted_oc_p," << format_value(out.median_adjusted_ocp) << '\n';
      f << "median_is_r," << format_value(out.median_is_r) << '\n';
      f << "median_is_oc_p," << format_value(out.median_is_ocp) << '\n';
      f << "seed," << config.seed << '\n';
      f << "permutations," << config.n_perm << '\n';
      f << "fdr_q," << format_value(config.fdr_q) << '\n';
    }

    {
      auto f = open_out(base / "flagged.txt");
      for (const auto& id : out.flagged) f << id << '\n';
      for (const auto& msg : out.failures) f << "FAILED " << msg << '\n';
    }

    {
      auto f = open_out(base / "histograms.csv");
      f << "measure,bin_lo,bin_hi,count\n";
      const auto emit = [&](const std::string& name, const std::vector<double>& values,
                            double lo, double hi) {
        const auto h = histogram(values, lo, hi, 20);
        const double width = (hi - lo) / 20.0;
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
          f << name << ',' << format_value(lo + width * static_cast<double>(b)) << ','
            << format_value(lo + width * static_cast<double>(b + 1)) << ',' << h.counts[b]
            << '\n';
        }
      };
      emit("r", rs, -1.0, 1.0);
      emit("adjusted_r", adj_rs, 0.0, 1.0);
      emit("oc_p", ocs, 0.0, 1.0);
      emit("adjusted_oc_p", adj_ocs, 0.0, 1.0);
    }

    {
      fs::create_directories(base / "scatter");
      for (std::size_t i : ok_indices) {
        const auto& eval = slots[i].eval;
        const std::string stem =
            sanitize(eval.report.category) + "__" + sanitize(eval.report.feature);
        auto f = open_out(base / "scatter" / (stem + ".csv"));
        f << "item,model_z,human_mean_z\n";
        for (std::size_t k = 0; k < eval.items.size(); ++k) {
          f << sanitize(eval.items[k]) << ',' << format_value(eval.model_z[k]) << ','
            << format_value(eval.human_mean_z[k]) << '\n';
        }
        if (config.emit_svg) {
          write_scatter_svg((base / "scatter" / (stem + ".svg")).string(),
                            eval.report.experiment_id(), eval.items, eval.model_z,
                            eval.human_mean_z);
        }
      }
    }

    if (config.run_sweeps) {
      auto f = open_out(base / "sweep.csv");
      f << "category,feature,k,removed_item,n_items,r,oc_p,mean_is_r,is_ocp\n";
      for (const auto& [id, rows] : out.sweeps) {
        const auto colon = id.find(':');
        for (const auto& row : rows) {
          f << sanitize(id.substr(0, colon)) << ',' << sanitize(id.substr(colon + 1)) << ','
            << row.k << ',' << sanitize(row.removed_item) << ',' << row.n_items << ','
            << format_value(row.r) << ',' << format_value(row.oc_p) << ','
            << format_value(row.mean_is_r) << ',' << format_value(row.is_ocp) << '\n';
        }
      }
    }

    if (config.run_controls) {
      {
        auto f = open_out(base / "controls.csv");
        f << "category,feature,method,r,oc_p\n";
        for (const auto& row : out.controls) {
          f << sanitize(row.category) << ',' << sanitize(row.feature) << ',' << row.method << ','
            << format_value(row.r) << ',' << format_value(row.oc_p) << '\n';
        }
      }
      {
        auto f = open_out(base / "controls_comparison.csv");
        f << "measure,scheme,median_subspace,median_scheme,mean_diff,cohen_d,p,n,exhaustive\n";
        for (const auto& row : out.scheme_comparisons) {
          f << row.measure << ',' << row.scheme << ','
            << format_value(row.comparison.median_a) << ','
            << format_value(row.comparison.median_b) << ','
            << format_value(row.comparison.mean_diff) << ','
            << format_value(row.comparison.cohen_d) << ',' << format_value(row.comparison.p)
            << ',' << row.comparison.n << ',' << (row.comparison.exhaustive ? 1 : 0) << '\n';
        }
      }
    }
  }

  return out;
}

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::vector<std::string>& items, const std::vector<double>& model_z,
                       const std::vector<double>& human_z) {
  const double w = 480.0, h = 480.0, margin = 48.0;
  double lo = -1.0, hi = 1.0;
  for (double v : model_z) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : human_z) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  const auto sx = [&](double v) { return margin + (v - lo) / span * (w - 2 * margin); };
  const auto sy = [&](double v) { return h - margin - (v - lo) / span * (h - 2 * margin); };

  auto f = open_out(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">"
    << title << "</text>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
    << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
    << h - margin << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">model z</text>\n";
  f << "<text x=\"14\" y=\"" << h / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
       "14 "
    << h / 2 << ")\">human mean z</text>\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    f << "<circle cx=\"" << format_value(sx(model_z[i])) << "\" cy=\""
      << format_value(sy(human_z[i])) << "\" r=\"3\" fill=\"steelblue\"><title>" << items[i]
      << "</title></circle>\n";
  }
  f << "</svg>\n";
}

}  // namespace semproj
