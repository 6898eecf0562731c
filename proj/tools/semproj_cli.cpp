#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "semproj/dataset.hpp"
#include "semproj/embed_store.hpp"
#include "semproj/error.hpp"
#include "semproj/eval_stats.hpp"
#include "semproj/projection.hpp"
#include "semproj/ratings.hpp"
#include "semproj/rng.hpp"
#include "semproj/runner.hpp"
#include "semproj/subspace.hpp"

namespace fs = std::filesystem;
using namespace semproj;

namespace {

struct GlobalOptions {
  std::string embeddings;
  std::string dataset_path;
  std::string out_dir;
  std::size_t vocab_limit = 500000;
  std::size_t n_perm = 10000;
  std::uint64_t seed = 0;
  double fdr_q = 0.05;
  std::size_t exhaustive_limit = 40320;
  bool keep_going = false;
};

std::string default_dataset_path(const char* argv0) {
  // Prefer a dataset bundled next to the binary, then the source tree copy.
  const fs::path exe_dir = fs::path(argv0).parent_path();
  for (const auto& candidate :
       {exe_dir / "dataset.json", exe_dir / ".." / "data" / "dataset.json",
        fs::path("data/dataset.json")}) {
    std::error_code ec;
    if (fs::exists(candidate, ec)) return candidate.string();
  }
  return "data/dataset.json";
}

EmbeddingStore load_store(const GlobalOptions& opts) {
  if (opts.embeddings.empty())
    throw InvalidInput("--embeddings is required for this command");
  return EmbeddingStore::open(opts.embeddings, opts.vocab_limit);
}

std::ostream& out_or_file(std::ofstream& file, const std::string& out_dir,
                          const std::string& name) {
  if (out_dir.empty()) return std::cout;
  fs::create_directories(out_dir);
  file.open(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot open output file in " + out_dir);
  return file;
}

void print_projection(std::ostream& os, const ProjectionResult& result) {
  os << "item,raw,z,method,provenance\n";
  for (std::size_t i = 0; i < result.items.size(); ++i) {
    os << result.items[i] << ',' << format_value(result.raw[i]) << ','
       << format_value(result.z[i]) << ',' << to_string(result.method) << ','
       << (result.provenance[i] == EmbeddingStore::Resolution::Direct ? "direct"
                                                                      : "constituent_mean")
       << '\n';
  }
  for (const auto& item : result.unresolved)
    std::cerr << "warning: item not resolvable in embedding: " << item << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic projection of word embeddings onto antonym-defined feature scales"};
  app.require_subcommand(1);

  GlobalOptions opts;
  opts.dataset_path = default_dataset_path(argv[0]);
  app.add_option("--embeddings", opts.embeddings, "Embedding text file or binary cache");
  app.add_option("--dataset", opts.dataset_path, "Dataset JSON file");
  app.add_option("--vocab-limit", opts.vocab_limit, "Vocabulary cap for text parsing")
      ->capture_default_str();
  app.add_option("--permutations", opts.n_perm, "Permutation iterations")->capture_default_str();
  app.add_option("--seed", opts.seed, "Random seed")->capture_default_str();
  app.add_option("--fdr-q", opts.fdr_q, "FDR level")->capture_default_str();
  app.add_option("--exhaustive-limit", opts.exhaustive_limit,
                 "Enumerate all permutations when their count is at most this")
      ->capture_default_str();
  app.add_option("--out-dir", opts.out_dir, "Directory for report files (default: stdout)");
  app.add_flag("--keep-going", opts.keep_going, "Continue past per-experiment failures");

  // cache
  auto* cache_cmd = app.add_subcommand("cache", "Parse an embedding text file and write a binary cache");
  std::string cache_in, cache_out;
  cache_cmd->add_option("input", cache_in, "Embedding text file")->required();
  cache_cmd->add_option("output", cache_out, "Cache file to write")->required();

  // diag
  auto* diag_cmd = app.add_subcommand("diag", "Feature-subspace alignment diagnostics");

  // project
  auto* project_cmd = app.add_subcommand("project", "Project a category onto a feature scale");
  std::string p_category, p_feature;
  project_cmd->add_option("--category", p_category)->required();
  project_cmd->add_option("--feature", p_feature)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one experiment against human ratings");
  std::string e_category, e_feature, e_ratings;
  eval_cmd->add_option("--category", e_category)->required();
  eval_cmd->add_option("--feature", e_feature)->required();
  eval_cmd->add_option("--ratings", e_ratings, "Ratings CSV for this experiment")->required();

  // controls
  auto* controls_cmd =
      app.add_subcommand("controls", "Single-end and distance baselines with scheme comparison");
  std::string c_ratings_dir;
  controls_cmd->add_option("--ratings-dir", c_ratings_dir, "Directory of ratings CSVs")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Iterative extreme-item removal curves");
  std::string s_ratings_dir;
  int s_max_remove = 10;
  sweep_cmd->add_option("--ratings-dir", s_ratings_dir)->required();
  sweep_cmd->add_option("--max-remove", s_max_remove)->capture_default_str();

  // viz
  auto* viz_cmd = app.add_subcommand("viz", "PCA-reduced plot coordinates for one experiment");
  std::string v_category, v_feature;
  int v_k = 2;
  viz_cmd->add_option("--category", v_category)->required();
  viz_cmd->add_option("--feature", v_feature)->required();
  viz_cmd->add_option("--k", v_k, "2 or 3")->capture_default_str();

  // select-pairs
  auto* select_cmd = app.add_subcommand("select-pairs", "Norming-based pair selection");
  std::string sp_norming, sp_manual, sp_exclusions;
  double sp_percentile = 75.0;
  select_cmd->add_option("--norming", sp_norming, "CSV category,feature,mean_rating")->required();
  select_cmd->add_option("--manual", sp_manual, "CSV category,feature of pre-selected pairs");
  select_cmd->add_option("--exclusions", sp_exclusions, "CSV category,feature to drop");
  select_cmd->add_option("--percentile", sp_percentile)->capture_default_str();

  // run
  auto* run_cmd = app.add_subcommand("run", "Full pipeline over all dataset pairs");
  std::string r_ratings_dir;
  double r_reliability_threshold = 0.07;
  int r_max_remove = 10;
  unsigned r_threads = std::max(1u, std::thread::hardware_concurrency());
  bool r_svg = false;
  run_cmd->add_option("--ratings-dir", r_ratings_dir)->required();
  run_cmd->add_option("--reliability-threshold", r_reliability_threshold)->capture_default_str();
  run_cmd->add_option("--max-outlier-removals", r_max_remove)->capture_default_str();
  run_cmd->add_option("--threads", r_threads)->capture_default_str();
  run_cmd->add_flag("--svg", r_svg, "Also emit SVG scatter plots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cache_cmd) {
      const auto store = EmbeddingStore::load_embeddings(cache_in, opts.vocab_limit);
      store.save_cache(cache_out);
      std::cerr << "cached " << store.size() << " x " << store.dim() << " vectors from "
                << cache_in << '\n';
      return 0;
    }

    const Dataset dataset = load_dataset(opts.dataset_path);

    if (*select_cmd) {
      const auto norming = load_norming(sp_norming);
      const auto manual = sp_manual.empty() ? std::vector<ExperimentPair>{} : load_pair_list(sp_manual);
      const auto exclusions =
          sp_exclusions.empty() ? std::vector<ExperimentPair>{} : load_pair_list(sp_exclusions);
      const auto sel = select_pairs(norming, manual, exclusions, sp_percentile);
      std::ofstream file;
      auto& os = out_or_file(file, opts.out_dir, "selected_pairs.csv");
      os << "category,feature,route\n";
      for (const auto& pair : sel.pairs)
        os << pair.first << ',' << pair.second << ',' << sel.route.at(pair) << '\n';
      std::cerr << "percentile value " << format_value(sel.percentile_value)
                << ", admission threshold " << format_value(sel.threshold) << ", selected "
                << sel.pairs.size() << " pairs\n";
      return 0;
    }

    const EmbeddingStore store = load_store(opts);

    if (*diag_cmd) {
      std::vector<FeaturePoles> features;
      for (const auto& [name, poles] : dataset.features) features.push_back(poles);
      const auto report = alignment_diagnostics(store, features);
      std::ofstream file;
      auto& os = out_or_file(file, opts.out_dir, "alignment.csv");
      os << "feature,within,within_angle_deg\n";
      for (const auto& fa : report.per_feature)
        os << fa.name << ',' << format_value(fa.within) << ','
           << format_value(fa.within_angle_deg) << '\n';
      os << "MEAN_WITHIN," << format_value(report.within_mean) << ','
         << format_value(report.within_angle_deg) << '\n';
      os << "MEAN_WITHIN_POOLED," << format_value(report.within_pooled) << ",\n";
      os << "MEAN_CROSS," << format_value(report.cross_mean) << ','
         << format_value(report.cross_angle_deg) << '\n';
      os << "MEAN_CROSS_POOLED," << format_value(report.cross_pooled) << ",\n";
      for (const auto& name : report.skipped)
        std::cerr << "warning: feature skipped (fewer than 2 lines): " << name << '\n';
      return 0;
    }

    if (*project_cmd) {
      const auto subspace = build_subspace(store, dataset.feature_poles(p_feature));
      auto result = project(store, dataset.category_items(p_category), subspace);
      result.category = p_category;
      std::ofstream file;
      auto& os = out_or_file(file, opts.out_dir, "projection.csv");
      print_projection(os, result);
      return 0;
    }

    if (*viz_cmd) {
      const auto subspace = build_subspace(store, dataset.feature_poles(v_feature));
      const auto viz = pca_viz(store, dataset.category_items(v_category), subspace, v_k);
      std::ofstream file;
      auto& os = out_or_file(file, opts.out_dir, "viz.csv");
      os << "point";
      for (int c = 0; c < viz.coords.cols(); ++c) os << ",pc" << (c + 1);
      os << '\n';
      for (std::size_t i = 0; i < viz.items.size(); ++i) {
        os << viz.items[i];
        for (int c = 0; c < viz.coords.cols(); ++c)
          os << ',' << format_value(viz.coords(static_cast<Eigen::Index>(i), c));
        os << '\n';
      }
      os << "POLE_STRONG";
      for (int c = 0; c < viz.strong_end.cols(); ++c)
        os << ',' << format_value(viz.strong_end(c));
      os << "\nPOLE_WEAK";
      for (int c = 0; c < viz.weak_end.cols(); ++c) os << ',' << format_value(viz.weak_end(c));
      os << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const auto ratings = load_ratings(e_ratings);
      EvalConfig ec{opts.n_perm, mix_seed(opts.seed, hash_string(e_category + ":" + e_feature)),
                    opts.exhaustive_limit};
      const auto eval = evaluate_experiment(store, e_category, dataset.category_items(e_category),
                                            dataset.feature_poles(e_feature), ratings, ec);
      const auto& rep = eval.report;
      std::ofstream file;
      auto& os = out_or_file(file, opts.out_dir, "eval.csv");
      os << "metric,value\n";
      os << "n_items," << rep.n_items << '\n';
      os << "n_participants," << rep.n_participants_retained << '\n';
      os << "r," << format_value(rep.r) << '\n';
      os << "p_r," << format_value(rep.p_r) << '\n';
      os << "oc_p," << format_value(rep.oc_p) << '\n';
      os << "p_oc_p," << format_value(rep.p_ocp) << '\n';
      os << "mean_is_r," << format_value(rep.mean_is_r) << '\n';
      os << "is_oc_p," << format_value(rep.is_ocp) << '\n';
      os << "adjusted_r," << (rep.adjusted_r_negative ? "-" : "") << format_value(rep.adjusted_r)
         << '\n';
      os << "adjusted_oc_p," << format_value(rep.adjusted_ocp) << '\n';
      for (const auto& p : rep.excluded_participants)
        std::cerr << "excluded participant: " << p << '\n';
      for (const auto& item : rep.dropped_items) std::cerr << "dropped item: " << item << '\n';
      return 0;
    }

    // The remaining subcommands run the batch pipeline.
    RunConfig config;
    config.embeddings_path = opts.embeddings;
    config.vocab_limit = opts.vocab_limit;
    config.n_perm = opts.n_perm;
    config.fdr_q = opts.fdr_q;
    config.seed = opts.seed;
    config.exhaustive_limit = opts.exhaustive_limit;
    config.keep_going = opts.keep_going;

    if (*controls_cmd) {
      config.run_sweeps = false;
      const auto tables = load_ratings_dir(c_ratings_dir);
      run_all(store, dataset, tables, config, opts.out_dir.empty() ? "." : opts.out_dir);
      return 0;
    }
    if (*sweep_cmd) {
      config.run_controls = false;
      config.max_outlier_removals = s_max_remove;
      const auto tables = load_ratings_dir(s_ratings_dir);
      run_all(store, dataset, tables, config, opts.out_dir.empty() ? "." : opts.out_dir);
      return 0;
    }
    if (*run_cmd) {
      config.reliability_threshold = r_reliability_threshold;
      config.max_outlier_removals = r_max_remove;
      config.threads = r_threads;
      config.emit_svg = r_svg;
      const auto tables = load_ratings_dir(r_ratings_dir);
      const auto out =
          run_all(store, dataset, tables, config, opts.out_dir.empty() ? "." : opts.out_dir);
      std::cerr << "evaluated " << out.reports.size() << " experiments (" << out.flagged.size()
                << " flagged, " << out.failures.size() << " failed, " << out.n_significant
                << " significant); median r " << format_value(out.median_r) << ", median OC_p "
                << format_value(out.median_ocp) << '\n';
      return out.failures.empty() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
