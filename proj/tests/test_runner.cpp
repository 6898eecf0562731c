#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "semproj/error.hpp"
#include "semproj/runner.hpp"
#include "test_util.hpp"

using namespace semproj;
using test_util::TempDir;
using test_util::make_store;

namespace {

// Two categories x two features with ratings that loosely track the
// planted embedding geometry.
struct RunFixture {
  EmbeddingStore store;
  Dataset dataset;
  std::map<std::string, RatingsTable> ratings;

  RunFixture() : store(build_store()) {
    dataset.categories["toys"] = {"t0", "t1", "t2", "t3", "t4", "t5"};
    dataset.categories["tools"] = {"u0", "u1", "u2", "u3", "u4", "u5"};
    dataset.features["size"] = {"size", {"big"}, {"small"}};
    dataset.features["speed"] = {"speed", {"fast"}, {"slow"}};
    for (const auto& category : {"toys", "tools"})
      for (const auto& feature : {"size", "speed"})
        dataset.pairs.emplace_back(category, feature);

    std::mt19937 rng(99);
    std::normal_distribution<double> noise(0.0, 6.0);
    for (const auto& [category, feature] : dataset.pairs) {
      RatingsTable table;
      table.category = category;
      table.feature = feature;
      table.items = dataset.categories[category];
      const int axis = feature == std::string("size") ? 0 : 1;
      table.raw.resize(5, 6);
      for (int p = 0; p < 5; ++p) {
        table.participants.push_back("p" + std::to_string(p));
        for (int i = 0; i < 6; ++i) {
          const double score = store.lookup(table.items[static_cast<std::size_t>(i)])(axis);
          table.raw(p, i) = std::clamp(50.0 + 12.0 * score + noise(rng), 0.0, 100.0);
        }
      }
      table.raw(0, 0) += table.raw(0, 0) == 100.0 ? -1.0 : 1.0;  // guard against constant rows
      ratings[table.experiment_id()] = table;
    }
  }

  static EmbeddingStore build_store() {
    std::vector<std::string> vocab = {"big", "small", "fast", "slow"};
    std::vector<std::vector<float>> rows = {{4, 0, 0}, {-4, 0, 0}, {0, 4, 0}, {0, -4, 0}};
    std::mt19937 rng(55);
    std::uniform_real_distribution<float> dist(-2.5f, 2.5f);
    for (const char prefix : {'t', 'u'}) {
      for (int i = 0; i < 6; ++i) {
        vocab.push_back(std::string(1, prefix) + std::to_string(i));
        rows.push_back({dist(rng), dist(rng), dist(rng)});
      }
    }
    return make_store(vocab, rows);
  }

  RunConfig config() const {
    RunConfig c;
    c.n_perm = 300;
    c.seed = 7;
    return c;
  }
};

std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[entry.path().lexically_relative(root).string()] = ss.str();
  }
  return files;
}

}  // namespace

TEST_CASE("run_all evaluates every pair and is internally consistent") {
  RunFixture fixture;
  const auto out = run_all(fixture.store, fixture.dataset, fixture.ratings, fixture.config());
  CHECK(out.reports.size() == 4);
  CHECK(out.failures.empty());
  CHECK(out.kept.size() + out.flagged.size() == out.reports.size());

  int significant = 0;
  for (const auto& rep : out.reports) {
    CHECK(rep.n_items == 6);
    CHECK(rep.p_r >= 0.0);
    CHECK(rep.p_r <= 1.0);
    CHECK(rep.fdr_p_r >= rep.p_r);  // BY only inflates p-values
    if (rep.significant) ++significant;
  }
  CHECK(significant == out.n_significant);

  // Controls: 7 methods per experiment; sweeps present for every id.
  CHECK(out.controls.size() == 4 * 7);
  CHECK(out.sweeps.size() == 4);
  for (const auto& [id, rows] : out.sweeps) {
    REQUIRE(!rows.empty());
    CHECK(rows.front().k == 0);
    // n_items shrinks by exactly one per removal step.
    for (std::size_t k = 1; k < rows.size(); ++k)
      CHECK(rows[k].n_items == rows[k - 1].n_items - 1);
  }
  // 6 non-subspace methods x 2 measures.
  CHECK(out.scheme_comparisons.size() == 12);
}

TEST_CASE("run_all output files are byte-identical across reruns and thread counts") {
  RunFixture fixture;
  TempDir dir_a("run_a"), dir_b("run_b"), dir_c("run_c");

  auto config = fixture.config();
  config.threads = 1;
  run_all(fixture.store, fixture.dataset, fixture.ratings, config, dir_a.str());
  run_all(fixture.store, fixture.dataset, fixture.ratings, config, dir_b.str());
  config.threads = 3;
  run_all(fixture.store, fixture.dataset, fixture.ratings, config, dir_c.str());

  const auto a = read_tree(dir_a.path);
  CHECK(a.size() >= 6);  // experiments, summary, flagged, histograms, sweep, controls, scatter
  CHECK(a == read_tree(dir_b.path));
  CHECK(a == read_tree(dir_c.path));
  CHECK(a.count("experiments.csv") == 1);
  CHECK(a.count("summary.csv") == 1);
  CHECK(a.at("summary.csv").find("n_experiments,4") != std::string::npos);
}

TEST_CASE("changing the seed changes Monte-Carlo p-values only") {
  RunFixture fixture;
  auto config = fixture.config();
  config.exhaustive_limit = 1;  // force sampled permutations
  const auto out1 = run_all(fixture.store, fixture.dataset, fixture.ratings, config);
  config.seed = 8;
  const auto out2 = run_all(fixture.store, fixture.dataset, fixture.ratings, config);
  for (std::size_t i = 0; i < out1.reports.size(); ++i) {
    CHECK(out1.reports[i].r == out2.reports[i].r);  // observed stats are seed-free
    CHECK(out1.reports[i].oc_p == out2.reports[i].oc_p);
  }
}

TEST_CASE("missing ratings abort the run unless keep_going is set") {
  RunFixture fixture;
  fixture.ratings.erase("tools:speed");
  auto config = fixture.config();
  CHECK_THROWS_WITH_AS(
      run_all(fixture.store, fixture.dataset, fixture.ratings, config),
      doctest::Contains("tools:speed"), Error);

  config.keep_going = true;
  const auto out = run_all(fixture.store, fixture.dataset, fixture.ratings, config);
  CHECK(out.reports.size() == 3);
  REQUIRE(out.failures.size() == 1);
  CHECK(out.failures[0].find("tools:speed") != std::string::npos);
}

TEST_CASE("load_ratings_dir keys tables by experiment id") {
  RunFixture fixture;
  TempDir dir("ratings_dir");
  for (const auto& [id, table] : fixture.ratings) {
    std::string name = id;
    std::replace(name.begin(), name.end(), ':', '_');
    std::ofstream out(dir.path / (name + ".csv"));
    out << "experiment,participant,item,rating\n";
    for (std::size_t p = 0; p < table.participants.size(); ++p)
      for (std::size_t i = 0; i < table.items.size(); ++i)
        out << id << ',' << table.participants[p] << ',' << table.items[i] << ','
            << table.raw(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) << '\n';
  }
  std::ofstream(dir.path / "notes.txt") << "ignored\n";

  const auto tables = load_ratings_dir(dir.str());
  CHECK(tables.size() == 4);
  CHECK(tables.count("toys:size") == 1);
  CHECK(tables.at("tools:speed").participants.size() == 5);

  // A second file for an already-seen experiment is an error.
  std::ofstream(dir.path / "zz_dup.csv")
      << "experiment,participant,item,rating\ntoys:size,p0,t0,10\ntoys:size,p0,t1,20\n";
  CHECK_THROWS_AS(load_ratings_dir(dir.str()), Error);
}

TEST_CASE("RunConfig::validate rejects out-of-range settings") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  auto expect_throw = [](auto mutate) {
    RunConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
  };
  expect_throw([](RunConfig& c) { c.vocab_limit = 0; });
  expect_throw([](RunConfig& c) { c.n_perm = 0; });
  expect_throw([](RunConfig& c) { c.fdr_q = 1.0; });
  expect_throw([](RunConfig& c) { c.reliability_threshold = -0.1; });
  expect_throw([](RunConfig& c) { c.max_outlier_removals = -1; });
  expect_throw([](RunConfig& c) { c.norming_percentile = 100.0; });
  expect_throw([](RunConfig& c) { c.exhaustive_limit = 0; });
}

TEST_CASE("format_value renders round-trippable decimal text") {
  CHECK(format_value(0.5) == "0.5");
  CHECK(format_value(-1.0) == "-1");
  CHECK(format_value(0.1234567890123) == "0.123456789");
}
