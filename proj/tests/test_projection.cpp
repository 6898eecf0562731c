#include <doctest.h>

#include <random>

#include "semproj/error.hpp"
#include "semproj/projection.hpp"
#include "test_util.hpp"

using namespace semproj;
using test_util::make_store;

namespace {

FeatureSubspace axis_subspace(float x, float y) {
  FeatureSubspace sub;
  sub.name = "axis";
  sub.direction = Eigen::Vector2f(x, y);
  sub.strong_centroid = Eigen::Vector2f(x, y);
  sub.weak_centroid = Eigen::Vector2f(0, 0);
  sub.line_count = 1;
  return sub;
}

}  // namespace

TEST_CASE("zscore basics") {
  const auto z = zscore({1.0, 2.0, 3.0});
  CHECK(z[0] == doctest::Approx(-1.0));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(zscore({5.0, 5.0, 5.0}), InvalidInput);
  CHECK_THROWS_AS(zscore({5.0}), InvalidInput);
}

TEST_CASE("zscore output has mean 0 and sample SD 1") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values(10);
    for (auto& v : values) v = dist(rng);
    const auto z = zscore(values);
    CHECK(mean(z) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sample_sd(z) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("projection raw scores are inner products") {
  const auto store = make_store({"p", "q", "r"}, {{0, 5}, {3, 4}, {-1, 2}});
  const auto result = project(store, {"p", "q", "r"}, axis_subspace(1, 0));
  REQUIRE(result.items.size() == 3);
  CHECK(result.raw[0] == doctest::Approx(0.0));  // orthogonal vector
  CHECK(result.raw[1] == doctest::Approx(3.0));
  CHECK(result.raw[2] == doctest::Approx(-1.0));
}

TEST_CASE("projection z-scores match the worked example") {
  const auto store = make_store({"q", "r"}, {{3, 4}, {-1, 2}});
  const auto result = project(store, {"q", "r"}, axis_subspace(1, 0));
  CHECK(result.z[0] == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(result.z[1] == doctest::Approx(-0.7071).epsilon(1e-4));
}

TEST_CASE("unresolvable items are dropped with a warning") {
  const auto store = make_store({"a", "b"}, {{1, 0}, {2, 0}});
  const auto result = project(store, {"a", "b", "zzz"}, axis_subspace(1, 0));
  CHECK(result.items == std::vector<std::string>{"a", "b"});
  CHECK(result.unresolved == std::vector<std::string>{"zzz"});
}

TEST_CASE("too few resolvable items or zero variance error out") {
  const auto store = make_store({"a", "b"}, {{1, 0}, {1, 0}});
  CHECK_THROWS_AS(project(store, {"a"}, axis_subspace(1, 0)), InvalidInput);
  CHECK_THROWS_AS(project(store, {"a", "b"}, axis_subspace(1, 0)), InvalidInput);
}

TEST_CASE("scaling the direction leaves z-scores unchanged and negation flips them") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
  std::vector<std::string> vocab;
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 8; ++i) {
    vocab.push_back("i" + std::to_string(i));
    rows.push_back({dist(rng), dist(rng)});
  }
  const auto store = make_store(vocab, rows);
  auto base = axis_subspace(0.8f, -0.6f);
  auto scaled = base;
  scaled.direction *= 37.5f;
  auto negated = base;
  negated.direction = -negated.direction;

  const auto r0 = project(store, vocab, base);
  const auto r1 = project(store, vocab, scaled);
  const auto r2 = project(store, vocab, negated);
  for (std::size_t i = 0; i < r0.z.size(); ++i) {
    // float32 arithmetic: invariance holds to single precision only.
    CHECK(r1.z[i] == doctest::Approx(r0.z[i]).epsilon(1e-5));
    CHECK(r2.z[i] == doctest::Approx(-r0.z[i]).epsilon(1e-5));
  }
}

TEST_CASE("distance controls") {
  const auto store = make_store({"pole", "same", "ortho", "far"},
                                {{0, 1}, {0, 2}, {1, 0}, {0, 1}});
  SUBCASE("euclidean distance to the centroid") {
    const auto result =
        distance_control(store, {"far", "ortho"}, {"pole"}, DistanceMetric::Euclidean);
    CHECK(result.raw[0] == doctest::Approx(0.0));  // coincides with the pole
    CHECK(result.raw[1] == doctest::Approx(std::sqrt(2.0)));
    CHECK(result.method == ScoreMethod::EuclideanDist);
  }
  SUBCASE("cosine distance") {
    const auto result =
        distance_control(store, {"same", "ortho"}, {"pole"}, DistanceMetric::Cosine);
    CHECK(result.raw[0] == doctest::Approx(0.0));  // parallel, positive scale
    CHECK(result.raw[1] == doctest::Approx(1.0));  // orthogonal
    CHECK(result.method == ScoreMethod::CosineDist);
  }
}

TEST_CASE("pca_viz recovers a planar embedding") {
  // Points lie exactly in a 2-d subspace of a 4-d space.
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  std::vector<std::string> vocab = {"s", "w"};
  std::vector<std::vector<float>> rows = {{1, 1, 0, 0}, {-1, -1, 0, 0}};
  for (int i = 0; i < 6; ++i) {
    const float a = dist(rng), b = dist(rng);
    vocab.push_back("p" + std::to_string(i));
    rows.push_back({a, b, a + b, a - b});
  }
  // The subspace spanned by the points: columns depend on (a, b) only... the
  // pole rows must lie in it too for exact rank 2.
  rows[0] = {1, 1, 2, 0};
  rows[1] = {-1, -1, -2, 0};
  const auto store = make_store(vocab, rows);
  FeatureSubspace sub;
  sub.name = "f";
  sub.direction = store.lookup("s") - store.lookup("w");
  sub.strong_centroid = store.lookup("s");
  sub.weak_centroid = store.lookup("w");
  const auto viz = pca_viz(store, {"p0", "p1", "p2", "p3", "p4", "p5"}, sub, 2);
  CHECK(viz.explained.sum() >= (1.0 - 1e-6) * viz.total_variance);
}

TEST_CASE("pca_viz on collinear points puts no variance on the second component") {
  std::vector<std::string> vocab = {"s", "w", "a", "b", "c"};
  std::vector<std::vector<float>> rows = {
      {4, 4, 4}, {-4, -4, -4}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  const auto store = make_store(vocab, rows);
  FeatureSubspace sub;
  sub.name = "f";
  sub.direction = store.lookup("s") - store.lookup("w");
  sub.strong_centroid = store.lookup("s");
  sub.weak_centroid = store.lookup("w");
  const auto viz = pca_viz(store, {"a", "b", "c"}, sub, 2);
  CHECK(viz.explained(1) < 1e-9 * viz.total_variance);
}

TEST_CASE("pca_viz is deterministic") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<std::string> vocab = {"s", "w"};
  std::vector<std::vector<float>> rows = {{1, 0, 0, 0, 0}, {-1, 0, 0, 0, 0}};
  std::vector<std::string> items;
  for (int i = 0; i < 8; ++i) {
    vocab.push_back("p" + std::to_string(i));
    items.push_back(vocab.back());
    std::vector<float> row(5);
    for (auto& v : row) v = dist(rng);
    rows.push_back(row);
  }
  const auto store = make_store(vocab, rows);
  FeatureSubspace sub;
  sub.name = "f";
  sub.direction = store.lookup("s") - store.lookup("w");
  sub.strong_centroid = store.lookup("s");
  sub.weak_centroid = store.lookup("w");
  const auto v1 = pca_viz(store, items, sub, 3);
  const auto v2 = pca_viz(store, items, sub, 3);
  CHECK(v1.coords == v2.coords);
  CHECK(v1.strong_end == v2.strong_end);
  // Sign convention: largest-magnitude loading positive implies a canonical
  // orientation, so coordinates are reproducible bit-for-bit.
}

TEST_CASE("pca_viz validates k and item count") {
  const auto store = make_store({"s", "w", "a", "b"}, {{1, 0}, {0, 1}, {2, 2}, {3, 1}});
  FeatureSubspace sub;
  sub.name = "f";
  sub.direction = Eigen::Vector2f(1, -1);
  sub.strong_centroid = Eigen::Vector2f(1, 0);
  sub.weak_centroid = Eigen::Vector2f(0, 1);
  CHECK_THROWS_AS(pca_viz(store, {"a", "b"}, sub, 4), InvalidInput);
  CHECK_THROWS_AS(pca_viz(store, {"a", "b"}, sub, 2), InvalidInput);  // needs k+1 items
}
