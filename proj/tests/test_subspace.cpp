#include <doctest.h>

#include <random>

#include "semproj/error.hpp"
#include "semproj/subspace.hpp"
#include "test_util.hpp"

using namespace semproj;
using test_util::make_store;

TEST_CASE("single pair subspace is the plain vector difference") {
  const auto store = make_store({"a", "b"}, {{1, 0}, {0, 1}});
  const auto sub = build_subspace(store, {"f", {"a"}, {"b"}});
  CHECK(sub.line_count == 1);
  CHECK(sub.direction(0) == doctest::Approx(1.0f));
  CHECK(sub.direction(1) == doctest::Approx(-1.0f));
}

TEST_CASE("averaged pairwise differences equal the centroid difference") {
  const auto store = make_store({"s1", "s2", "s3", "w1", "w2", "w3"},
                                {{2, 0}, {4, 2}, {0, 4}, {0, 0}, {2, -2}, {-2, 2}});
  const auto sub = build_subspace(store, {"f", {"s1", "s2", "s3"}, {"w1", "w2", "w3"}});
  CHECK(sub.line_count == 9);
  CHECK(sub.direction(0) == doctest::Approx(2.0f));
  CHECK(sub.direction(1) == doctest::Approx(2.0f));
}

TEST_CASE("centroid equivalence holds for random poles") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
  std::vector<std::string> vocab;
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 12; ++i) {
    vocab.push_back("w" + std::to_string(i));
    std::vector<float> row(20);
    for (auto& v : row) v = dist(rng);
    rows.push_back(row);
  }
  const auto store = make_store(vocab, rows);
  const FeaturePoles poles{"f", {"w0", "w1", "w2"}, {"w3", "w4", "w5"}};
  const auto sub = build_subspace(store, poles);
  const Eigen::VectorXf centroid_diff = sub.strong_centroid - sub.weak_centroid;
  CHECK((sub.direction - centroid_diff).norm() <= 1e-5f * centroid_diff.norm());
}

TEST_CASE("swapping poles negates the direction") {
  const auto store = make_store({"s1", "s2", "w1", "w2"}, {{3, 1}, {1, 3}, {0, 0}, {-1, 2}});
  const auto fwd = build_subspace(store, {"f", {"s1", "s2"}, {"w1", "w2"}});
  const auto rev = build_subspace(store, {"f", {"w1", "w2"}, {"s1", "s2"}});
  CHECK(fwd.direction == -rev.direction);
}

TEST_CASE("pole validation and missing words") {
  const auto store = make_store({"big", "small"}, {{1, 0}, {0, 1}});
  CHECK_THROWS_AS(build_subspace(store, {"f", {"big"}, {"big"}}), InvalidInput);
  CHECK_THROWS_AS(build_subspace(store, {"f", {"big", "enormous"}, {"small"}}), MissingPoleWord);
  CHECK_THROWS_AS(build_subspace(store, {"f", {}, {"small"}}), InvalidInput);
  // All missing words are listed.
  CHECK_THROWS_WITH_AS(build_subspace(store, {"f", {"gigantic", "enormous"}, {"small"}}),
                       doctest::Contains("gigantic"), MissingPoleWord);
}

TEST_CASE("zero direction is rejected") {
  const auto store = make_store({"a", "b"}, {{1, 1}, {1, 1}});
  CHECK_THROWS_AS(build_subspace(store, {"f", {"a"}, {"b"}}), InvalidInput);
}

TEST_CASE("single_end_direction is the centroid") {
  const auto store = make_store({"a", "b", "v"}, {{1, 0}, {0, 1}, {4, 6}});
  const auto single = single_end_direction(store, {"v"});
  CHECK(single(0) == doctest::Approx(4.0f));
  CHECK(single(1) == doctest::Approx(6.0f));
  const auto mid = single_end_direction(store, {"a", "b"});
  CHECK(mid(0) == doctest::Approx(0.5f));
  CHECK(mid(1) == doctest::Approx(0.5f));
  CHECK_THROWS_AS(single_end_direction(store, {}), InvalidInput);
}

TEST_CASE("identical lines give within alignment 1") {
  // Both pairwise lines of the feature are (1, 0).
  const auto store = make_store({"s1", "s2", "w1", "x", "y"},
                                {{2, 3}, {2, 3}, {1, 3}, {0, 1}, {1, 1}});
  const auto report =
      alignment_diagnostics(store, {{"f", {"s1", "s2"}, {"w1"}}, {"g", {"x"}, {"y"}}});
  REQUIRE(report.per_feature.size() == 1);  // g has a single line and is skipped for within
  CHECK(report.per_feature[0].within == doctest::Approx(1.0));
  CHECK(report.skipped == std::vector<std::string>{"g"});
}

TEST_CASE("orthogonal single-line features give cross alignment 0") {
  const auto store = make_store({"a", "o", "b"}, {{1, 0}, {0, 0}, {0, 1}});
  // f's line is (1,0), g's line is (0,1).
  const auto report = alignment_diagnostics(store, {{"f", {"a"}, {"o"}}, {"g", {"b"}, {"o"}}});
  CHECK(report.cross_mean == doctest::Approx(0.0));
  CHECK(report.cross_angle_deg == doctest::Approx(90.0));
}

TEST_CASE("cross score requires two features") {
  const auto store = make_store({"a", "o"}, {{1, 0}, {0, 0}});
  CHECK_THROWS_AS(alignment_diagnostics(store, {{"f", {"a"}, {"o"}}}), InvalidInput);
}

TEST_CASE("structured features align within more than across") {
  // Each feature concentrates on its own axis plus shared noise.
  std::mt19937 rng(23);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  std::vector<std::string> vocab;
  std::vector<std::vector<float>> rows;
  const int dim = 10;
  std::vector<FeaturePoles> features;
  for (int f = 0; f < 3; ++f) {
    FeaturePoles poles;
    poles.name = "f" + std::to_string(f);
    for (int w = 0; w < 3; ++w) {
      std::vector<float> strong(dim, 0.0f), weak(dim, 0.0f);
      for (int d = 0; d < dim; ++d) {
        strong[d] = noise(rng);
        weak[d] = noise(rng);
      }
      strong[f] += 2.0f;
      weak[f] -= 2.0f;
      const std::string s = "s" + std::to_string(f) + std::to_string(w);
      const std::string k = "w" + std::to_string(f) + std::to_string(w);
      vocab.push_back(s);
      rows.push_back(strong);
      vocab.push_back(k);
      rows.push_back(weak);
      poles.strong_words.push_back(s);
      poles.weak_words.push_back(k);
    }
    features.push_back(poles);
  }
  const auto store = make_store(vocab, rows);
  const auto report = alignment_diagnostics(store, features);
  CHECK(report.within_mean > report.cross_mean);
  CHECK(report.within_pooled > report.cross_pooled);
}
