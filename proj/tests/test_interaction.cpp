#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dias/interaction.hpp"
#include "oracles.hpp"

using dias::LocalEmbeddingSet;
using dias::Mat;
using dias::Modality;

namespace {

LocalEmbeddingSet make_set(Mat<double> rows, Modality m = Modality::kImage) {
  return {0, m, std::move(rows)};
}

Mat<double> random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat<double> m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST_CASE("single-context aggregation returns the context vector", "[interaction]") {
  auto query = make_set(Mat<double>(2, 2, std::vector<double>{1, 0, 0.6, 0.8}));
  auto context = make_set(Mat<double>(1, 2, std::vector<double>{0.6, 0.8}), Modality::kText);
  auto rec = dias::aggregate_local(query, context);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE(rec.updated_vectors(i, 0) == Catch::Approx(0.6).margin(1e-9));
    REQUIRE(rec.updated_vectors(i, 1) == Catch::Approx(0.8).margin(1e-9));
  }
}

TEST_CASE("all-clamped weights aggregate to the zero vector", "[interaction]") {
  auto query = make_set(Mat<double>(1, 2, std::vector<double>{1, 0}));
  auto context = make_set(Mat<double>(1, 2, std::vector<double>{-1, 0}), Modality::kText);
  auto rec = dias::aggregate_local(query, context);
  REQUIRE(rec.similarity(0, 0) == 0.0);
  REQUIRE(rec.updated_vectors(0, 0) == 0.0);
  REQUIRE(rec.updated_vectors(0, 1) == 0.0);
}

TEST_CASE("hand aggregation fixture", "[interaction]") {
  auto query = make_set(Mat<double>(1, 2, std::vector<double>{1, 0}));
  auto context = make_set(Mat<double>(2, 2, std::vector<double>{1, 0, 0, 1}), Modality::kText);
  auto rec = dias::aggregate_local(query, context);
  REQUIRE(rec.similarity(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(rec.similarity(0, 1) == 0.0);
  REQUIRE(rec.updated_vectors(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(rec.updated_vectors(0, 1) == 0.0);
}

TEST_CASE("uniform positive weights average the context", "[interaction]") {
  // Query equidistant from both context rows -> equal weights -> mean.
  auto query = make_set(Mat<double>(1, 2, std::vector<double>{1, 1}));
  auto context = make_set(Mat<double>(2, 2, std::vector<double>{2, 0, 0, 2}), Modality::kText);
  auto rec = dias::aggregate_local(query, context);
  REQUIRE(rec.updated_vectors(0, 0) == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(rec.updated_vectors(0, 1) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("aggregation weights form a convex combination", "[interaction]") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto query = make_set(random_mat(3, 4, rng));
    auto context = make_set(random_mat(5, 4, rng), Modality::kText);
    auto rec = dias::aggregate_local(query, context);
    for (std::size_t i = 0; i < 3; ++i) {
      double wsum = 0;
      for (std::size_t j = 0; j < 5; ++j) {
        REQUIRE(rec.similarity(i, j) >= 0.0);
        wsum += rec.similarity(i, j);
      }
      if (wsum < dias::kSimEps) continue;
      // Reconstruct from normalized weights; must match exactly.
      for (std::size_t k = 0; k < 4; ++k) {
        double v = 0;
        for (std::size_t j = 0; j < 5; ++j)
          v += rec.similarity(i, j) / wsum * context.vectors(j, k);
        REQUIRE(rec.updated_vectors(i, k) == Catch::Approx(v).margin(1e-12));
      }
    }
  }
}

TEST_CASE("scaling context scales the aggregate and not the pooled output", "[interaction]") {
  std::mt19937_64 rng(22);
  auto query = make_set(random_mat(3, 4, rng));
  auto context = make_set(random_mat(4, 4, rng), Modality::kText);
  auto rec = dias::aggregate_local(query, context);

  auto scaled = context;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) scaled.vectors(i, j) *= 2.0;
  auto rec2 = dias::aggregate_local(query, scaled);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      REQUIRE(rec2.updated_vectors(i, k) ==
              Catch::Approx(2.0 * rec.updated_vectors(i, k)).margin(1e-10));

  auto p1 = dias::pool_rows(rec.updated_vectors);
  auto p2 = dias::pool_rows(rec2.updated_vectors);
  for (std::size_t k = 0; k < 4; ++k) REQUIRE(p2[k] == Catch::Approx(p1[k]).margin(1e-10));
}

TEST_CASE("pool fixtures and permutation invariance", "[interaction]") {
  Mat<double> single(1, 3, std::vector<double>{3, 0, 4});
  auto p = dias::pool_rows(single);
  REQUIRE(p[0] == Catch::Approx(0.6).margin(1e-12));
  REQUIRE(p[2] == Catch::Approx(0.8).margin(1e-12));

  Mat<double> two(2, 2, std::vector<double>{1, 0, 0, 1});
  auto q = dias::pool_rows(two);
  REQUIRE(q[0] == Catch::Approx(0.7071).margin(1e-4));
  REQUIRE(q[1] == Catch::Approx(0.7071).margin(1e-4));

  std::mt19937_64 rng(23);
  Mat<double> m = random_mat(6, 3, rng);
  auto base = dias::pool_rows(m);
  std::vector<std::size_t> perm{3, 1, 5, 0, 4, 2};
  Mat<double> shuffled(6, 3);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) shuffled(i, j) = m(perm[i], j);
  auto permuted = dias::pool_rows(shuffled);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE(permuted[j] == Catch::Approx(base[j]).margin(1e-12));
}

TEST_CASE("aggregation matches the oracle on random data", "[interaction]") {
  std::mt19937_64 rng(24);
  auto query = make_set(random_mat(4, 5, rng));
  auto context = make_set(random_mat(3, 5, rng), Modality::kText);

  oracle::mat oq, oc;
  for (std::size_t i = 0; i < 4; ++i)
    oq.push_back({query.vectors.row(i).begin(), query.vectors.row(i).end()});
  for (std::size_t i = 0; i < 3; ++i)
    oc.push_back({context.vectors.row(i).begin(), context.vectors.row(i).end()});

  auto rec = dias::aggregate_local(query, context);
  oracle::mat expect = oracle::attend(oq, oc);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 5; ++k)
      REQUIRE(rec.updated_vectors(i, k) == Catch::Approx(expect[i][k]).margin(1e-12));
}

TEST_CASE("shape mismatches are usage errors", "[interaction]") {
  auto query = make_set(Mat<double>(1, 2, std::vector<double>{1, 0}));
  auto context = make_set(Mat<double>(1, 3, std::vector<double>{1, 0, 0}), Modality::kText);
  REQUIRE_THROWS_AS(dias::aggregate_local(query, context), std::invalid_argument);
}
