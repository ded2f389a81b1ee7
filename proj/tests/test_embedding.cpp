#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dias/embedding.hpp"
#include "dias/grad_check.hpp"
#include "oracles.hpp"

using dias::Mat;
using dias::Modality;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("cosine fixtures", "[embedding]") {
  std::vector<double> a{1, 0}, b{0, 1};
  REQUIRE(dias::cosine<double>(a, b) == 0.0);

  std::vector<double> c{1, 2};
  REQUIRE(dias::cosine<double>(c, c) == Catch::Approx(1.0).margin(1e-6));

  std::vector<double> u{1, 2, 3}, v{4, 5, 6};
  REQUIRE(dias::cosine<double>(u, v) == Catch::Approx(0.9746).margin(1e-4));

  std::vector<double> z{0, 0, 0};
  REQUIRE(dias::cosine<double>(z, z) == 0.0);

  REQUIRE_THROWS_AS(dias::cosine<double>(a, u), std::invalid_argument);
}

TEST_CASE("cosine symmetry and scale invariance", "[embedding]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto u = random_vec(5, rng);
    auto v = random_vec(5, rng);
    const double c = dias::cosine<double>(u, v);
    REQUIRE(dias::cosine<double>(v, u) == Catch::Approx(c).margin(1e-12));

    auto su = u;
    auto sv = v;
    for (double& x : su) x *= 4.0;   // powers of two keep the check exact
    for (double& x : sv) x *= 0.25;
    REQUIRE(dias::cosine<double>(su, sv) == c);
    REQUIRE(std::abs(c) <= 1.0 + 1e-12);
  }
}

TEST_CASE("cosine of a vector with itself is exactly 1 down to tiny norms", "[embedding]") {
  std::mt19937_64 rng(12);
  for (double scale : {1.0, 1e-2, 1e-4}) {
    auto u = random_vec(4, rng, 0.5, 1.0);
    for (double& x : u) x *= scale;
    REQUIRE(dias::cosine<double>(u, u) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("projection normalizes rows and matches the hand fixture", "[embedding]") {
  Mat<double> raw(1, 2, std::vector<double>{3, 4});
  Mat<double> eye(2, 2, std::vector<double>{1, 0, 0, 1});
  std::vector<double> bias{0, 0};

  Mat<double> out = dias::affine_normalized(raw, eye, std::span<const double>(bias));
  REQUIRE(out(0, 0) == Catch::Approx(0.6).margin(1e-12));
  REQUIRE(out(0, 1) == Catch::Approx(0.8).margin(1e-12));

  // identity weight, zero bias, unit-norm input rows: output equals input
  Mat<double> unit(2, 2, std::vector<double>{1, 0, 0, 1});
  Mat<double> same = dias::affine_normalized(unit, eye, std::span<const double>(bias));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(same(i, j) == Catch::Approx(unit(i, j)).margin(1e-12));
}

TEST_CASE("projection output rows are unit norm for arbitrary params", "[embedding]") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d_in = 3 + trial % 4, d = 2 + trial % 3, n = 1 + trial % 5;
    Mat<double> raw(n, d_in), w(d_in, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d_in; ++j) raw(i, j) = random_vec(1, rng)[0];
    for (std::size_t i = 0; i < d_in; ++i)
      for (std::size_t j = 0; j < d; ++j) w(i, j) = random_vec(1, rng)[0];
    auto bias = random_vec(d, rng);

    Mat<double> out = dias::affine_normalized(raw, w, std::span<const double>(bias));
    for (std::size_t i = 0; i < n; ++i) {
      double norm2 = 0;
      for (std::size_t j = 0; j < d; ++j) norm2 += out(i, j) * out(i, j);
      REQUIRE(std::sqrt(norm2) == Catch::Approx(1.0).margin(1e-6));
    }
    // deterministic
    Mat<double> again = dias::affine_normalized(raw, w, std::span<const double>(bias));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) REQUIRE(again(i, j) == out(i, j));
  }

  Mat<double> raw(1, 3);
  Mat<double> w(2, 2);
  std::vector<double> bias{0, 0};
  REQUIRE_THROWS_AS(dias::affine_normalized(raw, w, std::span<const double>(bias)),
                    std::invalid_argument);
}

TEST_CASE("projection agrees with the oracle implementation", "[embedding]") {
  std::mt19937_64 rng(14);
  oracle::mat raw{{0.3, -1.2, 0.7}, {2.0, 0.1, -0.5}};
  oracle::mat w{{0.2, -0.4}, {1.0, 0.3}, {-0.7, 0.9}};
  oracle::vec b{0.05, -0.6};
  (void)rng;

  Mat<double> raw_m(2, 3, std::vector<double>{0.3, -1.2, 0.7, 2.0, 0.1, -0.5});
  Mat<double> w_m(3, 2, std::vector<double>{0.2, -0.4, 1.0, 0.3, -0.7, 0.9});
  std::vector<double> b_v{0.05, -0.6};

  oracle::mat expect = oracle::project(raw, w, b);
  Mat<double> got = dias::affine_normalized(raw_m, w_m, std::span<const double>(b_v));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(got(i, j) == Catch::Approx(expect[i][j]).margin(1e-12));
}

TEST_CASE("grad_check validates a quadratic and flags corrupted gradients", "[embedding]") {
  std::vector<double> p{1.0, 2.0};
  auto loss = [&] { return 0.5 * (p[0] * p[0] + p[1] * p[1]); };

  dias::ParamRef ref{"p", std::span<double>(p)};
  auto good = [&] { return std::vector<std::vector<double>>{{p[0], p[1]}}; };
  auto reports = dias::grad_check(loss, good, std::span<const dias::ParamRef>(&ref, 1), 1e-5, 1e-6);
  REQUIRE(reports.size() == 1);
  REQUIRE(reports[0].passed);
  REQUIRE(reports[0].max_rel_error <= 1e-6);

  auto bad = [&] { return std::vector<std::vector<double>>{{p[0] + 0.5, p[1]}}; };
  auto bad_reports = dias::grad_check(loss, bad, std::span<const dias::ParamRef>(&ref, 1));
  REQUIRE_FALSE(bad_reports[0].passed);
}

TEST_CASE("grad_check passes a constant loss and reports non-finite probes", "[embedding]") {
  std::vector<double> p{0.4, -0.3, 2.0};
  dias::ParamRef ref{"p", std::span<double>(p)};

  auto constant = [] { return 3.5; };
  auto zeros = [&] { return std::vector<std::vector<double>>{{0, 0, 0}}; };
  auto reports = dias::grad_check(constant, zeros, std::span<const dias::ParamRef>(&ref, 1));
  REQUIRE(reports[0].passed);
  REQUIRE(reports[0].max_rel_error == 0.0);

  auto exploding = [&] { return std::log(p[0] - 10.0); };  // NaN at every probe
  auto nan_reports =
      dias::grad_check(exploding, zeros, std::span<const dias::ParamRef>(&ref, 1));
  REQUIRE_FALSE(nan_reports[0].passed);
  REQUIRE(nan_reports[0].note.find("non-finite") != std::string::npos);
}
