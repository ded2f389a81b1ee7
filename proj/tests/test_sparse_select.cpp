#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dias/sparse_select.hpp"
#include "oracles.hpp"

using dias::Mat;
using dias::ResidualKind;
using dias::SpatialResidualMatrix;
using dias::ThresholdSpace;

namespace {

SpatialResidualMatrix residual_of(Mat<double> m, ResidualKind k = ResidualKind::kInter) {
  return {k, std::move(m)};
}

Mat<double> random_residual(std::size_t n, std::mt19937_64& rng, bool symmetric_zero_diag) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Mat<double> m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
  if (symmetric_zero_diag)
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = 0;
      for (std::size_t j = i + 1; j < n; ++j) m(j, i) = m(i, j);
    }
  return m;
}

oracle::mat to_oracle(const Mat<double>& m) {
  oracle::mat o(m.rows(), oracle::vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) o[i][j] = m(i, j);
  return o;
}

}  // namespace

TEST_CASE("conditional probability fixtures", "[sparse-select]") {
  Mat<double> r(2, 2, std::vector<double>{0.0, std::log(3.0), 10.0, 0.0});
  auto p = dias::conditional_probabilities(residual_of(r));
  REQUIRE(p.values(0, 0) == 0.5);
  REQUIRE(p.values(0, 1) == Catch::Approx(0.25).margin(1e-12));
  REQUIRE(p.values(1, 0) == Catch::Approx(4.54e-5).margin(1e-7));
  REQUIRE(p.values(1, 1) == 0.5);
}

TEST_CASE("probabilities live in (0, 0.5] and decrease in the residual", "[sparse-select]") {
  std::mt19937_64 rng(51);
  auto r = random_residual(5, rng, true);
  auto p = dias::conditional_probabilities(residual_of(r));
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(p.values(i, i) == 0.5);  // zero diagonal residual
    for (std::size_t j = 0; j < 5; ++j) {
      REQUIRE(p.values(i, j) > 0.0);
      REQUIRE(p.values(i, j) <= 0.5);
    }
  }
  REQUIRE(dias::sigmoid(-0.3) > dias::sigmoid(-0.7));
}

TEST_CASE("soft threshold fixtures", "[sparse-select]") {
  // constant row: theta = 0, kappa = p0 for any beta
  Mat<double> flat(2, 3, 0.0);
  dias::ConditionalProbabilityMatrixT<double> pc{ResidualKind::kInter, Mat<double>(3, 3, 0.37)};
  auto t0 = dias::soft_thresholds(pc, 5.0, 5.0);
  for (double k : t0.row_thresholds) REQUIRE(k == Catch::Approx(0.37).margin(1e-12));
  (void)flat;

  // hand fixture: row {0.2, 0.4, 0.6}, beta = 1 -> 0.56330
  dias::ConditionalProbabilityMatrixT<double> p3{
      ResidualKind::kInter,
      Mat<double>(3, 3, std::vector<double>{0.2, 0.4, 0.6, 0.2, 0.4, 0.6, 0.2, 0.4, 0.6})};
  auto t1 = dias::soft_thresholds(p3, 1.0, 1.0);
  REQUIRE(t1.row_thresholds[0] == Catch::Approx(0.56330).margin(1e-4));
  REQUIRE(t1.row_mu[0] == Catch::Approx(0.4).margin(1e-12));
  REQUIRE(t1.row_theta[0] == Catch::Approx(0.1632993).margin(1e-6));
  // columns are constant -> kappa equals the column value
  REQUIRE(t1.col_thresholds[0] == Catch::Approx(0.2).margin(1e-12));

  // beta = 0 -> kappa = mu exactly
  auto t2 = dias::soft_thresholds(p3, 0.0, 0.0);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(t2.row_thresholds[i] == t2.row_mu[i]);
}

TEST_CASE("kappa identity holds on random inputs", "[sparse-select]") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = random_residual(4, rng, false);
    auto p = dias::conditional_probabilities(residual_of(r));
    const double br = 0.25 * static_cast<double>(trial), bc = 2.0 - 0.1 * trial;
    auto t = dias::soft_thresholds(p, br, bc);
    auto expect = oracle::thresholds(to_oracle(p.values), br, bc);
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(t.row_thresholds[i] == Catch::Approx(expect.row[i]).margin(1e-12));
      REQUIRE(t.col_thresholds[i] == Catch::Approx(expect.col[i]).margin(1e-12));
      REQUIRE(t.row_thresholds[i] ==
              Catch::Approx(t.row_mu[i] + br * t.row_theta[i]).margin(1e-15));
    }
  }
}

TEST_CASE("hard mask hand fixture at N=2", "[sparse-select]") {
  Mat<double> r(2, 2, std::vector<double>{0, 5, 5, 0});
  auto res = residual_of(r);
  auto p = dias::conditional_probabilities(res);
  auto t = dias::soft_thresholds(p, 0.0, 0.0);
  REQUIRE(t.row_thresholds[0] == Catch::Approx(0.2533).margin(1e-4));
  auto mask = dias::hard_mask(res, t);
  REQUIRE(mask.values(0, 0) == 0.0);
  REQUIRE(mask.values(0, 1) == 1.0);
  REQUIRE(mask.values(1, 0) == 1.0);
  REQUIRE(mask.values(1, 1) == 0.0);
  REQUIRE(mask.selected_count == 2);
  REQUIRE(mask.density() == Catch::Approx(0.5));
}

TEST_CASE("degenerate masks: all-equal residuals and unreachable thresholds", "[sparse-select]") {
  // Feasible residual matrices have zero diagonals, so all-equal means all
  // zero: every probability is exactly mu and kappa >= mu, hence the strict
  // inequality never fires.
  auto res = residual_of(Mat<double>(3, 3, 0.0));
  auto p = dias::conditional_probabilities(res);
  for (double beta : {0.0, 0.5, 3.0}) {
    auto t = dias::soft_thresholds(p, beta, beta);
    REQUIRE(dias::hard_mask(res, t).selected_count == 0);  // strict inequality
  }

  std::mt19937_64 rng(53);
  auto r = random_residual(4, rng, false);
  auto res2 = residual_of(r);
  auto t = dias::soft_thresholds(dias::conditional_probabilities(res2), 0.0, 0.0);
  for (double& k : t.row_thresholds) k = 10.0;  // above the max possible residual
  for (double& k : t.col_thresholds) k = 10.0;
  REQUIRE(dias::hard_mask(res2, t).selected_count == 0);
}

TEST_CASE("hard mask equals exhaustive rule evaluation on random instances", "[sparse-select]") {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> beta_d(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 5;
    auto r = random_residual(n, rng, trial % 2 == 0);
    auto res = residual_of(r);
    const double br = beta_d(rng), bc = beta_d(rng);
    auto t = dias::soft_thresholds(dias::conditional_probabilities(res), br, bc);
    auto mask = dias::hard_mask(res, t);

    auto ot = oracle::thresholds(oracle::probabilities(to_oracle(r)), br, bc);
    auto om = oracle::hard_mask(to_oracle(r), ot);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        REQUIRE(mask.values(i, j) == om[i][j]);
        count += om[i][j] > 0;
      }
    REQUIRE(mask.selected_count == count);
  }
}

TEST_CASE("selected count is non-increasing in beta", "[sparse-select]") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + trial % 4;
    auto r = random_residual(n, rng, false);
    auto res = residual_of(r);
    auto p = dias::conditional_probabilities(res);
    // all rows/cols of a generic random matrix have positive variance
    std::size_t prev = n * n + 1;
    for (double beta : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      auto t = dias::soft_thresholds(p, beta, beta);
      const std::size_t count = dias::hard_mask(res, t).selected_count;
      REQUIRE(count <= prev);
      prev = count;
    }
  }
}

TEST_CASE("probability-space mask mirrors the magnitude-space lower tail", "[sparse-select]") {
  std::mt19937_64 rng(56);
  auto r = random_residual(4, rng, false);
  auto res = residual_of(r);
  auto p = dias::conditional_probabilities(res);
  auto t = dias::soft_thresholds(p, 0.7, 0.4);
  auto mask = dias::hard_mask(res, t, ThresholdSpace::kProbability);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double lo_row = t.row_mu[i] - 0.7 * t.row_theta[i];
      const double lo_col = t.col_mu[j] - 0.4 * t.col_theta[j];
      const bool expect = p.values(i, j) < std::min(lo_row, lo_col);
      REQUIRE(mask.values(i, j) == (expect ? 1.0 : 0.0));
    }
}

TEST_CASE("smooth mask fixtures and bracketing", "[sparse-select]") {
  // residual == threshold -> 0.5
  auto res = residual_of(Mat<double>(2, 2, 0.3));
  dias::ThresholdSetT<double> t;
  t.row_thresholds = {0.3, 0.3};
  t.col_thresholds = {0.1, 0.1};
  t.row_mu = t.col_mu = {0.3, 0.3};
  t.row_theta = t.col_theta = {0.0, 0.0};
  auto b = dias::smooth_mask(res, t, 0.1);
  REQUIRE(b(0, 0) == Catch::Approx(0.5).margin(1e-12));

  // residual 1.0, threshold 0.5, tau 0.1 -> sigmoid(5)
  auto res2 = residual_of(Mat<double>(2, 2, 1.0));
  t.row_thresholds = {0.5, 0.5};
  t.col_thresholds = {0.5, 0.5};
  auto b2 = dias::smooth_mask(res2, t, 0.1);
  REQUIRE(b2(0, 0) == Catch::Approx(0.9933).margin(1e-4));

  REQUIRE_THROWS_AS(dias::smooth_mask(res2, t, 0.0), std::invalid_argument);

  // tau -> 0+ approaches the hard mask away from the threshold; values bracket it
  std::mt19937_64 rng(57);
  auto r = random_residual(5, rng, false);
  auto res3 = residual_of(r);
  auto thr = dias::soft_thresholds(dias::conditional_probabilities(res3), 1.0, 1.0);
  auto hard = dias::hard_mask(res3, thr);
  auto tiny = dias::smooth_mask(res3, thr, 1e-6);
  auto loose = dias::smooth_mask(res3, thr, 0.1);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const double cut = std::max(thr.row_thresholds[i], thr.col_thresholds[j]);
      if (r(i, j) != cut) {
        REQUIRE(tiny(i, j) == Catch::Approx(hard.values(i, j)).margin(1e-6));
        REQUIRE(std::abs(loose(i, j) - hard.values(i, j)) < 0.5);
      }
      REQUIRE(loose(i, j) > 0.0);
      REQUIRE(loose(i, j) < 1.0);
    }
}
