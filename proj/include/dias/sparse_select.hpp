#pragma once

// Sparse correlation selection: conditional probabilities of the spatial
// residuals, learnable soft thresholds from their row/column statistics, the
// literal binary mask, and a sigmoid relaxation used during training (the
// binary mask has zero gradient to beta).
//
// Two threshold spaces exist. "magnitude" is the literal rule
//   b_ij = 1  iff  residual_ij > max(kappa_row_i, kappa_col_j)
// which compares a probability-space threshold against a distance residual —
// kept as stated. "probability" applies the equivalent lower-tail cut in
// probability space: p_ij < min(mu_i - beta*theta_i, mu_j - beta*theta_j).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dias/spatial.hpp"

namespace dias {

enum class ThresholdSpace { kMagnitude, kProbability };

template <class S>
struct ConditionalProbabilityMatrixT {
  ResidualKind kind = ResidualKind::kInter;
  Mat<S> values;  // entries in (0, 0.5] since residuals are >= 0
};
using ConditionalProbabilityMatrix = ConditionalProbabilityMatrixT<double>;

// kappa = mu + beta * theta with mu/theta the per-row (per-column) mean and
// population standard deviation of the probability values.
template <class S>
struct ThresholdSetT {
  std::vector<S> row_thresholds, col_thresholds;
  std::vector<S> row_mu, row_theta, col_mu, col_theta;
  S beta_row{}, beta_col{};
};
using ThresholdSet = ThresholdSetT<double>;

struct SelectionMask {
  Mat<double> values;  // 0/1
  std::size_t selected_count = 0;
  ThresholdSpace space = ThresholdSpace::kMagnitude;

  double density() const {
    return values.rows() == 0
               ? 0.0
               : static_cast<double>(selected_count) /
                     static_cast<double>(values.rows() * values.cols());
  }
};

template <class S>
ConditionalProbabilityMatrixT<S> conditional_probabilities(
    const SpatialResidualMatrixT<S>& residual) {
  const std::size_t n = residual.values.rows();
  ConditionalProbabilityMatrixT<S> p{residual.kind, Mat<S>(n, residual.values.cols())};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < residual.values.cols(); ++j)
      p.values(i, j) = sigmoid(-residual.values(i, j));
  return p;
}

template <class S>
ThresholdSetT<S> soft_thresholds(const ConditionalProbabilityMatrixT<S>& p, S beta_row,
                                 S beta_col) {
  const std::size_t n = p.values.rows();
  if (n < 2) throw std::invalid_argument("soft_thresholds: need N >= 2");

  ThresholdSetT<S> t;
  t.beta_row = beta_row;
  t.beta_col = beta_col;
  auto stats = [&](const Mat<S>& m, std::vector<S>& mu_out, std::vector<S>& theta_out) {
    const double inv = 1.0 / static_cast<double>(m.cols());
    std::vector<S> centered(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      S mu = sum(m.row(i)) * inv;
      for (std::size_t k = 0; k < m.cols(); ++k) centered[k] = m(i, k) - mu;
      std::span<const S> c{centered.data(), centered.size()};
      mu_out.push_back(mu);
      theta_out.push_back(sqrt(dot(c, c) * inv));
    }
  };
  stats(p.values, t.row_mu, t.row_theta);
  stats(p.values.transposed(), t.col_mu, t.col_theta);
  for (std::size_t i = 0; i < n; ++i) {
    t.row_thresholds.push_back(t.row_mu[i] + beta_row * t.row_theta[i]);
    t.col_thresholds.push_back(t.col_mu[i] + beta_col * t.col_theta[i]);
  }
  return t;
}

// Literal binary selection; strict inequality, so an all-equal row selects
// nothing for any beta >= 0.
inline SelectionMask hard_mask(const SpatialResidualMatrix& residual, const ThresholdSet& t,
                               ThresholdSpace space = ThresholdSpace::kMagnitude) {
  const std::size_t n = residual.values.rows();
  if (t.row_thresholds.size() != n || t.col_thresholds.size() != residual.values.cols())
    throw std::invalid_argument("hard_mask: threshold shape mismatch");
  SelectionMask mask{Mat<double>(n, residual.values.cols(), 0.0), 0, space};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < residual.values.cols(); ++j) {
      bool selected;
      if (space == ThresholdSpace::kMagnitude) {
        selected = residual.values(i, j) > max(t.row_thresholds[i], t.col_thresholds[j]);
      } else {
        const double p = sigmoid(-residual.values(i, j));
        const double lo_row = t.row_mu[i] - t.beta_row * t.row_theta[i];
        const double lo_col = t.col_mu[j] - t.beta_col * t.col_theta[j];
        selected = p < min(lo_row, lo_col);
      }
      if (selected) {
        mask.values(i, j) = 1.0;
        ++mask.selected_count;
      }
    }
  return mask;
}

// Convenience for generic-valued residuals/thresholds: extract plain values
// and apply the literal rule.
template <class S>
SelectionMask hard_mask(const SpatialResidualMatrixT<S>& residual, const ThresholdSetT<S>& t,
                        ThresholdSpace space = ThresholdSpace::kMagnitude) {
  SpatialResidualMatrix rv{residual.kind, values_of(residual.values)};
  ThresholdSet tv;
  tv.row_thresholds = values_of(std::span<const S>(t.row_thresholds));
  tv.col_thresholds = values_of(std::span<const S>(t.col_thresholds));
  tv.row_mu = values_of(std::span<const S>(t.row_mu));
  tv.row_theta = values_of(std::span<const S>(t.row_theta));
  tv.col_mu = values_of(std::span<const S>(t.col_mu));
  tv.col_theta = values_of(std::span<const S>(t.col_theta));
  tv.beta_row = value_of(t.beta_row);
  tv.beta_col = value_of(t.beta_col);
  return hard_mask(rv, tv, space);
}

// sigmoid((residual - max(kappa_row, kappa_col)) / temperature); approaches
// the hard mask pointwise as temperature -> 0 away from the threshold.
template <class S>
Mat<S> smooth_mask(const SpatialResidualMatrixT<S>& residual, const ThresholdSetT<S>& t,
                   double temperature, ThresholdSpace space = ThresholdSpace::kMagnitude) {
  if (temperature <= 0) throw std::invalid_argument("smooth_mask: temperature must be > 0");
  const double inv_tau = 1.0 / temperature;
  const std::size_t n = residual.values.rows();
  Mat<S> b(n, residual.values.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < residual.values.cols(); ++j) {
      if (space == ThresholdSpace::kMagnitude) {
        S cut = max(t.row_thresholds[i], t.col_thresholds[j]);
        b(i, j) = sigmoid((residual.values(i, j) - cut) * inv_tau);
      } else {
        S lo_row = t.row_mu[i] - t.beta_row * t.row_theta[i];
        S lo_col = t.col_mu[j] - t.beta_col * t.col_theta[j];
        S p = sigmoid(-residual.values(i, j));
        b(i, j) = sigmoid((min(lo_row, lo_col) - p) * inv_tau);
      }
    }
  return b;
}

}  // namespace dias
