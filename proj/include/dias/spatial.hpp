#pragma once

// Inter-/intra-modality spatial constraints: distance matrices over global
// embeddings, asymmetry/inconsistency residuals, and the squared-sum losses.
// Distances are cosine distances, so all entries live in [0, 2] and every
// loss is invariant to positive rescaling of the embeddings.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dias/embedding.hpp"

namespace dias {

enum class ResidualKind { kInter, kIntra };

template <class S>
struct InterModalDistanceMatrixT {
  Mat<S> values;  // N x N, x_ij = 1 - cos(V̂_i, T̂_j)
};
using InterModalDistanceMatrix = InterModalDistanceMatrixT<double>;

template <class S>
struct IntraModalDistanceMatrixT {
  Mat<S> image_values;  // symmetric, zero diagonal
  Mat<S> text_values;
};
using IntraModalDistanceMatrix = IntraModalDistanceMatrixT<double>;

template <class S>
struct SpatialResidualMatrixT {
  ResidualKind kind = ResidualKind::kInter;
  Mat<S> values;  // nonnegative
};
using SpatialResidualMatrix = SpatialResidualMatrixT<double>;

namespace detail {

template <class S>
std::vector<S> global_inverse_norms(std::span<const GlobalEmbeddingT<S>> globals) {
  std::vector<S> inv;
  inv.reserve(globals.size());
  for (const auto& g : globals) {
    std::span<const S> v{g.vector};
    inv.push_back(1.0 / max(sqrt(dot(v, v)), kSimEps));
  }
  return inv;
}

}  // namespace detail

template <class S>
InterModalDistanceMatrixT<S> inter_distance(std::span<const GlobalEmbeddingT<S>> images,
                                            std::span<const GlobalEmbeddingT<S>> texts) {
  if (images.size() != texts.size())
    throw std::invalid_argument("inter_distance: modality lists differ in length");
  const std::size_t n = images.size();
  const std::vector<S> inv_i = detail::global_inverse_norms(images);
  const std::vector<S> inv_t = detail::global_inverse_norms(texts);
  InterModalDistanceMatrixT<S> out{Mat<S>(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.values(i, j) = 1.0 - dot(std::span<const S>(images[i].vector),
                                   std::span<const S>(texts[j].vector)) *
                                   (inv_i[i] * inv_t[j]);
  return out;
}

// Pairwise distances within one modality; the diagonal is identically zero
// and the upper triangle is mirrored, so symmetry holds exactly.
template <class S>
Mat<S> intra_distance(std::span<const GlobalEmbeddingT<S>> globals, S zero) {
  const std::size_t n = globals.size();
  const std::vector<S> inv = detail::global_inverse_norms(globals);
  Mat<S> y(n, n, zero);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      y(i, j) = 1.0 - dot(std::span<const S>(globals[i].vector),
                          std::span<const S>(globals[j].vector)) *
                          (inv[i] * inv[j]);
      y(j, i) = y(i, j);
    }
  return y;
}

// |X - X^T|; diagonal stays exactly zero.
template <class S>
SpatialResidualMatrixT<S> inter_residual(const InterModalDistanceMatrixT<S>& x, S zero) {
  const std::size_t n = x.values.rows();
  SpatialResidualMatrixT<S> r{ResidualKind::kInter, Mat<S>(n, n, zero)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      r.values(i, j) = abs(x.values(i, j) - x.values(j, i));
      r.values(j, i) = r.values(i, j);
    }
  return r;
}

// |Y - Z| elementwise; with symmetric zero-diagonal inputs the diagonal stays
// zero, so matched pairs never contribute.
template <class S>
SpatialResidualMatrixT<S> intra_residual(const Mat<S>& y, const Mat<S>& z) {
  if (y.rows() != z.rows() || y.cols() != z.cols())
    throw std::invalid_argument("intra_residual: shape mismatch");
  SpatialResidualMatrixT<S> r{ResidualKind::kIntra, Mat<S>(y.rows(), y.cols())};
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) r.values(i, j) = abs(y(i, j) - z(i, j));
  return r;
}

// Raw masked squared sum: sum_ij b_ij r_ij^2 (b == 1 without a mask). The
// N^2-normalized variants used by the training objective divide this by N^2.
template <class S>
S dense_loss(const SpatialResidualMatrixT<S>& residual, const Mat<double>* mask = nullptr) {
  if (mask && (mask->rows() != residual.values.rows() || mask->cols() != residual.values.cols()))
    throw std::invalid_argument("dense_loss: mask shape mismatch");
  std::vector<S> terms;
  terms.reserve(residual.values.rows() * residual.values.cols());
  for (std::size_t i = 0; i < residual.values.rows(); ++i)
    for (std::size_t j = 0; j < residual.values.cols(); ++j) {
      const S& r = residual.values(i, j);
      if (mask) {
        terms.push_back(r * r * (*mask)(i, j));
      } else {
        terms.push_back(r * r);
      }
    }
  return sum(std::span<const S>(terms));
}

// Squared sum weighted by a (possibly smooth) mask that itself carries
// gradients.
template <class S>
S weighted_loss(const SpatialResidualMatrixT<S>& residual, const Mat<S>& weights) {
  if (weights.rows() != residual.values.rows() || weights.cols() != residual.values.cols())
    throw std::invalid_argument("weighted_loss: weight shape mismatch");
  std::vector<S> terms;
  terms.reserve(weights.rows() * weights.cols());
  for (std::size_t i = 0; i < weights.rows(); ++i)
    for (std::size_t j = 0; j < weights.cols(); ++j) {
      const S& r = residual.values(i, j);
      terms.push_back(r * r * weights(i, j));
    }
  return sum(std::span<const S>(terms));
}

struct HistogramBin {
  double bin_start = 0, bin_end = 0;
  std::size_t count = 0;
};

// Equal-width bins over [min, max]; the max value lands in the last bin, so
// counts always sum to the input length. Empty input gives an empty histogram.
inline std::vector<HistogramBin> distance_histogram(std::span<const double> values,
                                                    std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("distance_histogram: bins must be >= 1");
  if (values.empty()) return {};
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("distance_histogram: non-finite value");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].bin_start = lo + width * static_cast<double>(b);
    out[b].bin_end = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((v - lo) / width) : 0;
    if (b >= bins) b = bins - 1;
    ++out[b].count;
  }
  return out;
}

}  // namespace dias
