#pragma once

// Dimension information alignment: dimension-vector banks, the cross-modal
// correlation matrix, and the alignment regularizer.
//
// Image and text instances carry different local counts, so dimension vectors
// are paired per instance: by default each instance's locals are mean-pooled
// into one column per modality ("paired-instance"), optionally k locals are
// resampled per instance ("resample", k columns per instance). Correlation is
// Pearson (mean-centered cosine), making an identity correlation matrix
// achievable regardless of per-dimension offsets.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dias/embedding.hpp"

namespace dias {

enum class DimBankMode { kPairedInstance, kResample };
enum class DimAlignVariant { kNaive, kNormalized };

template <class S>
struct DimensionVectorBankT {
  Mat<S> image_dim_vectors;  // d x N_s
  Mat<S> text_dim_vectors;   // d x N_s
  std::size_t sample_count() const { return image_dim_vectors.cols(); }
};
using DimensionVectorBank = DimensionVectorBankT<double>;

template <class S>
struct CorrelationMatrixT {
  Mat<S> values;  // d x d, entries in [-1, 1]
  std::vector<std::size_t> zero_variance_image_rows;
  std::vector<std::size_t> zero_variance_text_rows;
};
using CorrelationMatrix = CorrelationMatrixT<double>;

template <class S>
std::vector<S> mean_of_rows(const Mat<S>& m) {
  const Mat<S> t = m.transposed();
  std::vector<S> mean;
  mean.reserve(m.cols());
  const double inv = 1.0 / static_cast<double>(m.rows());
  for (std::size_t k = 0; k < m.cols(); ++k) mean.push_back(sum(t.row(k)) * inv);
  return mean;
}

// Paired dimension banks from index-aligned image/text instances. seed only
// matters in resample mode.
template <class S>
DimensionVectorBankT<S> build_dimension_bank(std::span<const LocalEmbeddingSetT<S>> images,
                                             std::span<const LocalEmbeddingSetT<S>> texts,
                                             DimBankMode mode = DimBankMode::kPairedInstance,
                                             std::size_t resample_k = 4,
                                             std::uint64_t seed = 0) {
  if (images.size() != texts.size())
    throw std::invalid_argument("build_dimension_bank: pair lists differ in length");
  if (images.size() < 2)
    throw std::invalid_argument("build_dimension_bank: need at least 2 pairs");

  const std::size_t n = images.size(), d = images[0].dim();
  DimensionVectorBankT<S> bank;
  if (mode == DimBankMode::kPairedInstance) {
    bank.image_dim_vectors = Mat<S>(d, n);
    bank.text_dim_vectors = Mat<S>(d, n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<S> iv = mean_of_rows(images[i].vectors);
      std::vector<S> tv = mean_of_rows(texts[i].vectors);
      for (std::size_t k = 0; k < d; ++k) {
        bank.image_dim_vectors(k, i) = iv[k];
        bank.text_dim_vectors(k, i) = tv[k];
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    bank.image_dim_vectors = Mat<S>(d, n * resample_k);
    bank.text_dim_vectors = Mat<S>(d, n * resample_k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < resample_k; ++s) {
        const std::size_t ri = rng() % images[i].count();
        const std::size_t rt = rng() % texts[i].count();
        for (std::size_t k = 0; k < d; ++k) {
          bank.image_dim_vectors(k, i * resample_k + s) = images[i].vectors(ri, k);
          bank.text_dim_vectors(k, i * resample_k + s) = texts[i].vectors(rt, k);
        }
      }
    }
  }
  return bank;
}

// c_ij = Pearson correlation of image dimension row i with text dimension row
// j across the paired samples. Zero-variance rows produce c = 0 via the eps
// guard and are flagged.
template <class S>
CorrelationMatrixT<S> correlation_matrix(const DimensionVectorBankT<S>& bank) {
  const std::size_t d = bank.image_dim_vectors.rows(), n = bank.sample_count();
  if (n < 2) throw std::invalid_argument("correlation_matrix: need N_s >= 2");

  auto centered = [&](const Mat<S>& rows, std::vector<std::size_t>& flagged) {
    Mat<S> c(rows.rows(), n);
    std::vector<S> inv_norms;
    inv_norms.reserve(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      S mu = sum(rows.row(i)) / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) c(i, k) = rows(i, k) - mu;
      S nrm = sqrt(dot(c.row(i), c.row(i)));
      if (value_of(nrm) == 0.0) flagged.push_back(i);
      inv_norms.push_back(1.0 / max(nrm, kSimEps));
    }
    return std::pair{std::move(c), std::move(inv_norms)};
  };

  CorrelationMatrixT<S> out;
  auto [ci, ni] = centered(bank.image_dim_vectors, out.zero_variance_image_rows);
  auto [ct, nt] = centered(bank.text_dim_vectors, out.zero_variance_text_rows);
  out.values = Mat<S>(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.values(i, j) = dot(ci.row(i), ct.row(j)) * (ni[i] * nt[j]);
  return out;
}

// naive:      -sum_i c_ii + sum_{i != j} c_ij
// normalized: sum_i -( |c_ii| / sum_j |c_ij|  +  |c_ii| / sum_j |c_ji| )
// The normalized denominators use |.| and a max(., eps) guard; ratios are
// scale invariant and the loss attains its -2d lower bound exactly at C = I.
template <class S>
S dim_align_loss(const CorrelationMatrixT<S>& corr,
                 DimAlignVariant variant = DimAlignVariant::kNormalized) {
  const Mat<S>& c = corr.values;
  const std::size_t d = c.rows();
  if (d == 0 || c.cols() != d) throw std::invalid_argument("dim_align_loss: square matrix required");

  if (variant == DimAlignVariant::kNaive) {
    std::vector<S> terms;
    terms.reserve(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) terms.push_back(i == j ? -c(i, j) : c(i, j));
    return sum(std::span<const S>(terms));
  }

  Mat<S> a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = abs(c(i, j));
  const Mat<S> at = a.transposed();
  std::vector<S> terms;
  terms.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    S row = max(sum(a.row(i)), kSimEps);
    S col = max(sum(at.row(i)), kSimEps);
    terms.push_back(-(a(i, i) / row + a(i, i) / col));
  }
  return sum(std::span<const S>(terms));
}

}  // namespace dias
