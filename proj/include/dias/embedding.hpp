#pragma once

// Embedding data model and similarity primitives. Every downstream loss is
// built from the pieces here, so the conventions are pinned once:
//   - similarity sigma_l/sigma_g/sigma_c is cosine, distances are 1 - cosine
//   - denominators are stabilized as max(x, kSimEps), which keeps the exact
//     identities cosine(u,u) == 1 (for ‖u‖ >= eps) and 0 for zero vectors
//   - all arithmetic is double precision (or autodiff Vars wrapping doubles)

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dias/matrix.hpp"
#include "dias/scalar_ops.hpp"

namespace dias {

constexpr double kSimEps = 1e-8;

enum class Modality { kImage, kText };

template <class S>
struct LocalEmbeddingSetT {
  int instance_id = 0;
  Modality modality = Modality::kImage;
  Mat<S> vectors;  // count x d, rows unit-norm when produced by project()

  std::size_t count() const { return vectors.rows(); }
  std::size_t dim() const { return vectors.cols(); }
};
using LocalEmbeddingSet = LocalEmbeddingSetT<double>;

template <class S>
struct GlobalEmbeddingT {
  int instance_id = 0;
  Modality modality = Modality::kImage;
  std::vector<S> vector;
};
using GlobalEmbedding = GlobalEmbeddingT<double>;

// Learnable affine head per modality; stands in front of every DIAS
// computation since raw ingested features are encoder outputs.
template <class S>
struct ProjectionParamsT {
  Mat<S> weight_image;          // d_in_image x d
  std::vector<S> bias_image;    // d
  Mat<S> weight_text;           // d_in_text x d
  std::vector<S> bias_text;     // d
};
using ProjectionParams = ProjectionParamsT<double>;

template <class S>
S cosine(std::span<const S> u, std::span<const S> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: length mismatch " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  S nu = sqrt(dot(u, u));
  S nv = sqrt(dot(v, v));
  return dot(u, v) / (max(nu, kSimEps) * max(nv, kSimEps));
}

template <class S>
S cosine_distance(std::span<const S> u, std::span<const S> v) {
  return 1.0 - cosine(u, v);
}

// Reciprocal guarded row norms; lets similarity matrices reuse each row's
// norm instead of recomputing it per entry.
template <class S>
std::vector<S> inverse_norms(const Mat<S>& rows) {
  std::vector<S> inv;
  inv.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i)
    inv.push_back(1.0 / max(sqrt(dot(rows.row(i), rows.row(i))), kSimEps));
  return inv;
}

template <class S>
std::vector<S> l2_normalized(std::span<const S> u) {
  S inv = 1.0 / max(sqrt(dot(u, u)), kSimEps);
  std::vector<S> out;
  out.reserve(u.size());
  for (const S& x : u) out.push_back(x * inv);
  return out;
}

// Row-wise affine map of raw features followed by L2 normalization. raw stays
// plain data; only the parameters carry gradients.
template <class S>
Mat<S> affine_normalized(const Mat<double>& raw, const Mat<S>& weight, std::span<const S> bias) {
  if (raw.cols() != weight.rows())
    throw std::invalid_argument("project: raw has " + std::to_string(raw.cols()) +
                                " columns, weight expects " + std::to_string(weight.rows()));
  if (weight.cols() != bias.size())
    throw std::invalid_argument("project: weight/bias dimension mismatch");
  const Mat<S> wt = weight.transposed();  // d x d_in, columns become contiguous
  Mat<S> out(raw.rows(), weight.cols());
  std::vector<S> y(weight.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < weight.cols(); ++j)
      y[j] = dot(raw.row(i), wt.row(j)) + bias[j];
    std::span<const S> yv{y.data(), y.size()};
    S inv = 1.0 / max(sqrt(dot(yv, yv)), kSimEps);
    for (std::size_t j = 0; j < weight.cols(); ++j) out(i, j) = y[j] * inv;
  }
  return out;
}

template <class S>
LocalEmbeddingSetT<S> project(const Mat<double>& raw, const ProjectionParamsT<S>& params,
                              Modality modality, int instance_id = 0) {
  const bool image = modality == Modality::kImage;
  Mat<S> vectors = affine_normalized(raw, image ? params.weight_image : params.weight_text,
                                     std::span<const S>(image ? params.bias_image
                                                              : params.bias_text));
  return {instance_id, modality, std::move(vectors)};
}

}  // namespace dias
