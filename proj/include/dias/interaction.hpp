#pragma once

// Local embedding interaction and pooling into global embeddings.
//
// Similarities are clamped at zero before the weighted aggregate so the
// normalizer stays nonnegative; a query row whose weights all clamp to zero
// aggregates to the zero vector.

#include <span>
#include <stdexcept>
#include <vector>

#include "dias/embedding.hpp"

namespace dias {

template <class S>
struct AttentionRecordT {
  Modality source_modality = Modality::kImage;
  Mat<S> similarity;       // query.count x context.count, entries >= 0
  Mat<S> updated_vectors;  // query.count x d
};
using AttentionRecord = AttentionRecordT<double>;

// s_ij = max(0, cos(q_i, c_j)); q̂_i = sum_j s_ij c_j / max(sum_j s_ij, eps).
template <class S>
AttentionRecordT<S> aggregate_local(const LocalEmbeddingSetT<S>& query,
                                    const LocalEmbeddingSetT<S>& context) {
  if (query.dim() != context.dim())
    throw std::invalid_argument("aggregate_local: dimensionality mismatch");
  if (context.count() == 0)
    throw std::invalid_argument("aggregate_local: empty context");

  const std::size_t nq = query.count(), nc = context.count(), d = query.dim();
  AttentionRecordT<S> rec;
  rec.source_modality = query.modality;
  rec.similarity = Mat<S>(nq, nc);
  rec.updated_vectors = Mat<S>(nq, d);

  const Mat<S> ctx_t = context.vectors.transposed();  // d x nc
  const std::vector<S> inv_q = inverse_norms(query.vectors);
  const std::vector<S> inv_c = inverse_norms(context.vectors);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < nc; ++j)
      rec.similarity(i, j) =
          relu(dot(query.vectors.row(i), context.vectors.row(j)) * (inv_q[i] * inv_c[j]));
    S inv = 1.0 / max(sum(rec.similarity.row(i)), kSimEps);
    for (std::size_t k = 0; k < d; ++k)
      rec.updated_vectors(i, k) = dot(rec.similarity.row(i), ctx_t.row(k)) * inv;
  }
  return rec;
}

// Column-wise mean of the rows, then L2 normalization.
template <class S>
std::vector<S> pool_rows(const Mat<S>& updated) {
  if (updated.rows() == 0) throw std::invalid_argument("pool: no rows");
  const Mat<S> t = updated.transposed();
  std::vector<S> mean;
  mean.reserve(updated.cols());
  const double inv_n = 1.0 / static_cast<double>(updated.rows());
  for (std::size_t k = 0; k < updated.cols(); ++k) mean.push_back(sum(t.row(k)) * inv_n);
  return l2_normalized(std::span<const S>(mean));
}

template <class S>
GlobalEmbeddingT<S> pool(const LocalEmbeddingSetT<S>& set, const Mat<S>& updated) {
  return {set.instance_id, set.modality, pool_rows(updated)};
}

}  // namespace dias
