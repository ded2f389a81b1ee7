#pragma once

// Training objective: bidirectional triplet loss with distance-weighted
// hard-negative mining, and the combined loss
//   L = L_loc + w_dim * L_dim + w_inter * L_inter + w_intra * L_intra
// where the spatial terms are N^2-normalized and, during training, weighted
// by the smooth threshold relaxation. Negative mining is a sampling step done
// outside the differentiable graph; given the mined indices the whole
// objective is differentiable in the projection and beta parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dias/dim_align.hpp"
#include "dias/embedding.hpp"
#include "dias/interaction.hpp"
#include "dias/rng.hpp"
#include "dias/sparse_select.hpp"
#include "dias/spatial.hpp"

namespace dias {

struct LossWeights {
  double margin_alpha = 0.2;
  double w_dim = 10.0;
  double w_inter = 0.05;
  double w_intra = 0.1;
};

enum class Sparsifier { kNone, kSoftThreshold, kTopK, kL1 };

struct ObjectiveConfig {
  LossWeights weights;
  double temperature = 0.1;
  ThresholdSpace threshold_space = ThresholdSpace::kMagnitude;
  DimAlignVariant dim_variant = DimAlignVariant::kNormalized;
  DimBankMode dim_bank_mode = DimBankMode::kPairedInstance;
  std::size_t dim_resample_k = 4;
  std::uint64_t dim_resample_seed = 0;
  Sparsifier sparsifier = Sparsifier::kSoftThreshold;
  std::size_t topk_k = 8;
  double l1_lambda = 0.1;
  double mining_clip = 100.0;  // c_clip for distance-weighted sampling
  bool use_dim_align = true;
  bool use_inter = true;
  bool use_intra = true;
};

// Full model parameter set: the projection head plus the four learnable
// sparsity scalars (row/col sides of the inter and intra thresholds).
template <class S>
struct ModelParamsT {
  ProjectionParamsT<S> projection;
  S beta_inter_row{}, beta_inter_col{};
  S beta_intra_row{}, beta_intra_col{};
};
using ModelParams = ModelParamsT<double>;

inline ModelParamsT<ad::Var> lift_params(ad::Tape& tape, const ModelParams& p) {
  ModelParamsT<ad::Var> out;
  out.projection.weight_image = lift_leaves(tape, p.projection.weight_image);
  out.projection.bias_image = lift_leaves(tape, std::span<const double>(p.projection.bias_image));
  out.projection.weight_text = lift_leaves(tape, p.projection.weight_text);
  out.projection.bias_text = lift_leaves(tape, std::span<const double>(p.projection.bias_text));
  out.beta_inter_row = tape.leaf(p.beta_inter_row);
  out.beta_inter_col = tape.leaf(p.beta_inter_col);
  out.beta_intra_row = tape.leaf(p.beta_intra_row);
  out.beta_intra_col = tape.leaf(p.beta_intra_col);
  return out;
}

// A batch of matched pairs as plain data; negatives are indices into the
// batch, fixed before gradients are taken.
struct BatchData {
  std::vector<Mat<double>> image_raw;  // per pair: n_v x d_in_image
  std::vector<Mat<double>> text_raw;   // per pair: n_t x d_in_text
  std::vector<std::size_t> neg_text;   // hardest-negative text index per pair
  std::vector<std::size_t> neg_img;    // hardest-negative image index per pair

  std::size_t size() const { return image_raw.size(); }
};

// [alpha - s(V,T) + s(V,T-)]_+ + [alpha - s(V,T) + s(V-,T)]_+ with s = cosine.
template <class S>
S triplet_loss(std::span<const S> anchor_img, std::span<const S> pos_text,
               std::span<const S> neg_text, std::span<const S> neg_img, double alpha) {
  S pos = cosine(anchor_img, pos_text);
  S a = relu(alpha - pos + cosine(anchor_img, neg_text));
  S b = relu(alpha - pos + cosine(neg_img, pos_text));
  return a + b;
}

// Density of pairwise Euclidean distances between unit vectors in dimension
// d: q(dist) ~ dist^(d-2) * (1 - dist^2/4)^((d-3)/2).
inline double distance_density(double dist, std::size_t dim) {
  const double base = std::max(1.0 - dist * dist / 4.0, 0.0);
  const double expo = (static_cast<double>(dim) - 3.0) / 2.0;
  return std::pow(std::max(dist, 1e-12), static_cast<double>(dim) - 2.0) * std::pow(base, expo);
}

struct MinedNegatives {
  std::vector<std::size_t> neg_text;  // per image anchor
  std::vector<std::size_t> neg_img;   // per text anchor
};

// Distance-weighted sampling: candidates are drawn with probability
// proportional to min(c_clip, 1/q(dist)), never the anchor's own pair.
inline MinedNegatives mine_negatives(std::span<const GlobalEmbedding> images,
                                     std::span<const GlobalEmbedding> texts,
                                     std::uint64_t seed, double c_clip = 100.0) {
  const std::size_t n = images.size();
  if (n != texts.size()) throw std::invalid_argument("mine_negatives: list length mismatch");
  if (n < 2) throw std::invalid_argument("mine_negatives: need at least 2 pairs");

  std::mt19937_64 rng(seed);
  const std::size_t dim = images[0].vector.size();
  auto pick = [&](std::span<const double> anchor, auto candidate,
                  std::size_t skip) -> std::size_t {
    std::vector<double> weights;
    std::vector<std::size_t> ids;
    weights.reserve(n - 1);
    ids.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == skip) continue;
      std::span<const double> c = candidate(j);
      double sq = 0;
      for (std::size_t k = 0; k < dim; ++k) sq += (anchor[k] - c[k]) * (anchor[k] - c[k]);
      const double q = distance_density(std::sqrt(sq), dim);
      weights.push_back(q > 0 ? std::min(c_clip, 1.0 / q) : c_clip);
      ids.push_back(j);
    }
    return ids[sample_index(weights, rng)];
  };

  MinedNegatives out;
  for (std::size_t i = 0; i < n; ++i)
    out.neg_text.push_back(pick(images[i].vector,
                                [&](std::size_t j) { return std::span<const double>(texts[j].vector); }, i));
  for (std::size_t i = 0; i < n; ++i)
    out.neg_img.push_back(pick(texts[i].vector,
                               [&](std::size_t j) { return std::span<const double>(images[j].vector); }, i));
  return out;
}

template <class S>
struct LossBreakdownT {
  S total{}, loc{}, dim{}, inter{}, intra{};
  double mask_density_inter = 1.0, mask_density_intra = 1.0;
};
using LossBreakdown = LossBreakdownT<double>;

namespace detail {

// Spatial term with the configured sparsifier, already N^2-normalized.
template <class S>
S spatial_term(const SpatialResidualMatrixT<S>& residual, S beta_row, S beta_col,
               const ObjectiveConfig& cfg, double* density_out) {
  const std::size_t n = residual.values.rows();
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  switch (cfg.sparsifier) {
    case Sparsifier::kNone:
      *density_out = 1.0;
      return dense_loss(residual) * inv_n2;
    case Sparsifier::kSoftThreshold: {
      auto probs = conditional_probabilities(residual);
      auto thr = soft_thresholds(probs, beta_row, beta_col);
      Mat<S> soft = smooth_mask(residual, thr, cfg.temperature, cfg.threshold_space);
      *density_out = hard_mask(residual, thr, cfg.threshold_space).density();
      return weighted_loss(residual, soft) * inv_n2;
    }
    case Sparsifier::kTopK: {
      // Keep the k largest residuals per row; selection is constant per
      // evaluation, gradients flow through the kept entries only.
      Mat<double> vals = values_of(residual.values);
      Mat<double> keep(n, n, 0.0);
      std::size_t kept = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order(n);
        for (std::size_t j = 0; j < n; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (vals(i, a) != vals(i, b)) return vals(i, a) > vals(i, b);
          return a < b;
        });
        for (std::size_t r = 0; r < cfg.topk_k && r < n; ++r) {
          keep(i, order[r]) = 1.0;
          ++kept;
        }
      }
      *density_out = static_cast<double>(kept) * inv_n2;
      return dense_loss(residual, &keep) * inv_n2;
    }
    case Sparsifier::kL1: {
      *density_out = 1.0;
      std::vector<S> terms;
      terms.reserve(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) terms.push_back(residual.values(i, j));
      return (dense_loss(residual) + cfg.l1_lambda * sum(std::span<const S>(terms))) * inv_n2;
    }
  }
  throw std::logic_error("spatial_term: unknown sparsifier");
}

}  // namespace detail

// Forward pipeline shared by batch losses: project, matched-pair interaction,
// pooling. Exposes the intermediates the individual terms need.
template <class S>
struct BatchForward {
  std::vector<LocalEmbeddingSetT<S>> image_locals, text_locals;
  std::vector<GlobalEmbeddingT<S>> image_globals, text_globals;
};

template <class S>
BatchForward<S> batch_forward(const BatchData& batch, const ModelParamsT<S>& params) {
  BatchForward<S> fwd;
  const std::size_t n = batch.size();
  fwd.image_locals.reserve(n);
  fwd.text_locals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    fwd.image_locals.push_back(project(batch.image_raw[i], params.projection, Modality::kImage,
                                       static_cast<int>(i)));
    fwd.text_locals.push_back(project(batch.text_raw[i], params.projection, Modality::kText,
                                      static_cast<int>(i)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto img_att = aggregate_local(fwd.image_locals[i], fwd.text_locals[i]);
    auto txt_att = aggregate_local(fwd.text_locals[i], fwd.image_locals[i]);
    fwd.image_globals.push_back(pool(fwd.image_locals[i], img_att.updated_vectors));
    fwd.text_globals.push_back(pool(fwd.text_locals[i], txt_att.updated_vectors));
  }
  return fwd;
}

template <class S>
LossBreakdownT<S> total_loss(const BatchData& batch, const ModelParamsT<S>& params,
                             const ObjectiveConfig& cfg, S zero) {
  const std::size_t n = batch.size();
  if (n < 2) throw std::invalid_argument("total_loss: need at least 2 pairs");
  if (batch.neg_text.size() != n || batch.neg_img.size() != n)
    throw std::invalid_argument("total_loss: mined negatives missing");

  BatchForward<S> fwd = batch_forward(batch, params);

  LossBreakdownT<S> out;
  std::vector<S> trip;
  trip.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    trip.push_back(triplet_loss(std::span<const S>(fwd.image_globals[i].vector),
                                std::span<const S>(fwd.text_globals[i].vector),
                                std::span<const S>(fwd.text_globals[batch.neg_text[i]].vector),
                                std::span<const S>(fwd.image_globals[batch.neg_img[i]].vector),
                                cfg.weights.margin_alpha));
  out.loc = sum(std::span<const S>(trip)) / static_cast<double>(n);

  out.dim = zero;
  if (cfg.use_dim_align) {
    auto bank = build_dimension_bank(std::span<const LocalEmbeddingSetT<S>>(fwd.image_locals),
                                     std::span<const LocalEmbeddingSetT<S>>(fwd.text_locals),
                                     cfg.dim_bank_mode, cfg.dim_resample_k, cfg.dim_resample_seed);
    out.dim = dim_align_loss(correlation_matrix(bank), cfg.dim_variant);
  }

  out.inter = zero;
  out.intra = zero;
  if (cfg.use_inter) {
    auto x = inter_distance(std::span<const GlobalEmbeddingT<S>>(fwd.image_globals),
                            std::span<const GlobalEmbeddingT<S>>(fwd.text_globals));
    auto rx = inter_residual(x, zero);
    out.inter = detail::spatial_term(rx, params.beta_inter_row, params.beta_inter_col, cfg,
                                     &out.mask_density_inter);
  }
  if (cfg.use_intra) {
    Mat<S> y = intra_distance(std::span<const GlobalEmbeddingT<S>>(fwd.image_globals), zero);
    Mat<S> z = intra_distance(std::span<const GlobalEmbeddingT<S>>(fwd.text_globals), zero);
    auto ryz = intra_residual(y, z);
    out.intra = detail::spatial_term(ryz, params.beta_intra_row, params.beta_intra_col, cfg,
                                     &out.mask_density_intra);
  }

  out.total = out.loc + cfg.weights.w_dim * out.dim + cfg.weights.w_inter * out.inter +
              cfg.weights.w_intra * out.intra;
  return out;
}

// Individual objective terms, used by the gradient-verification suite and the
// gradcheck CLI. kInterMasked/kIntraMasked are the smooth-mask training forms.
enum class LossTerm {
  kTriplet,
  kDimNaive,
  kDimNormalized,
  kInterDense,
  kIntraDense,
  kInterMasked,
  kIntraMasked,
  kTotal,
};

inline const char* loss_term_name(LossTerm term) {
  switch (term) {
    case LossTerm::kTriplet: return "triplet";
    case LossTerm::kDimNaive: return "dim_align_naive";
    case LossTerm::kDimNormalized: return "dim_align_normalized";
    case LossTerm::kInterDense: return "inter_dense";
    case LossTerm::kIntraDense: return "intra_dense";
    case LossTerm::kInterMasked: return "inter_masked";
    case LossTerm::kIntraMasked: return "intra_masked";
    case LossTerm::kTotal: return "total";
  }
  return "unknown";
}

template <class S>
S term_loss(LossTerm term, const BatchData& batch, const ModelParamsT<S>& params,
            const ObjectiveConfig& cfg, S zero) {
  ObjectiveConfig local = cfg;
  switch (term) {
    case LossTerm::kTotal:
      return total_loss(batch, params, local, zero).total;
    case LossTerm::kTriplet: {
      local.use_dim_align = local.use_inter = local.use_intra = false;
      return total_loss(batch, params, local, zero).loc;
    }
    case LossTerm::kDimNaive:
    case LossTerm::kDimNormalized: {
      local.dim_variant =
          term == LossTerm::kDimNaive ? DimAlignVariant::kNaive : DimAlignVariant::kNormalized;
      local.use_inter = local.use_intra = false;
      return total_loss(batch, params, local, zero).dim;
    }
    case LossTerm::kInterDense:
    case LossTerm::kInterMasked: {
      local.sparsifier =
          term == LossTerm::kInterDense ? Sparsifier::kNone : Sparsifier::kSoftThreshold;
      local.use_dim_align = local.use_intra = false;
      return total_loss(batch, params, local, zero).inter;
    }
    case LossTerm::kIntraDense:
    case LossTerm::kIntraMasked: {
      local.sparsifier =
          term == LossTerm::kIntraDense ? Sparsifier::kNone : Sparsifier::kSoftThreshold;
      local.use_dim_align = local.use_inter = false;
      return total_loss(batch, params, local, zero).intra;
    }
  }
  throw std::logic_error("term_loss: unknown term");
}

}  // namespace dias
