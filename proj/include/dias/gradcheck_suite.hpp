#pragma once

// Gradient verification wired to the model: central finite differences probe
// the plain-double loss while the analytic side comes from a reverse sweep of
// the autodiff tape over the identical forward computation.

#include <cstdint>
#include <span>
#include <vector>

#include "dias/grad_check.hpp"
#include "dias/objective.hpp"
#include "dias/rng.hpp"

namespace dias {

inline std::vector<ParamRef> param_refs(ModelParams& p) {
  return {
      {"weight_image", p.projection.weight_image.flat()},
      {"bias_image", std::span<double>(p.projection.bias_image)},
      {"weight_text", p.projection.weight_text.flat()},
      {"bias_text", std::span<double>(p.projection.bias_text)},
      {"beta_inter_row", std::span<double>(&p.beta_inter_row, 1)},
      {"beta_inter_col", std::span<double>(&p.beta_inter_col, 1)},
      {"beta_intra_row", std::span<double>(&p.beta_intra_row, 1)},
      {"beta_intra_col", std::span<double>(&p.beta_intra_col, 1)},
  };
}

// Gradients in param_refs slot order, read back from the lifted leaves.
inline std::vector<std::vector<double>> collect_grads(const ModelParamsT<ad::Var>& lifted) {
  auto of_mat = [](const Mat<ad::Var>& m) {
    std::vector<double> g;
    g.reserve(m.rows() * m.cols());
    for (const ad::Var& v : m.flat()) g.push_back(v.grad());
    return g;
  };
  auto of_vec = [](const std::vector<ad::Var>& xs) {
    std::vector<double> g;
    g.reserve(xs.size());
    for (const ad::Var& v : xs) g.push_back(v.grad());
    return g;
  };
  return {of_mat(lifted.projection.weight_image), of_vec(lifted.projection.bias_image),
          of_mat(lifted.projection.weight_text),  of_vec(lifted.projection.bias_text),
          {lifted.beta_inter_row.grad()},         {lifted.beta_inter_col.grad()},
          {lifted.beta_intra_row.grad()},         {lifted.beta_intra_col.grad()}};
}

// Verifies one objective term: analytic tape gradients for every trainable
// scalar against central finite differences through the double-valued path.
inline std::vector<GradCheckReport> check_term_gradients(LossTerm term, const BatchData& batch,
                                                         ModelParams params,
                                                         const ObjectiveConfig& cfg,
                                                         double step = 1e-5,
                                                         double tolerance = 1e-4) {
  auto refs = param_refs(params);
  auto loss = [&] { return term_loss<double>(term, batch, params, cfg, 0.0); };
  auto analytic = [&] {
    ad::Tape tape;
    ModelParamsT<ad::Var> lifted = lift_params(tape, params);
    ad::Var out = term_loss<ad::Var>(term, batch, lifted, cfg, tape.constant(0.0));
    tape.backward(out);
    return collect_grads(lifted);
  };
  return grad_check(loss, analytic, std::span<const ParamRef>(refs), step, tolerance);
}

// Random Gaussian parameter initialization, scaled so projected rows start
// well spread (weights ~ N(0, 1/sqrt(d_in))).
inline ModelParams init_params(std::size_t d_in_image, std::size_t d_in_text, std::size_t d,
                               std::uint64_t seed, double beta_init = 1.0) {
  std::mt19937_64 rng(seed);
  ModelParams p;
  auto fill = [&](Mat<double>& m, std::size_t r, std::size_t c) {
    m = Mat<double>(r, c);
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = gaussian(rng) * scale;
  };
  fill(p.projection.weight_image, d_in_image, d);
  fill(p.projection.weight_text, d_in_text, d);
  p.projection.bias_image.assign(d, 0.0);
  p.projection.bias_text.assign(d, 0.0);
  p.beta_inter_row = p.beta_inter_col = beta_init;
  p.beta_intra_row = p.beta_intra_col = beta_init;
  return p;
}

// Random matched-pair batch for gradient suites; local counts vary per
// instance and negatives are mined from the initial embeddings.
inline BatchData random_batch(std::size_t n, std::size_t d_in_image, std::size_t d_in_text,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BatchData batch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t nv = 2 + rng() % 3, nt = 2 + rng() % 4;
    Mat<double> img(nv, d_in_image), txt(nt, d_in_text);
    for (double& x : img.flat()) x = gaussian(rng);
    for (double& x : txt.flat()) x = gaussian(rng);
    batch.image_raw.push_back(std::move(img));
    batch.text_raw.push_back(std::move(txt));
  }
  return batch;
}

// Computes the batch globals under params and mines negatives into the batch.
inline void assign_negatives(BatchData& batch, const ModelParams& params, std::uint64_t seed,
                             double c_clip = 100.0) {
  BatchForward<double> fwd = batch_forward(batch, params);
  MinedNegatives mined = mine_negatives(std::span<const GlobalEmbedding>(fwd.image_globals),
                                        std::span<const GlobalEmbedding>(fwd.text_globals),
                                        seed, c_clip);
  batch.neg_text = std::move(mined.neg_text);
  batch.neg_img = std::move(mined.neg_img);
}

}  // namespace dias
