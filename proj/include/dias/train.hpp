#pragma once

// Training loop: neighbor-sampled batches, reverse-mode gradients of the
// combined objective, Adam updates with a 10%-per-epoch learning-rate decay,
// and a JSON-lines log with one record per epoch (record 0 is the untrained
// baseline). Deterministic given the seed.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dias/batch_sampler.hpp"
#include "dias/config.hpp"
#include "dias/eval.hpp"
#include "dias/gradcheck_suite.hpp"
#include "dias/objective.hpp"

namespace dias {

inline double lr_at_epoch(double lr0, double decay, std::size_t epoch) {
  return lr0 * std::pow(decay, static_cast<double>(epoch));
}

// One first/second moment pair per scalar parameter, updated in the fixed
// param_refs order.
class AdamOptimizer {
 public:
  AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<const ParamRef> params, const std::vector<std::vector<double>>& grads,
            double lr) {
    if (m_.empty()) {
      for (const auto& ref : params) {
        m_.emplace_back(ref.values.size(), 0.0);
        v_.emplace_back(ref.values.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t s = 0; s < params.size(); ++s) {
      for (std::size_t k = 0; k < params[s].values.size(); ++k) {
        const double g = grads[s][k];
        m_[s][k] = beta1_ * m_[s][k] + (1.0 - beta1_) * g;
        v_[s][k] = beta2_ * v_[s][k] + (1.0 - beta2_) * g * g;
        params[s].values[k] -= lr * (m_[s][k] / c1) / (std::sqrt(v_[s][k] / c2) + eps_);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0;
  double loss_total = 0, loss_loc = 0, loss_dim = 0, loss_inter = 0, loss_intra = 0;
  double mask_density_inter = 0, mask_density_intra = 0;
  double val_rsum = 0;
};

inline nlohmann::ordered_json epoch_record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["loss_total"] = r.loss_total;
  j["loss_loc"] = r.loss_loc;
  j["loss_dim"] = r.loss_dim;
  j["loss_inter"] = r.loss_inter;
  j["loss_intra"] = r.loss_intra;
  j["mask_density_inter"] = r.mask_density_inter;
  j["mask_density_intra"] = r.mask_density_intra;
  j["val_rsum"] = r.val_rsum;
  return j;
}

struct TrainState {
  ModelParams params;
  AdamOptimizer optimizer;
  std::size_t epoch = 0;       // completed epochs
  double learning_rate = 0;    // rate for the next epoch: lr0 * decay^epoch
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> records;  // epoch 0 baseline + one per trained epoch
};

namespace detail {

inline void check_finite(const LossBreakdown& loss) {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(loss.loc)) throw std::runtime_error("train: non-finite triplet term");
  if (bad(loss.dim)) throw std::runtime_error("train: non-finite dimension-alignment term");
  if (bad(loss.inter)) throw std::runtime_error("train: non-finite inter-modality term");
  if (bad(loss.intra)) throw std::runtime_error("train: non-finite intra-modality term");
  if (bad(loss.total)) throw std::runtime_error("train: non-finite total loss");
}

// Image-only globals (projection + pooling, no cross-attention) used for
// clustering and batch composition.
inline Mat<double> image_globals(const Corpus& corpus, std::size_t count,
                                 const ModelParams& params) {
  Mat<double> out(count, params.projection.weight_image.cols());
  for (std::size_t i = 0; i < count; ++i) {
    auto locals = project(corpus.instances[i].image, params.projection, Modality::kImage);
    auto pooled = pool_rows(locals.vectors);
    for (std::size_t j = 0; j < pooled.size(); ++j) out(i, j) = pooled[j];
  }
  return out;
}

inline BatchData make_batch(const Corpus& corpus, std::span<const std::size_t> image_ids,
                            std::mt19937_64& text_rng) {
  BatchData batch;
  for (std::size_t idx : image_ids) {
    const auto& inst = corpus.instances[idx];
    batch.image_raw.push_back(inst.image);
    batch.text_raw.push_back(inst.texts[text_rng() % inst.texts.size()]);
  }
  return batch;
}

}  // namespace detail

inline TrainResult train(const Corpus& corpus, const Config& cfg, std::ostream* log = nullptr) {
  const std::size_t n_total = corpus.instances.size();
  const auto n_val = static_cast<std::size_t>(std::floor(
      cfg.val_fraction * static_cast<double>(n_total)));
  const std::size_t n_train = n_total - n_val;
  const std::size_t batch_n = cfg.clusters_m * cfg.per_cluster_p;
  if (n_train < batch_n)
    throw std::invalid_argument("train: training split smaller than one batch (" +
                                std::to_string(n_train) + " < " + std::to_string(batch_n) + ")");
  const std::size_t batches_per_epoch = n_train / batch_n;
  const ObjectiveConfig obj = cfg.objective();

  TrainResult result;
  result.params = init_params(corpus.d_in_image, corpus.d_in_text, cfg.d,
                              mix_seed(cfg.seed, 0x01), cfg.beta_init);

  auto validate = [&]() {
    if (n_val == 0) return 0.0;
    return evaluate_range(corpus, n_train, n_total, result.params).rsum;
  };
  auto emit = [&](const EpochRecord& rec) {
    result.records.push_back(rec);
    if (log) *log << epoch_record_json(rec).dump() << "\n";
  };

  // Untrained baseline: probe losses on the first batch_n training images in
  // corpus order, validation recall before any update.
  {
    std::vector<std::size_t> probe_ids(batch_n);
    for (std::size_t i = 0; i < batch_n; ++i) probe_ids[i] = i;
    std::mt19937_64 probe_rng(mix_seed(cfg.seed, 0x02));
    BatchData probe = detail::make_batch(corpus, probe_ids, probe_rng);
    assign_negatives(probe, result.params, mix_seed(cfg.seed, 0x03), cfg.mining_clip);
    LossBreakdown loss = total_loss<double>(probe, result.params, obj, 0.0);
    detail::check_finite(loss);
    emit({0, lr_at_epoch(cfg.learning_rate, cfg.lr_decay, 0), loss.total, loss.loc, loss.dim,
          loss.inter, loss.intra, loss.mask_density_inter, loss.mask_density_intra, validate()});
  }

  AdamOptimizer adam;
  ad::Tape tape;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg.learning_rate, cfg.lr_decay, epoch);

    BatchSpec spec;
    spec.clusters_m = cfg.clusters_m;
    spec.per_cluster_p = cfg.per_cluster_p;
    spec.kmeans_k = cfg.kmeans_k;
    spec.kmeans_iters = cfg.kmeans_iters;
    spec.seed = mix_seed(cfg.seed, 0x10 + epoch);
    Mat<double> globals = detail::image_globals(corpus, n_train, result.params);
    auto batches = sample_batches(globals, batches_per_epoch, spec);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    std::mt19937_64 text_rng(mix_seed(cfg.seed, 0x1000 + epoch));
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchData batch = detail::make_batch(corpus, batches[b], text_rng);
      assign_negatives(batch, result.params, mix_seed(cfg.seed, (epoch << 16) ^ (0x20 + b)),
                       cfg.mining_clip);

      tape.clear();
      ModelParamsT<ad::Var> lifted = lift_params(tape, result.params);
      LossBreakdownT<ad::Var> loss = total_loss<ad::Var>(batch, lifted, obj, tape.constant(0.0));
      detail::check_finite({loss.total.value(), loss.loc.value(), loss.dim.value(),
                            loss.inter.value(), loss.intra.value(), loss.mask_density_inter,
                            loss.mask_density_intra});
      tape.backward(loss.total);
      auto grads = collect_grads(lifted);
      auto refs = param_refs(result.params);
      adam.step(std::span<const ParamRef>(refs), grads, lr);

      const double inv_b = 1.0 / static_cast<double>(batches.size());
      rec.loss_total += loss.total.value() * inv_b;
      rec.loss_loc += loss.loc.value() * inv_b;
      rec.loss_dim += loss.dim.value() * inv_b;
      rec.loss_inter += loss.inter.value() * inv_b;
      rec.loss_intra += loss.intra.value() * inv_b;
      rec.mask_density_inter += loss.mask_density_inter * inv_b;
      rec.mask_density_intra += loss.mask_density_intra * inv_b;
    }
    rec.val_rsum = validate();
    emit(rec);
  }
  return result;
}

// Model persistence: projection weights, biases and betas as full-precision
// JSON, written by `train` and consumed by the evaluation commands.
inline nlohmann::ordered_json model_to_json(const ModelParams& p) {
  auto mat = [](const Mat<double>& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
      rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return rows;
  };
  nlohmann::ordered_json j;
  j["format"] = "dias-model";
  j["version"] = 1;
  j["weight_image"] = mat(p.projection.weight_image);
  j["bias_image"] = p.projection.bias_image;
  j["weight_text"] = mat(p.projection.weight_text);
  j["bias_text"] = p.projection.bias_text;
  j["beta_inter_row"] = p.beta_inter_row;
  j["beta_inter_col"] = p.beta_inter_col;
  j["beta_intra_row"] = p.beta_intra_row;
  j["beta_intra_col"] = p.beta_intra_col;
  return j;
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != "dias-model")
    throw std::runtime_error("model file: missing dias-model format tag");
  auto mat = [](const nlohmann::json& rows) {
    const std::size_t r = rows.size(), c = r ? rows.at(0).size() : 0;
    Mat<double> m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < c; ++k) m(i, k) = rows.at(i).at(k).get<double>();
    return m;
  };
  ModelParams p;
  p.projection.weight_image = mat(j.at("weight_image"));
  p.projection.bias_image = j.at("bias_image").get<std::vector<double>>();
  p.projection.weight_text = mat(j.at("weight_text"));
  p.projection.bias_text = j.at("bias_text").get<std::vector<double>>();
  p.beta_inter_row = j.at("beta_inter_row").get<double>();
  p.beta_inter_col = j.at("beta_inter_col").get<double>();
  p.beta_intra_row = j.at("beta_intra_row").get<double>();
  p.beta_intra_col = j.at("beta_intra_col").get<double>();
  return p;
}

inline nlohmann::ordered_json eval_report_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  j["i2t_r1"] = rep.i2t_r1;
  j["i2t_r5"] = rep.i2t_r5;
  j["i2t_r10"] = rep.i2t_r10;
  j["t2i_r1"] = rep.t2i_r1;
  j["t2i_r5"] = rep.t2i_r5;
  j["t2i_r10"] = rep.t2i_r10;
  j["rsum"] = rep.rsum;
  j["fold_count"] = rep.fold_count;
  return j;
}

}  // namespace dias
