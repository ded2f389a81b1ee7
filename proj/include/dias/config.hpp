#pragma once

// Runtime configuration: every tunable lives here with its documented
// default and maps one-to-one onto a flat JSON object.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dias/objective.hpp"
#include "dias/synth.hpp"

namespace dias {

struct Config {
  // shared embedding space
  std::size_t d = 32;

  // objective
  double margin_alpha = 0.2;
  double w_dim = 10.0;
  double w_inter = 0.05;
  double w_intra = 0.1;
  double temperature = 0.1;
  std::string threshold_space = "magnitude";   // or "probability"
  std::string dim_variant = "normalized";      // or "naive"
  std::string dim_bank_mode = "paired-instance";  // or "resample"
  std::size_t dim_resample_k = 4;
  std::string sparsifier = "soft-threshold";   // "topk", "l1", "none"
  std::size_t topk_k = 8;
  double l1_lambda = 0.1;
  double mining_clip = 100.0;
  bool use_dim_align = true;
  bool use_inter = true;
  bool use_intra = true;

  // optimization
  double beta_init = 1.0;
  std::size_t epochs = 30;
  double learning_rate = 5e-4;
  double lr_decay = 0.9;  // per-epoch multiplier (10% decay)
  std::size_t clusters_m = 16;
  std::size_t per_cluster_p = 8;
  std::size_t kmeans_k = 64;
  std::size_t kmeans_iters = 20;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  // synthetic corpus generation
  SynthSpec synth;

  // diagnostics
  std::size_t histogram_bins = 50;

  ObjectiveConfig objective() const {
    ObjectiveConfig cfg;
    cfg.weights = {margin_alpha, w_dim, w_inter, w_intra};
    cfg.temperature = temperature;
    if (threshold_space == "magnitude") {
      cfg.threshold_space = ThresholdSpace::kMagnitude;
    } else if (threshold_space == "probability") {
      cfg.threshold_space = ThresholdSpace::kProbability;
    } else {
      throw std::invalid_argument("config: unknown threshold_space '" + threshold_space + "'");
    }
    if (dim_variant == "normalized") {
      cfg.dim_variant = DimAlignVariant::kNormalized;
    } else if (dim_variant == "naive") {
      cfg.dim_variant = DimAlignVariant::kNaive;
    } else {
      throw std::invalid_argument("config: unknown dim_variant '" + dim_variant + "'");
    }
    if (dim_bank_mode == "paired-instance") {
      cfg.dim_bank_mode = DimBankMode::kPairedInstance;
    } else if (dim_bank_mode == "resample") {
      cfg.dim_bank_mode = DimBankMode::kResample;
    } else {
      throw std::invalid_argument("config: unknown dim_bank_mode '" + dim_bank_mode + "'");
    }
    cfg.dim_resample_k = dim_resample_k;
    cfg.dim_resample_seed = mix_seed(seed, 0x5d);
    if (sparsifier == "soft-threshold") {
      cfg.sparsifier = Sparsifier::kSoftThreshold;
    } else if (sparsifier == "topk") {
      cfg.sparsifier = Sparsifier::kTopK;
    } else if (sparsifier == "l1") {
      cfg.sparsifier = Sparsifier::kL1;
    } else if (sparsifier == "none") {
      cfg.sparsifier = Sparsifier::kNone;
    } else {
      throw std::invalid_argument("config: unknown sparsifier '" + sparsifier + "'");
    }
    cfg.topk_k = topk_k;
    cfg.l1_lambda = l1_lambda;
    cfg.mining_clip = mining_clip;
    cfg.use_dim_align = use_dim_align;
    cfg.use_inter = use_inter;
    cfg.use_intra = use_intra;
    return cfg;
  }

  void merge_json(const nlohmann::json& j) {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("d", d);
    get("margin_alpha", margin_alpha);
    get("w_dim", w_dim);
    get("w_inter", w_inter);
    get("w_intra", w_intra);
    get("temperature", temperature);
    get("threshold_space", threshold_space);
    get("dim_variant", dim_variant);
    get("dim_bank_mode", dim_bank_mode);
    get("dim_resample_k", dim_resample_k);
    get("sparsifier", sparsifier);
    get("topk_k", topk_k);
    get("l1_lambda", l1_lambda);
    get("mining_clip", mining_clip);
    get("use_dim_align", use_dim_align);
    get("use_inter", use_inter);
    get("use_intra", use_intra);
    get("beta_init", beta_init);
    get("epochs", epochs);
    get("learning_rate", learning_rate);
    get("lr_decay", lr_decay);
    get("clusters_m", clusters_m);
    get("per_cluster_p", per_cluster_p);
    get("kmeans_k", kmeans_k);
    get("kmeans_iters", kmeans_iters);
    get("val_fraction", val_fraction);
    get("seed", seed);
    get("histogram_bins", histogram_bins);
    get("synth_num_pairs", synth.num_pairs);
    get("synth_latent_dim", synth.latent_dim);
    get("synth_d_image", synth.d_image);
    get("synth_d_text", synth.d_text);
    get("synth_regions_min", synth.regions_min);
    get("synth_regions_max", synth.regions_max);
    get("synth_words_min", synth.words_min);
    get("synth_words_max", synth.words_max);
    get("synth_noise_sigma", synth.noise_sigma);
    (void)objective();  // validate enum strings eagerly
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    Config cfg;
    cfg.merge_json(j);
    return cfg;
  }
};

}  // namespace dias
