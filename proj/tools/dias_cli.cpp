// Command-line surface: synthetic corpus generation, training, retrieval
// evaluation, gradient verification, and the mask/histogram diagnostics.
// Every command is deterministic given --seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dias/config.hpp"
#include "dias/eval.hpp"
#include "dias/gradcheck_suite.hpp"
#include "dias/synth.hpp"
#include "dias/train.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed = -1;  // -1: keep the config value
};

dias::Config load_config(const GlobalArgs& g) {
  dias::Config cfg;
  if (!g.config_path.empty()) cfg = dias::Config::load(g.config_path);
  if (g.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(g.seed);
    cfg.synth.seed = cfg.seed;
  }
  return cfg;
}

std::string out_path(const GlobalArgs& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return (std::filesystem::path(g.out_dir) / name).string();
}

dias::ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  nlohmann::json j;
  in >> j;
  return dias::model_from_json(j);
}

// Distances used by the histogram and mask commands: inter-modality X plus
// intra-modality Y/Z over the first `limit` corpus instances.
struct DistanceSnapshot {
  dias::InterModalDistanceMatrixT<double> x;
  dias::Mat<double> y, z;
};

DistanceSnapshot distance_snapshot(const dias::Corpus& corpus, const dias::ModelParams& params,
                                   std::size_t limit) {
  const std::size_t n = std::min(limit, corpus.instances.size());
  std::vector<dias::GlobalEmbedding> imgs, txts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = corpus.instances[i];
    auto img_locals = dias::project(inst.image, params.projection, dias::Modality::kImage);
    auto txt_locals = dias::project(inst.texts[0], params.projection, dias::Modality::kText);
    auto img_att = dias::aggregate_local(img_locals, txt_locals);
    auto txt_att = dias::aggregate_local(txt_locals, img_locals);
    imgs.push_back(dias::pool(img_locals, img_att.updated_vectors));
    txts.push_back(dias::pool(txt_locals, txt_att.updated_vectors));
  }
  DistanceSnapshot snap;
  snap.x = dias::inter_distance(std::span<const dias::GlobalEmbedding>(imgs),
                                std::span<const dias::GlobalEmbedding>(txts));
  snap.y = dias::intra_distance(std::span<const dias::GlobalEmbedding>(imgs), 0.0);
  snap.z = dias::intra_distance(std::span<const dias::GlobalEmbedding>(txts), 0.0);
  return snap;
}

int run_train(const GlobalArgs& g, const std::string& corpus_path) {
  dias::Config cfg = load_config(g);
  dias::Corpus corpus = dias::read_corpus(corpus_path + ".blob", corpus_path + ".json");

  std::ofstream log(out_path(g, "train_log.jsonl"));
  auto result = dias::train(corpus, cfg, &log);
  std::ofstream model(out_path(g, "model.json"));
  model << dias::model_to_json(result.params).dump(2) << "\n";
  std::cout << "trained " << cfg.epochs << " epochs; final val_rsum "
            << result.records.back().val_rsum << "\n";
  return 0;
}

int run_eval(const GlobalArgs& g, const std::string& corpus_path, const std::string& model_path,
             bool five_fold) {
  dias::Corpus corpus = dias::read_corpus(corpus_path + ".blob", corpus_path + ".json");
  dias::ModelParams params = load_model(model_path);
  dias::EvalReport rep = five_fold
                             ? dias::five_fold_eval(corpus, params)
                             : dias::evaluate_range(corpus, 0, corpus.instances.size(), params);
  const std::string path = out_path(g, "eval.json");
  std::ofstream out(path);
  out << dias::eval_report_json(rep).dump(2) << "\n";
  std::cout << dias::eval_report_json(rep).dump(2) << "\n";
  return 0;
}

int run_gradcheck(const GlobalArgs& g) {
  dias::Config cfg = load_config(g);
  const dias::ObjectiveConfig obj = cfg.objective();
  bool all_passed = true;
  for (std::size_t n : {2, 4, 6}) {
    for (std::size_t d : {4, 8}) {
      dias::BatchData batch =
          dias::random_batch(n, d + 2, d + 1, dias::mix_seed(cfg.seed, 0xabc0 + n * 16 + d));
      dias::ModelParams params = dias::init_params(
          d + 2, d + 1, d, dias::mix_seed(cfg.seed, 0xdef0 + n * 16 + d), cfg.beta_init);
      dias::assign_negatives(batch, params, dias::mix_seed(cfg.seed, 0x1230 + n * 16 + d));
      for (dias::LossTerm term :
           {dias::LossTerm::kTriplet, dias::LossTerm::kDimNaive, dias::LossTerm::kDimNormalized,
            dias::LossTerm::kInterDense, dias::LossTerm::kIntraDense,
            dias::LossTerm::kInterMasked, dias::LossTerm::kIntraMasked, dias::LossTerm::kTotal}) {
        auto reports = dias::check_term_gradients(term, batch, params, obj);
        double worst = 0;
        bool ok = true;
        for (const auto& r : reports) {
          worst = std::max(worst, r.max_rel_error);
          ok = ok && r.passed;
        }
        all_passed = all_passed && ok;
        std::cout << (ok ? "pass" : "FAIL") << " N=" << n << " d=" << d << " "
                  << dias::loss_term_name(term) << " max_rel_error " << worst << "\n";
      }
    }
  }
  return all_passed ? 0 : 1;
}

int run_histogram(const GlobalArgs& g, const std::string& corpus_path,
                  const std::string& model_path, const std::string& kind, std::size_t limit) {
  dias::Config cfg = load_config(g);
  dias::Corpus corpus = dias::read_corpus(corpus_path + ".blob", corpus_path + ".json");
  dias::ModelParams params =
      model_path.empty()
          ? dias::init_params(corpus.d_in_image, corpus.d_in_text, cfg.d,
                              dias::mix_seed(cfg.seed, 0x01), cfg.beta_init)
          : load_model(model_path);
  DistanceSnapshot snap = distance_snapshot(corpus, params, limit);

  std::vector<double> values;
  auto add = [&](const dias::Mat<double>& m, bool off_diagonal_only) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (!off_diagonal_only || i != j) values.push_back(m(i, j));
  };
  if (kind == "inter") {
    add(snap.x.values, false);
  } else if (kind == "intra-image") {
    add(snap.y, true);
  } else if (kind == "intra-text") {
    add(snap.z, true);
  } else {
    throw CLI::ValidationError("--kind must be inter, intra-image, or intra-text");
  }

  auto bins = dias::distance_histogram(values, cfg.histogram_bins);
  std::ofstream out(out_path(g, "histogram.csv"));
  out << "bin_start,bin_end,count\n";
  std::cout << "bin_start,bin_end,count\n";
  for (const auto& b : bins) {
    nlohmann::ordered_json row = {b.bin_start, b.bin_end, b.count};
    std::string line = row[0].dump() + "," + row[1].dump() + "," + row[2].dump();
    out << line << "\n";
    std::cout << line << "\n";
  }
  return 0;
}

int run_inspect_mask(const GlobalArgs& g, const std::string& corpus_path,
                     const std::string& model_path, const std::string& kind, std::size_t limit) {
  dias::Config cfg = load_config(g);
  dias::Corpus corpus = dias::read_corpus(corpus_path + ".blob", corpus_path + ".json");
  dias::ModelParams params =
      model_path.empty()
          ? dias::init_params(corpus.d_in_image, corpus.d_in_text, cfg.d,
                              dias::mix_seed(cfg.seed, 0x01), cfg.beta_init)
          : load_model(model_path);
  DistanceSnapshot snap = distance_snapshot(corpus, params, limit);

  dias::SpatialResidualMatrixT<double> residual =
      kind == "intra" ? dias::intra_residual(snap.y, snap.z)
                      : dias::inter_residual(snap.x, 0.0);
  const bool intra = kind == "intra";
  const double beta_row = intra ? params.beta_intra_row : params.beta_inter_row;
  const double beta_col = intra ? params.beta_intra_col : params.beta_inter_col;
  auto thresholds =
      dias::soft_thresholds(dias::conditional_probabilities(residual), beta_row, beta_col);
  auto mask = dias::hard_mask(residual, thresholds, cfg.objective().threshold_space);

  std::ofstream out(out_path(g, "mask.csv"));
  auto emit = [&](std::ostream& os) {
    os << "i,j,residual,threshold_row,threshold_col,selected\n";
    for (std::size_t i = 0; i < residual.values.rows(); ++i)
      for (std::size_t j = 0; j < residual.values.cols(); ++j) {
        nlohmann::ordered_json row = {residual.values(i, j), thresholds.row_thresholds[i],
                                      thresholds.col_thresholds[j]};
        os << i << "," << j << "," << row[0].dump() << "," << row[1].dump() << ","
           << row[2].dump() << "," << static_cast<int>(mask.values(i, j)) << "\n";
      }
  };
  emit(out);
  std::cout << "mask density " << mask.density() << " (" << mask.selected_count << " of "
            << residual.values.rows() * residual.values.cols() << "), csv at "
            << out_path(g, "mask.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dimension-aligned sparse-spatial image-text matching"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--out", g.out_dir, "output directory");

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic paired corpus");
  std::size_t gen_pairs = 0;
  double gen_noise = -1;
  std::size_t gen_latent = 0, gen_d_image = 0, gen_d_text = 0;
  gen->add_option("--pairs", gen_pairs, "number of image-text pairs");
  gen->add_option("--latent-dim", gen_latent, "shared latent dimensionality");
  gen->add_option("--d-image", gen_d_image, "raw image feature dimensionality");
  gen->add_option("--d-text", gen_d_text, "raw text feature dimensionality");
  gen->add_option("--noise", gen_noise, "noise sigma");

  std::string corpus_path = "corpus";
  std::string model_path;
  auto* train_cmd = app.add_subcommand("train", "train on a corpus");
  train_cmd->add_option("--corpus", corpus_path, "corpus path prefix (.blob/.json)");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate retrieval recall");
  bool five_fold = false;
  eval_cmd->add_option("--corpus", corpus_path, "corpus path prefix");
  eval_cmd->add_option("--model", model_path, "model JSON from train")->required();
  eval_cmd->add_flag("--five-fold", five_fold, "average over 5 contiguous folds");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  (void)grad_cmd;

  auto* hist_cmd = app.add_subcommand("histogram", "distance histogram CSV");
  std::string kind = "inter";
  std::size_t limit = 200;
  hist_cmd->add_option("--corpus", corpus_path, "corpus path prefix");
  hist_cmd->add_option("--model", model_path, "model JSON (default: seeded init)");
  hist_cmd->add_option("--kind", kind, "inter | intra-image | intra-text");
  hist_cmd->add_option("--limit", limit, "instances to include");

  auto* mask_cmd = app.add_subcommand("inspect-mask", "hard selection mask CSV");
  std::string mask_kind = "inter";
  mask_cmd->add_option("--corpus", corpus_path, "corpus path prefix");
  mask_cmd->add_option("--model", model_path, "model JSON (default: seeded init)");
  mask_cmd->add_option("--kind", mask_kind, "inter | intra");
  mask_cmd->add_option("--limit", limit, "instances to include");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      dias::Config cfg = load_config(g);
      if (gen_pairs) cfg.synth.num_pairs = gen_pairs;
      if (gen_latent) cfg.synth.latent_dim = gen_latent;
      if (gen_d_image) cfg.synth.d_image = gen_d_image;
      if (gen_d_text) cfg.synth.d_text = gen_d_text;
      if (gen_noise >= 0) cfg.synth.noise_sigma = gen_noise;
      auto result = dias::gen_synth(cfg.synth);
      dias::write_corpus(result.corpus, out_path(g, "corpus.blob"), out_path(g, "corpus.json"));
      std::cout << "wrote " << result.corpus.instances.size() << " pairs under " << g.out_dir
                << "\n";
      return 0;
    }
    if (train_cmd->parsed()) return run_train(g, corpus_path);
    if (eval_cmd->parsed()) return run_eval(g, corpus_path, model_path, five_fold);
    if (grad_cmd->parsed()) return run_gradcheck(g);
    if (hist_cmd->parsed()) return run_histogram(g, corpus_path, model_path, kind, limit);
    if (mask_cmd->parsed()) return run_inspect_mask(g, corpus_path, model_path, mask_kind, limit);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
