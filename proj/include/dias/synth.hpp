#pragma once

// Synthetic paired-embedding corpora: every pair shares a latent vector that
// two fixed random linear maps encode into per-region image locals and
// per-word text locals (5 texts per image), plus isotropic Gaussian noise.
// Deterministic byte-for-byte given the seed.

#include <cstdint>
#include <stdexcept>

#include "dias/corpus_io.hpp"
#include "dias/rng.hpp"

namespace dias {

struct SynthSpec {
  std::size_t num_pairs = 1000;
  std::size_t latent_dim = 16;
  std::size_t d_image = 32;
  std::size_t d_text = 32;
  std::size_t regions_min = 4, regions_max = 8;
  std::size_t words_min = 6, words_max = 12;
  std::size_t texts_per_image = 5;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Corpus corpus;
  Mat<double> map_image;  // d_image x latent_dim
  Mat<double> map_text;   // d_text x latent_dim
  Mat<double> latents;    // num_pairs x latent_dim
};

inline SynthResult gen_synth(const SynthSpec& spec) {
  if (spec.num_pairs < 1 || spec.latent_dim < 1)
    throw std::invalid_argument("gen_synth: need at least one pair and one latent dimension");
  if (spec.regions_min < 1 || spec.words_min < 1)
    throw std::invalid_argument("gen_synth: region/word minimums must be >= 1");
  if (spec.regions_max < spec.regions_min || spec.words_max < spec.words_min)
    throw std::invalid_argument("gen_synth: range maximums below minimums");
  if (spec.noise_sigma < 0) throw std::invalid_argument("gen_synth: negative noise");

  std::mt19937_64 rng(spec.seed);
  SynthResult out;
  out.corpus.d_in_image = spec.d_image;
  out.corpus.d_in_text = spec.d_text;

  out.map_image = Mat<double>(spec.d_image, spec.latent_dim);
  out.map_text = Mat<double>(spec.d_text, spec.latent_dim);
  for (double& x : out.map_image.flat()) x = gaussian(rng);
  for (double& x : out.map_text.flat()) x = gaussian(rng);

  auto encode = [&](const Mat<double>& map, std::span<const double> u, std::size_t count,
                    std::size_t d) {
    Mat<double> rows(count, d);
    for (std::size_t r = 0; r < count; ++r)
      for (std::size_t j = 0; j < d; ++j) {
        double v = 0;
        for (std::size_t k = 0; k < u.size(); ++k) v += map(j, k) * u[k];
        rows(r, j) = v + spec.noise_sigma * gaussian(rng);
      }
    return rows;
  };

  out.latents = Mat<double>(spec.num_pairs, spec.latent_dim);
  for (std::size_t i = 0; i < spec.num_pairs; ++i) {
    for (std::size_t k = 0; k < spec.latent_dim; ++k) out.latents(i, k) = gaussian(rng);
    std::span<const double> u = out.latents.row(i);

    CorpusInstance inst;
    inst.id = static_cast<int>(i);
    const std::size_t nv =
        spec.regions_min + rng() % (spec.regions_max - spec.regions_min + 1);
    inst.image = encode(out.map_image, u, nv, spec.d_image);
    for (std::size_t t = 0; t < spec.texts_per_image; ++t) {
      const std::size_t nt = spec.words_min + rng() % (spec.words_max - spec.words_min + 1);
      inst.texts.push_back(encode(out.map_text, u, nt, spec.d_text));
    }
    out.corpus.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace dias
