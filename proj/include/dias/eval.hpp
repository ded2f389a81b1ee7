#pragma once

// Retrieval evaluation: pairwise interaction similarity, R@K with
// deterministic tie-breaking (lower index wins), and 5-fold averaging.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "dias/corpus_io.hpp"
#include "dias/interaction.hpp"
#include "dias/objective.hpp"

namespace dias {

struct EvalReport {
  double i2t_r1 = 0, i2t_r5 = 0, i2t_r10 = 0;
  double t2i_r1 = 0, t2i_r5 = 0, t2i_r10 = 0;
  double rsum = 0;
  int fold_count = 1;
};

// Percentage of query rows whose top-K candidates (descending similarity,
// ties broken toward the lower index) contain a ground-truth item.
inline double recall_at_k(const Mat<double>& similarity,
                          const std::vector<std::vector<std::size_t>>& ground_truth,
                          std::size_t k) {
  if (k < 1) throw std::invalid_argument("recall_at_k: K must be >= 1");
  if (ground_truth.size() != similarity.rows())
    throw std::invalid_argument("recall_at_k: ground truth size mismatch");

  std::size_t hits = 0;
  for (std::size_t q = 0; q < similarity.rows(); ++q) {
    if (ground_truth[q].empty())
      throw std::invalid_argument("recall_at_k: query without ground truth");
    // Rank of a candidate = strictly-better count + equal-with-lower-index
    // count; a hit needs some ground-truth rank <= K.
    bool hit = false;
    for (std::size_t g : ground_truth[q]) {
      std::size_t rank = 1;
      for (std::size_t j = 0; j < similarity.cols() && rank <= k; ++j) {
        if (j == g) continue;
        if (similarity(q, j) > similarity(q, g) ||
            (similarity(q, j) == similarity(q, g) && j < g))
          ++rank;
      }
      if (rank <= k) {
        hit = true;
        break;
      }
    }
    if (hit) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(similarity.rows());
}

// Six-recall report from an image x text similarity matrix; text->image
// treats every text as an independent query for its own image.
inline EvalReport eval_similarity(const Mat<double>& similarity,
                                  const std::vector<std::vector<std::size_t>>& image_to_texts) {
  std::vector<std::vector<std::size_t>> text_to_image(similarity.cols());
  for (std::size_t i = 0; i < image_to_texts.size(); ++i)
    for (std::size_t t : image_to_texts[i]) text_to_image[t] = {i};

  const Mat<double> transposed = similarity.transposed();
  EvalReport rep;
  rep.i2t_r1 = recall_at_k(similarity, image_to_texts, 1);
  rep.i2t_r5 = recall_at_k(similarity, image_to_texts, 5);
  rep.i2t_r10 = recall_at_k(similarity, image_to_texts, 10);
  rep.t2i_r1 = recall_at_k(transposed, text_to_image, 1);
  rep.t2i_r5 = recall_at_k(transposed, text_to_image, 5);
  rep.t2i_r10 = recall_at_k(transposed, text_to_image, 10);
  rep.rsum = rep.i2t_r1 + rep.i2t_r5 + rep.i2t_r10 + rep.t2i_r1 + rep.t2i_r5 + rep.t2i_r10;
  return rep;
}

// Matching score of one image/text pair: interact both directions, pool, and
// take the cosine of the resulting globals.
inline double pair_score(const LocalEmbeddingSet& image, const LocalEmbeddingSet& text) {
  auto img_att = aggregate_local(image, text);
  auto txt_att = aggregate_local(text, image);
  auto v = pool_rows(img_att.updated_vectors);
  auto t = pool_rows(txt_att.updated_vectors);
  return cosine<double>(v, t);
}

// Projected locals for a contiguous instance range [begin, end).
struct ProjectedFold {
  std::vector<LocalEmbeddingSet> images;
  std::vector<LocalEmbeddingSet> texts;                 // concatenated in corpus order
  std::vector<std::vector<std::size_t>> image_to_texts; // indices into texts
};

inline ProjectedFold project_fold(const Corpus& corpus, std::size_t begin, std::size_t end,
                                  const ModelParams& params) {
  ProjectedFold fold;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& inst = corpus.instances[i];
    fold.images.push_back(project(inst.image, params.projection, Modality::kImage, inst.id));
    std::vector<std::size_t> ids;
    for (const auto& text : inst.texts) {
      ids.push_back(fold.texts.size());
      fold.texts.push_back(project(text, params.projection, Modality::kText, inst.id));
    }
    fold.image_to_texts.push_back(std::move(ids));
  }
  return fold;
}

inline Mat<double> score_matrix(const ProjectedFold& fold) {
  Mat<double> sim(fold.images.size(), fold.texts.size());
  for (std::size_t i = 0; i < fold.images.size(); ++i)
    for (std::size_t j = 0; j < fold.texts.size(); ++j)
      sim(i, j) = pair_score(fold.images[i], fold.texts[j]);
  return sim;
}

inline EvalReport evaluate_range(const Corpus& corpus, std::size_t begin, std::size_t end,
                                 const ModelParams& params) {
  ProjectedFold fold = project_fold(corpus, begin, end, params);
  EvalReport rep = eval_similarity(score_matrix(fold), fold.image_to_texts);
  return rep;
}

// Split into 5 contiguous folds, evaluate each independently, report the
// per-metric arithmetic mean.
inline EvalReport five_fold_eval(const Corpus& corpus, const ModelParams& params) {
  const std::size_t n = corpus.instances.size();
  if (n == 0 || n % 5 != 0)
    throw std::invalid_argument("five_fold_eval: corpus size must be a positive multiple of 5");
  const std::size_t fold_size = n / 5;
  EvalReport mean;
  mean.fold_count = 5;
  for (std::size_t f = 0; f < 5; ++f) {
    EvalReport rep = evaluate_range(corpus, f * fold_size, (f + 1) * fold_size, params);
    mean.i2t_r1 += rep.i2t_r1 / 5.0;
    mean.i2t_r5 += rep.i2t_r5 / 5.0;
    mean.i2t_r10 += rep.i2t_r10 / 5.0;
    mean.t2i_r1 += rep.t2i_r1 / 5.0;
    mean.t2i_r5 += rep.t2i_r5 / 5.0;
    mean.t2i_r10 += rep.t2i_r10 / 5.0;
  }
  mean.rsum = mean.i2t_r1 + mean.i2t_r5 + mean.i2t_r10 + mean.t2i_r1 + mean.t2i_r5 + mean.t2i_r10;
  return mean;
}

}  // namespace dias
