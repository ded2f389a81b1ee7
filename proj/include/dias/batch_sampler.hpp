#pragma once

// Neighbor batch sampling: cluster the image embeddings once, then compose
// each batch from M distinct clusters with P images each, drawn uniformly
// without replacement. Clusters short of P are topped up from the nearest
// cluster by centroid distance so every batch holds exactly M*P distinct
// images.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "dias/kmeans.hpp"

namespace dias {

struct BatchSpec {
  std::size_t clusters_m = 16;
  std::size_t per_cluster_p = 8;
  std::size_t kmeans_k = 64;
  std::size_t kmeans_iters = 20;
  std::uint64_t seed = 0;

  std::size_t batch_n() const { return clusters_m * per_cluster_p; }
};

// One epoch worth of batches (image indices). image_globals: one row per
// corpus image.
inline std::vector<std::vector<std::size_t>> sample_batches(const Mat<double>& image_globals,
                                                            std::size_t num_batches,
                                                            const BatchSpec& spec) {
  const std::size_t n = image_globals.rows();
  if (n < spec.batch_n()) throw std::invalid_argument("sample_batches: corpus smaller than a batch");
  if (spec.kmeans_k < spec.clusters_m)
    throw std::invalid_argument("sample_batches: kmeans_k must be >= clusters_M");

  std::mt19937_64 rng(spec.seed);
  KMeansResult km = kmeans(image_globals, spec.kmeans_k, spec.kmeans_iters, rng);

  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < km.members.size(); ++c)
    if (!km.members[c].empty()) nonempty.push_back(c);

  // Nearest-cluster order per cluster, for topping up undersized ones.
  auto nearest_order = [&](std::size_t c) {
    std::vector<std::size_t> order = nonempty;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return detail::sq_dist(km.centroids.row(c), km.centroids.row(a)) <
             detail::sq_dist(km.centroids.row(c), km.centroids.row(b));
    });
    return order;
  };

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < num_batches; ++b) {
    const std::size_t m = std::min(spec.clusters_m, nonempty.size());
    std::vector<std::size_t> chosen;
    for (std::size_t idx : sample_without_replacement(nonempty.size(), m, rng))
      chosen.push_back(nonempty[idx]);

    std::vector<std::size_t> batch;
    std::vector<char> taken(n, 0);
    auto take_from = [&](const std::vector<std::size_t>& pool, std::size_t want) {
      std::vector<std::size_t> open;
      for (std::size_t i : pool)
        if (!taken[i]) open.push_back(i);
      const std::size_t grab = std::min(want, open.size());
      for (std::size_t idx : sample_without_replacement(open.size(), grab, rng)) {
        batch.push_back(open[idx]);
        taken[open[idx]] = 1;
      }
      return grab;
    };

    for (std::size_t c : chosen) {
      std::size_t need = spec.per_cluster_p - take_from(km.members[c], spec.per_cluster_p);
      if (need > 0) {
        for (std::size_t neighbor : nearest_order(c)) {
          if (need == 0) break;
          need -= take_from(km.members[neighbor], need);
        }
      }
      if (need > 0) throw std::runtime_error("sample_batches: corpus exhausted during top-up");
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace dias
