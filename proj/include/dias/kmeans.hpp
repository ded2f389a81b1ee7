#pragma once

// Lloyd's k-means with k-means++ seeding. Deterministic given the RNG state;
// empty clusters keep their previous centroid.

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "dias/matrix.hpp"
#include "dias/rng.hpp"

namespace dias {

struct KMeansResult {
  Mat<double> centroids;                          // k x d
  std::vector<std::size_t> assignment;            // point -> cluster
  std::vector<std::vector<std::size_t>> members;  // cluster -> points
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace detail

inline KMeansResult kmeans(const Mat<double>& points, std::size_t k, std::size_t iters,
                           std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  if (n == 0) throw std::invalid_argument("kmeans: no points");
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) k = n;

  // k-means++ seeding: next centroid drawn proportionally to the squared
  // distance from the nearest chosen one.
  KMeansResult res;
  res.centroids = Mat<double>(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng() % n);
  for (std::size_t j = 0; j < points.cols(); ++j) res.centroids(0, j) = points(first, j);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], detail::sq_dist(points.row(i), res.centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick;
    if (total > 0) {
      pick = sample_index(d2, rng);
    } else {
      pick = static_cast<std::size_t>(rng() % n);  // all points coincide
    }
    for (std::size_t j = 0; j < points.cols(); ++j) res.centroids(c, j) = points(pick, j);
  }

  res.assignment.assign(n, 0);
  for (std::size_t it = 0; it < iters; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::sq_dist(points.row(i), res.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignment[i] != best) changed = true;
      res.assignment[i] = best;
    }
    if (!changed) break;

    Mat<double> sums(k, points.cols(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[res.assignment[i]];
      for (std::size_t j = 0; j < points.cols(); ++j) sums(res.assignment[i], j) += points(i, j);
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t j = 0; j < points.cols(); ++j)
          res.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
  }

  res.members.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) res.members[res.assignment[i]].push_back(i);
  return res;
}

}  // namespace dias
