#pragma once

// Double counterparts of the autodiff primitives plus tape lifting helpers.
// Generic module code calls abs/sqrt/max/... unqualified; for S = double the
// overloads below bind, for S = ad::Var argument-dependent lookup picks the
// tape-building versions from autodiff.hpp.

#include <cmath>
#include <span>
#include <vector>

#include "dias/autodiff.hpp"
#include "dias/matrix.hpp"

namespace dias {

inline double abs(double x) { return std::abs(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0 ? x : 0.0; }
inline double max(double a, double b) { return a >= b ? a : b; }
inline double min(double a, double b) { return a <= b ? a : b; }

inline double sum(std::span<const double> xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double value_of(double x) { return x; }
inline double value_of(ad::Var v) { return v.value(); }

template <class S>
Mat<double> values_of(const Mat<S>& m) {
  Mat<double> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

template <class S>
std::vector<double> values_of(std::span<const S> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const S& x : xs) out.push_back(value_of(x));
  return out;
}

// Parameters become leaves (gradients tracked); data becomes constants.
inline Mat<ad::Var> lift_leaves(ad::Tape& tape, const Mat<double>& m) {
  Mat<ad::Var> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = tape.leaf(m(i, j));
  return out;
}

inline std::vector<ad::Var> lift_leaves(ad::Tape& tape, std::span<const double> xs) {
  std::vector<ad::Var> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(tape.leaf(x));
  return out;
}

}  // namespace dias
