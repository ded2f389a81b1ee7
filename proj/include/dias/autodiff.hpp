#pragma once

// Tape-based reverse-mode automatic differentiation over double scalars.
//
// A Tape owns an append-only node list; Var is a cheap handle into it. The
// graph is built eagerly (forward values computed at construction), so node
// ids are already topologically ordered and backward() is a single reverse
// sweep. Fused n-ary ops (sum, dot) keep the tape short for the inner-product
// heavy workloads this library runs.
//
// Nondifferentiable points use the usual subgradient conventions: abs'(0)=0,
// relu'(0)=0, sqrt'(0)=0, max routes the gradient to the first argument on
// ties.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dias::ad {

enum class Op : std::uint8_t {
  kConst, kLeaf,
  kAdd, kSub, kMul, kDiv, kMax, kMin,
  kAddC, kMulC, kRsubC, kRdivC, kMaxC,
  kNeg, kAbs, kSqrt, kSigmoid, kRelu,
  kSum,    // n-ary: sum of argument nodes
  kDotVV,  // n-ary: sum_i x_i * y_i, both variable
  kDotVC,  // n-ary: sum_i c_i * x_i, constant coefficients
};

class Tape;

class Var {
 public:
  Var() = default;
  double value() const;
  double grad() const;
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* t, std::uint32_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  Var leaf(double v) { return push(Op::kLeaf, v, 0, 0); }
  Var constant(double v) { return push(Op::kConst, v, 0, 0); }

  std::size_t size() const { return nodes_.size(); }

  // Drops all nodes but keeps allocated capacity for the next batch graph.
  void clear() {
    nodes_.clear();
    args_.clear();
    coeffs_.clear();
    grads_.clear();
  }

  double value(Var v) const { return nodes_[v.id_].value; }
  double grad(Var v) const { return grads_.empty() ? 0.0 : grads_[v.id_]; }

  // Reverse sweep seeding d(output)/d(output) = 1.
  void backward(Var output) {
    assert(output.tape_ == this);
    grads_.assign(nodes_.size(), 0.0);
    grads_[output.id_] = 1.0;
    for (std::uint32_t i = static_cast<std::uint32_t>(nodes_.size()); i-- > 0;) {
      const Node& n = nodes_[i];
      const double g = grads_[i];
      if (g == 0.0) continue;
      switch (n.op) {
        case Op::kConst: case Op::kLeaf: break;
        case Op::kAdd: grads_[n.a] += g; grads_[n.b] += g; break;
        case Op::kSub: grads_[n.a] += g; grads_[n.b] -= g; break;
        case Op::kMul:
          grads_[n.a] += g * nodes_[n.b].value;
          grads_[n.b] += g * nodes_[n.a].value;
          break;
        case Op::kDiv: {
          const double denom = nodes_[n.b].value;
          grads_[n.a] += g / denom;
          grads_[n.b] -= g * n.value / denom;
          break;
        }
        case Op::kMax:
          grads_[nodes_[n.a].value >= nodes_[n.b].value ? n.a : n.b] += g;
          break;
        case Op::kMin:
          grads_[nodes_[n.a].value <= nodes_[n.b].value ? n.a : n.b] += g;
          break;
        case Op::kAddC: grads_[n.a] += g; break;
        case Op::kMulC: grads_[n.a] += g * n.aux; break;
        case Op::kRsubC: grads_[n.a] -= g; break;
        case Op::kRdivC: grads_[n.a] -= g * n.value / nodes_[n.a].value; break;
        case Op::kMaxC:
          if (nodes_[n.a].value >= n.aux) grads_[n.a] += g;
          break;
        case Op::kNeg: grads_[n.a] -= g; break;
        case Op::kAbs: {
          const double x = nodes_[n.a].value;
          grads_[n.a] += x > 0 ? g : (x < 0 ? -g : 0.0);
          break;
        }
        case Op::kSqrt:
          if (n.value > 0) grads_[n.a] += g * 0.5 / n.value;
          break;
        case Op::kSigmoid: grads_[n.a] += g * n.value * (1.0 - n.value); break;
        case Op::kRelu:
          if (nodes_[n.a].value > 0) grads_[n.a] += g;
          break;
        case Op::kSum:
          for (std::uint32_t k = 0; k < n.b; ++k) grads_[args_[n.a + k]] += g;
          break;
        case Op::kDotVV:
          for (std::uint32_t k = 0; k < n.b; ++k) {
            const std::uint32_t xi = args_[n.a + k], yi = args_[n.c + k];
            grads_[xi] += g * nodes_[yi].value;
            grads_[yi] += g * nodes_[xi].value;
          }
          break;
        case Op::kDotVC:
          for (std::uint32_t k = 0; k < n.b; ++k)
            grads_[args_[n.a + k]] += g * coeffs_[n.c + k];
          break;
      }
    }
  }

  // -- graph construction (free operator overloads funnel through these) --

  Var binary(Op op, Var a, Var b) {
    assert(a.tape_ == this && b.tape_ == this);
    double v = 0;
    const double x = nodes_[a.id_].value, y = nodes_[b.id_].value;
    switch (op) {
      case Op::kAdd: v = x + y; break;
      case Op::kSub: v = x - y; break;
      case Op::kMul: v = x * y; break;
      case Op::kDiv: v = x / y; break;
      case Op::kMax: v = x >= y ? x : y; break;
      case Op::kMin: v = x <= y ? x : y; break;
      default: assert(false);
    }
    return push(op, v, a.id_, b.id_);
  }

  Var unary_c(Op op, Var a, double c) {
    assert(a.tape_ == this);
    double v = 0;
    const double x = nodes_[a.id_].value;
    switch (op) {
      case Op::kAddC: v = x + c; break;
      case Op::kMulC: v = x * c; break;
      case Op::kRsubC: v = c - x; break;
      case Op::kRdivC: v = c / x; break;
      case Op::kMaxC: v = x >= c ? x : c; break;
      default: assert(false);
    }
    return push(op, v, a.id_, 0, c);
  }

  Var unary(Op op, Var a) {
    assert(a.tape_ == this);
    double v = 0;
    const double x = nodes_[a.id_].value;
    switch (op) {
      case Op::kNeg: v = -x; break;
      case Op::kAbs: v = std::abs(x); break;
      case Op::kSqrt: v = std::sqrt(x); break;
      case Op::kSigmoid: v = 1.0 / (1.0 + std::exp(-x)); break;
      case Op::kRelu: v = x > 0 ? x : 0.0; break;
      default: assert(false);
    }
    return push(op, v, a.id_, 0);
  }

  Var sum(std::span<const Var> xs) {
    const std::uint32_t begin = append_args(xs);
    double v = 0;
    for (const Var& x : xs) v += nodes_[x.id_].value;
    return push_nary(Op::kSum, v, begin, static_cast<std::uint32_t>(xs.size()), 0);
  }

  Var dot(std::span<const Var> xs, std::span<const Var> ys) {
    assert(xs.size() == ys.size());
    const std::uint32_t bx = append_args(xs);
    const std::uint32_t by = append_args(ys);
    double v = 0;
    for (std::size_t k = 0; k < xs.size(); ++k)
      v += nodes_[xs[k].id_].value * nodes_[ys[k].id_].value;
    return push_nary(Op::kDotVV, v, bx, static_cast<std::uint32_t>(xs.size()), by);
  }

  Var dot(std::span<const double> coeffs, std::span<const Var> xs) {
    assert(coeffs.size() == xs.size());
    const std::uint32_t bx = append_args(xs);
    const std::uint32_t bc = static_cast<std::uint32_t>(coeffs_.size());
    coeffs_.insert(coeffs_.end(), coeffs.begin(), coeffs.end());
    double v = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) v += coeffs[k] * nodes_[xs[k].id_].value;
    return push_nary(Op::kDotVC, v, bx, static_cast<std::uint32_t>(xs.size()), bc);
  }

 private:
  struct Node {
    Op op;
    std::uint32_t a = 0, b = 0, c = 0;
    double value = 0, aux = 0;
  };

  Var push(Op op, double value, std::uint32_t a, std::uint32_t b, double aux = 0) {
    nodes_.push_back({op, a, b, 0, value, aux});
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  Var push_nary(Op op, double value, std::uint32_t begin, std::uint32_t count,
                std::uint32_t extra) {
    nodes_.push_back({op, begin, count, extra, value, 0});
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  // No exact-size reserve here: letting the vector grow geometrically keeps
  // total argument appends amortized linear.
  std::uint32_t append_args(std::span<const Var> xs) {
    const std::uint32_t begin = static_cast<std::uint32_t>(args_.size());
    for (const Var& x : xs) {
      assert(x.tape_ == this);
      args_.push_back(x.id_);
    }
    return begin;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> args_;
  std::vector<double> coeffs_;
  std::vector<double> grads_;
};

inline double Var::value() const { return tape_->value(*this); }
inline double Var::grad() const { return tape_->grad(*this); }

// Arithmetic surface. Var/double mixing maps to the *C ops so constants never
// allocate nodes.
inline Var operator+(Var a, Var b) { return a.tape()->binary(Op::kAdd, a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->binary(Op::kSub, a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->binary(Op::kMul, a, b); }
inline Var operator/(Var a, Var b) { return a.tape()->binary(Op::kDiv, a, b); }
inline Var operator-(Var a) { return a.tape()->unary(Op::kNeg, a); }

inline Var operator+(Var a, double c) { return a.tape()->unary_c(Op::kAddC, a, c); }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a.tape()->unary_c(Op::kAddC, a, -c); }
inline Var operator-(double c, Var a) { return a.tape()->unary_c(Op::kRsubC, a, c); }
inline Var operator*(Var a, double c) { return a.tape()->unary_c(Op::kMulC, a, c); }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a.tape()->unary_c(Op::kMulC, a, 1.0 / c); }
inline Var operator/(double c, Var a) { return a.tape()->unary_c(Op::kRdivC, a, c); }

inline Var abs(Var a) { return a.tape()->unary(Op::kAbs, a); }
inline Var sqrt(Var a) { return a.tape()->unary(Op::kSqrt, a); }
inline Var sigmoid(Var a) { return a.tape()->unary(Op::kSigmoid, a); }
inline Var relu(Var a) { return a.tape()->unary(Op::kRelu, a); }
inline Var max(Var a, Var b) { return a.tape()->binary(Op::kMax, a, b); }
inline Var min(Var a, Var b) { return a.tape()->binary(Op::kMin, a, b); }
inline Var max(Var a, double c) { return a.tape()->unary_c(Op::kMaxC, a, c); }

inline Var sum(std::span<const Var> xs) { return xs[0].tape()->sum(xs); }
inline Var dot(std::span<const Var> xs, std::span<const Var> ys) { return xs[0].tape()->dot(xs, ys); }
inline Var dot(std::span<const double> coeffs, std::span<const Var> xs) {
  return xs[0].tape()->dot(coeffs, xs);
}

}  // namespace dias::ad
