#ifndef MOBIDECOMP_AD_HPP
#define MOBIDECOMP_AD_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"
#include "mobidecomp/special.hpp"

namespace mobi::ad {

/// One recorded operation: up to two operands with their local partials.
/// Operands always precede the node, so a single reverse sweep suffices.
struct Node {
  std::int32_t a = -1;
  std::int32_t b = -1;
  double da = 0.0;
  double db = 0.0;
};

class Tape;

/// Handle to a scalar on a tape. Cheap to copy; arithmetic on it records
/// nodes on the owning tape.
class Var {
 public:
  Var() = default;
  double value() const { return val_; }
  std::int32_t index() const { return idx_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* t, std::int32_t i, double v) : tape_(t), idx_(i), val_(v) {}
  Tape* tape_ = nullptr;
  std::int32_t idx_ = -1;
  double val_ = 0.0;
};

class Tape {
 public:
  void clear() {
    nodes_.clear();
    vals_.clear();
    n_inputs_ = 0;
  }

  void reserve(std::size_t n) {
    nodes_.reserve(n);
    vals_.reserve(n);
  }

  std::size_t size() const { return nodes_.size(); }

  /// Registers an independent input. All inputs must be created before any
  /// arithmetic so their adjoints occupy the leading slots.
  Var input(double v) {
    assert(static_cast<std::size_t>(n_inputs_) == nodes_.size());
    ++n_inputs_;
    return push(-1, -1, 0.0, 0.0, v);
  }

  Var constant(double v) { return push(-1, -1, 0.0, 0.0, v); }

  Var unary(const Var& x, double val, double dx) {
    assert(x.tape_ == this);
    return push(x.idx_, -1, dx, 0.0, val);
  }

  Var binary(const Var& x, const Var& y, double val, double dx, double dy) {
    assert(x.tape_ == this && y.tape_ == this);
    return push(x.idx_, y.idx_, dx, dy, val);
  }

  /// Reverse sweep from `output`. Writes d output / d input_i into
  /// `grad_out` (one slot per registered input). Throws evaluation-error if
  /// any intermediate value is non-finite, reporting the first bad node.
  void backward(const Var& output, std::span<double> grad_out) const {
    assert(output.tape_ == this);
    assert(grad_out.size() == static_cast<std::size_t>(n_inputs_));
    for (std::size_t i = 0; i < vals_.size(); ++i) {
      if (!std::isfinite(vals_[i])) {
        fail(ErrorKind::evaluation_error,
             "non-finite intermediate at node " + std::to_string(i));
      }
    }
    adjoints_.assign(vals_.size(), 0.0);
    adjoints_[static_cast<std::size_t>(output.idx_)] = 1.0;
    for (std::int32_t i = output.idx_; i >= 0; --i) {
      const double adj = adjoints_[static_cast<std::size_t>(i)];
      if (adj == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.a >= 0) adjoints_[static_cast<std::size_t>(n.a)] += n.da * adj;
      if (n.b >= 0) adjoints_[static_cast<std::size_t>(n.b)] += n.db * adj;
    }
    for (std::int32_t i = 0; i < n_inputs_; ++i) {
      grad_out[static_cast<std::size_t>(i)] = adjoints_[static_cast<std::size_t>(i)];
    }
  }

 private:
  Var push(std::int32_t a, std::int32_t b, double da, double db, double val) {
    nodes_.push_back(Node{a, b, da, db});
    vals_.push_back(val);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), val);
  }

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::int32_t n_inputs_ = 0;
  mutable std::vector<double> adjoints_;
};

// --- arithmetic -------------------------------------------------------------

inline Var operator+(const Var& x, const Var& y) {
  return x.tape()->binary(x, y, x.value() + y.value(), 1.0, 1.0);
}
inline Var operator+(const Var& x, double c) { return x.tape()->unary(x, x.value() + c, 1.0); }
inline Var operator+(double c, const Var& x) { return x + c; }

inline Var operator-(const Var& x, const Var& y) {
  return x.tape()->binary(x, y, x.value() - y.value(), 1.0, -1.0);
}
inline Var operator-(const Var& x, double c) { return x.tape()->unary(x, x.value() - c, 1.0); }
inline Var operator-(double c, const Var& x) { return x.tape()->unary(x, c - x.value(), -1.0); }
inline Var operator-(const Var& x) { return x.tape()->unary(x, -x.value(), -1.0); }

inline Var operator*(const Var& x, const Var& y) {
  return x.tape()->binary(x, y, x.value() * y.value(), y.value(), x.value());
}
inline Var operator*(const Var& x, double c) { return x.tape()->unary(x, x.value() * c, c); }
inline Var operator*(double c, const Var& x) { return x * c; }

inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.value();
  return x.tape()->binary(x, y, x.value() * inv, inv, -x.value() * inv * inv);
}
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& x) {
  const double inv = 1.0 / x.value();
  return x.tape()->unary(x, c * inv, -c * inv * inv);
}

inline Var& operator+=(Var& x, const Var& y) { return x = x + y; }
inline Var& operator+=(Var& x, double c) { return x = x + c; }
inline Var& operator-=(Var& x, const Var& y) { return x = x - y; }
inline Var& operator*=(Var& x, const Var& y) { return x = x * y; }

// --- elementary functions ---------------------------------------------------

inline Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return x.tape()->unary(x, e, e);
}

inline Var log(const Var& x) { return x.tape()->unary(x, std::log(x.value()), 1.0 / x.value()); }

inline Var log1p(const Var& x) {
  return x.tape()->unary(x, std::log1p(x.value()), 1.0 / (1.0 + x.value()));
}

inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.value());
  return x.tape()->unary(x, s, 0.5 / s);
}

inline Var pow(const Var& x, double p) {
  const double v = std::pow(x.value(), p);
  return x.tape()->unary(x, v, p * std::pow(x.value(), p - 1.0));
}

inline Var square(const Var& x) {
  return x.tape()->unary(x, x.value() * x.value(), 2.0 * x.value());
}
inline double square(double x) { return x * x; }

inline Var logistic(const Var& x) {
  const double s = math::logistic(x.value());
  return x.tape()->unary(x, s, s * (1.0 - s));
}

inline Var softplus(const Var& x) {
  const double v = math::softplus(x.value());
  return x.tape()->unary(x, v, math::logistic(x.value()));
}

/// Regularized lower incomplete gamma P(a, x) as a differentiable primitive.
/// The x-partial is the closed-form density; the a-partial falls back to a
/// central difference (no elementary closed form exists).
inline Var gamma_p(const Var& a, const Var& x) {
  const double av = a.value();
  const double xv = x.value();
  return a.tape()->binary(a, x, math::gamma_p(av, xv), math::gamma_p_da(av, xv),
                          math::gamma_p_dx(av, xv));
}

// --- driver -----------------------------------------------------------------

/// Evaluates f at x and fills grad_out with df/dx in one reverse sweep.
/// f receives a span of input Vars and must return a single Var.
template <class F>
double gradient(Tape& tape, F&& f, std::span<const double> x, std::span<double> grad_out) {
  tape.clear();
  std::vector<Var> inputs;
  inputs.reserve(x.size());
  for (double xi : x) {
    if (!std::isfinite(xi)) fail(ErrorKind::evaluation_error, "non-finite input coordinate");
    inputs.push_back(tape.input(xi));
  }
  const Var out = f(std::span<const Var>(inputs));
  tape.backward(out, grad_out);
  return out.value();
}

/// Generic value extraction so templated code can log or branch on data.
inline double value_of(const Var& x) { return x.value(); }
inline double value_of(double x) { return x; }

}  // namespace mobi::ad

#endif  // MOBIDECOMP_AD_HPP
