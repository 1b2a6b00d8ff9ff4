// Copyright (c) 2026 The PUP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace pup::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor of rank <= 3 with an optional gradient slot.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0) : shape(std::move(dims)) {
    if (shape.empty() || shape.size() > 3) throw ShapeError("tensor rank must be 1, 2 or 3");
    data.assign(numel(shape), fill);
  }

  static std::size_t numel(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : size() / shape[0]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() { grad.assign(data.size(), 0.0); }

  bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }
};

inline std::string shape_string(std::size_t rows, std::size_t cols) {
  std::ostringstream os;
  os << '[' << rows;
  if (cols != 1) os << 'x' << cols;
  os << ']';
  return os.str();
}

/// Raw numeric routines shared by the taped ops and by the plain inference
/// path, so both produce bit-identical values.
namespace kernels {

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// y = W x (+ b), W row-major rows x cols. `b` may be null.
inline void affine(const double* w, const double* x, const double* b, double* y, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double v = dot(w + r * cols, x, cols);
    y[r] = b ? v + b[r] : v;
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void log_softmax(const double* x, double* y, std::size_t n) {
  const double m = *std::max_element(x, x + n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  const double lse = m + std::log(s);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - lse;
}

/// LSTM cell on precomputed gate pre-activations [i, f, g, o].
inline void lstm_cell(const double* gates, const double* c, double* h_out, double* c_out, std::size_t hidden) {
  for (std::size_t k = 0; k < hidden; ++k) {
    const double ig = sigmoid(gates[k]);
    const double fg = sigmoid(gates[hidden + k]);
    const double gg = std::tanh(gates[2 * hidden + k]);
    const double og = sigmoid(gates[3 * hidden + k]);
    const double cn = fg * c[k] + ig * gg;
    c_out[k] = cn;
    h_out[k] = og * std::tanh(cn);
  }
}

}  // namespace kernels

class Tape;

/// Handle to a value recorded on a Tape. Column vectors and matrices only;
/// a scalar is 1x1.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return rows() * cols(); }
  const double* data() const;
  double item() const;
  std::vector<double> values() const { return {data(), data() + size()}; }
};

/// Records operations for one reverse pass. With `record = false` no
/// backward closures are kept (inference).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(std::vector<double> values, std::size_t rows, std::size_t cols = 1) {
    if (values.size() != rows * cols) throw ShapeError("constant: value count does not match shape");
    return push(rows, cols, std::move(values));
  }
  Var constant(std::vector<double> values) {
    const std::size_t n = values.size();
    return constant(std::move(values), n, 1);
  }
  Var scalar(double v) { return constant({v}, 1, 1); }

  /// Leaf bound to a parameter tensor; gradients accumulate into t.grad.
  Var param(Tensor& t) {
    if (auto it = param_nodes_.find(&t); it != param_nodes_.end()) return {this, it->second};
    Node n;
    n.rows = t.rows();
    n.cols = t.cols();
    n.param = &t;
    nodes_.push_back(std::move(n));
    const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    param_nodes_.emplace(&t, id);
    return {this, id};
  }

  /// Id the next pushed node will receive.
  std::uint32_t next_id() const { return static_cast<std::uint32_t>(nodes_.size()); }

  std::size_t rows(Var v) const { return nodes_[v.id].rows; }
  std::size_t cols(Var v) const { return nodes_[v.id].cols; }

  const double* value(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->data.data() : n.value.data();
  }
  double* grad(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.param) {
      n.param->ensure_grad();
      return n.param->grad.data();
    }
    if (n.grad.size() != n.rows * n.cols) n.grad.assign(n.rows * n.cols, 0.0);
    return n.grad.data();
  }

  /// New node holding `values`; `backward` runs during the reverse sweep
  /// once the node's own gradient is known.
  Var push(std::size_t rows, std::size_t cols, std::vector<double> values, std::function<void()> backward = {}) {
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.value = std::move(values);
    if (record_) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  /// Reverse sweep from a scalar. d(loss)/d(loss) = seed.
  void backward(Var loss, double seed = 1.0) {
    if (!record_) throw std::logic_error("backward on a tape that does not record");
    if (rows(loss) * cols(loss) != 1)
      throw ShapeError("backward needs a scalar loss, got " + shape_string(rows(loss), cols(loss)));
    grad(loss.id)[0] += seed;
    for (std::int64_t i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backward && !n.grad.empty()) n.backward();
    }
  }

 private:
  struct Node {
    std::size_t rows = 0, cols = 1;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    std::function<void()> backward;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> param_nodes_;
};

inline std::size_t Var::rows() const { return tape->rows(*this); }
inline std::size_t Var::cols() const { return tape->cols(*this); }
inline const double* Var::data() const { return tape->value(id); }
inline double Var::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar " + shape_string(rows(), cols()));
  return data()[0];
}

namespace detail {

inline void require_same(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string("shape mismatch in ") + op + ": " + shape_string(a.rows(), a.cols()) + " vs " +
                     shape_string(b.rows(), b.cols()));
}

inline void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("operands recorded on different tapes");
}

// Elementwise op whose derivative is expressed through input x and output y.
template <class F, class D>
Var unary(Var a, F f, D dydx) {
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  std::vector<double> y(n);
  const double* x = a.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
  const auto ai = a.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(a.rows(), a.cols(), std::move(y), [tp, ai, oi, n, dydx] {
    const double* x = tp->value(ai);
    const double* y = tp->value(oi);
    const double* gy = tp->grad(oi);
    double* gx = tp->grad(ai);
    for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * dydx(x[i], y[i]);
  });
}

}  // namespace detail

inline Var add(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same(a, b, "add");
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  std::vector<double> y(n);
  const double *x0 = a.data(), *x1 = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = x0[i] + x1[i];
  const auto ai = a.id, bi = b.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(a.rows(), a.cols(), std::move(y), [tp, ai, bi, oi, n] {
    const double* gy = tp->grad(oi);
    kernels::axpy(1.0, gy, tp->grad(ai), n);
    kernels::axpy(1.0, gy, tp->grad(bi), n);
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same(a, b, "sub");
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  std::vector<double> y(n);
  const double *x0 = a.data(), *x1 = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = x0[i] - x1[i];
  const auto ai = a.id, bi = b.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(a.rows(), a.cols(), std::move(y), [tp, ai, bi, oi, n] {
    const double* gy = tp->grad(oi);
    kernels::axpy(1.0, gy, tp->grad(ai), n);
    kernels::axpy(-1.0, gy, tp->grad(bi), n);
  });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same(a, b, "mul");
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  std::vector<double> y(n);
  const double *x0 = a.data(), *x1 = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = x0[i] * x1[i];
  const auto ai = a.id, bi = b.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(a.rows(), a.cols(), std::move(y), [tp, ai, bi, oi, n] {
    const double* gy = tp->grad(oi);
    const double *x0 = tp->value(ai), *x1 = tp->value(bi);
    // a and b may be the same node; fetch both grads before writing.
    double* g0 = tp->grad(ai);
    double* g1 = tp->grad(bi);
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = gy[i] * x1[i];
      const double d1 = gy[i] * x0[i];
      g0[i] += d0;
      g1[i] += d1;
    }
  });
}

inline Var scale(Var a, double c) {
  return detail::unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var sigmoid(Var a) {
  return detail::unary(a, [](double x) { return kernels::sigmoid(x); },
                       [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Var a) {
  return detail::unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var exp(Var a) {
  return detail::unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(Var a) {
  return detail::unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

/// Sum of all entries, as a scalar.
inline Var sum(Var a) {
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  double s = 0.0;
  const double* x = a.data();
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  const auto ai = a.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(1, 1, {s}, [tp, ai, oi, n] {
    const double g = tp->grad(oi)[0];
    double* gx = tp->grad(ai);
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

/// Matrix-vector product W x, W of shape rows x cols, x a column of cols.
inline Var matvec(Var w, Var x) {
  detail::require_same_tape(w, x);
  if (x.cols() != 1 || x.rows() != w.cols())
    throw ShapeError("shape mismatch in matvec: " + shape_string(w.rows(), w.cols()) + " vs " +
                     shape_string(x.rows(), x.cols()));
  Tape& t = *w.tape;
  const std::size_t r = w.rows(), c = w.cols();
  std::vector<double> y(r);
  kernels::affine(w.data(), x.data(), nullptr, y.data(), r, c);
  const auto wi = w.id, xi = x.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(r, 1, std::move(y), [tp, wi, xi, oi, r, c] {
    const double* gy = tp->grad(oi);
    const double* wv = tp->value(wi);
    const double* xv = tp->value(xi);
    double* gw = tp->grad(wi);
    double* gx = tp->grad(xi);
    for (std::size_t i = 0; i < r; ++i) {
      if (gy[i] == 0.0) continue;
      kernels::axpy(gy[i], xv, gw + i * c, c);
      kernels::axpy(gy[i], wv + i * c, gx, c);
    }
  });
}

/// W x + b in one node.
inline Var affine(Var w, Var x, Var b) {
  detail::require_same_tape(w, x);
  detail::require_same_tape(w, b);
  if (x.cols() != 1 || x.rows() != w.cols())
    throw ShapeError("shape mismatch in affine: " + shape_string(w.rows(), w.cols()) + " vs " +
                     shape_string(x.rows(), x.cols()));
  if (b.size() != w.rows())
    throw ShapeError("shape mismatch in affine bias: " + shape_string(w.rows(), 1) + " vs " +
                     shape_string(b.rows(), b.cols()));
  Tape& t = *w.tape;
  const std::size_t r = w.rows(), c = w.cols();
  std::vector<double> y(r);
  kernels::affine(w.data(), x.data(), b.data(), y.data(), r, c);
  const auto wi = w.id, xi = x.id, bi = b.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(r, 1, std::move(y), [tp, wi, xi, bi, oi, r, c] {
    const double* gy = tp->grad(oi);
    const double* wv = tp->value(wi);
    const double* xv = tp->value(xi);
    double* gw = tp->grad(wi);
    double* gx = tp->grad(xi);
    double* gb = tp->grad(bi);
    for (std::size_t i = 0; i < r; ++i) {
      gb[i] += gy[i];
      if (gy[i] == 0.0) continue;
      kernels::axpy(gy[i], xv, gw + i * c, c);
      kernels::axpy(gy[i], wv + i * c, gx, c);
    }
  });
}

/// Stacks two column vectors.
inline Var concat(Var a, Var b) {
  detail::require_same_tape(a, b);
  if (a.cols() != 1 || b.cols() != 1)
    throw ShapeError("shape mismatch in concat: " + shape_string(a.rows(), a.cols()) + " vs " +
                     shape_string(b.rows(), b.cols()));
  Tape& t = *a.tape;
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> y(na + nb);
  std::copy(a.data(), a.data() + na, y.begin());
  std::copy(b.data(), b.data() + nb, y.begin() + static_cast<std::ptrdiff_t>(na));
  const auto ai = a.id, bi = b.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(na + nb, 1, std::move(y), [tp, ai, bi, oi, na, nb] {
    const double* gy = tp->grad(oi);
    kernels::axpy(1.0, gy, tp->grad(ai), na);
    kernels::axpy(1.0, gy + na, tp->grad(bi), nb);
  });
}

/// Entries [offset, offset + len) of a column vector.
inline Var slice(Var a, std::size_t offset, std::size_t len) {
  if (a.cols() != 1 || offset + len > a.rows())
    throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + len) + ") out of " +
                     shape_string(a.rows(), a.cols()));
  Tape& t = *a.tape;
  std::vector<double> y(a.data() + offset, a.data() + offset + len);
  const auto ai = a.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(len, 1, std::move(y), [tp, ai, oi, offset, len] {
    kernels::axpy(1.0, tp->grad(oi), tp->grad(ai) + offset, len);
  });
}

/// Row `index` of a matrix, as a column vector (embedding lookup).
inline Var row(Var m, std::size_t index) {
  if (index >= m.rows())
    throw ShapeError("row " + std::to_string(index) + " out of " + shape_string(m.rows(), m.cols()));
  Tape& t = *m.tape;
  const std::size_t c = m.cols();
  std::vector<double> y(m.data() + index * c, m.data() + (index + 1) * c);
  const auto mi = m.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(c, 1, std::move(y), [tp, mi, oi, index, c] {
    kernels::axpy(1.0, tp->grad(oi), tp->grad(mi) + index * c, c);
  });
}

inline Var log_softmax(Var a) {
  Tape& t = *a.tape;
  const std::size_t n = a.size();
  std::vector<double> y(n);
  kernels::log_softmax(a.data(), y.data(), n);
  const auto ai = a.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(a.rows(), a.cols(), std::move(y), [tp, ai, oi, n] {
    const double* gy = tp->grad(oi);
    const double* y = tp->value(oi);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += gy[i];
    double* gx = tp->grad(ai);
    for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] - std::exp(y[i]) * total;
  });
}

inline Var softmax(Var a) { return exp(log_softmax(a)); }

/// Entry `index` as a scalar.
inline Var pick(Var a, std::size_t index) {
  if (index >= a.size()) throw ShapeError("pick index " + std::to_string(index) + " out of range");
  Tape& t = *a.tape;
  const auto ai = a.id, oi = t.next_id();
  Tape* tp = &t;
  return t.push(1, 1, {a.data()[index]}, [tp, ai, oi, index] { tp->grad(ai)[index] += tp->grad(oi)[0]; });
}

/// -log softmax(logits)[target].
inline Var cross_entropy(Var logits, std::size_t target) {
  if (target >= logits.size()) throw ShapeError("cross_entropy target " + std::to_string(target) + " out of range");
  Tape& t = *logits.tape;
  const std::size_t n = logits.size();
  std::vector<double> lp(n);
  kernels::log_softmax(logits.data(), lp.data(), n);
  const auto li = logits.id, oi = t.next_id();
  Tape* tp = &t;
  const double loss = -lp[target];
  return t.push(1, 1, {loss}, [tp, li, oi, n, target, lp = std::move(lp)] {
    const double g = tp->grad(oi)[0];
    double* gx = tp->grad(li);
    for (std::size_t i = 0; i < n; ++i) gx[i] += g * std::exp(lp[i]);
    gx[target] -= g;
  });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace pup::ad
