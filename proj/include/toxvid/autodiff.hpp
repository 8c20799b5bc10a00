#pragma once

// Minimal reverse-mode automatic differentiation over dense 2-D matrices.
//
// A forward pass builds a graph of Node objects linked through shared_ptr; the
// graph is freed when the last Var referring to its output goes away.
// Parameters are leaf nodes that outlive the graphs built on top of them and
// accumulate gradients across backward calls until explicitly zeroed.
//
// Single-threaded per graph. Matrices may be copied across threads freely.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "toxvid/matrix.hpp"

namespace toxvid {

/// Per-row keep flags; 1 marks a real (unmasked) position.
using RowMask = std::vector<std::uint8_t>;

namespace ad {

template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Matrix<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->op = "constant";
    return Var(std::move(n));
  }

  static Var parameter(Matrix<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->grad = Matrix<T>(value.rows(), value.cols());
    n->value = std::move(value);
    n->requires_grad = true;
    n->op = "parameter";
    return Var(std::move(n));
  }

  bool valid() const noexcept { return node_ != nullptr; }
  const Matrix<T>& value() const { return node_->value; }
  Matrix<T>& mutable_value() { return node_->value; }
  const Matrix<T>& grad() const { return node_->grad; }
  Matrix<T>& mutable_grad() { return node_->grad; }
  bool requires_grad() const noexcept { return node_->requires_grad; }
  std::size_t rows() const noexcept { return node_->value.rows(); }
  std::size_t cols() const noexcept { return node_->value.cols(); }
  const char* op() const noexcept { return node_->op; }
  /// Scalar value of a 1x1 result.
  T item() const { return node_->value[0]; }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.fill(T(0));
  }
  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace detail {

template <typename T>
Var<T> record(Matrix<T> value, const char* op, std::vector<Var<T>> inputs,
              std::function<void(Node<T>&)> backward) {
  auto n = std::make_shared<Node<T>>();
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (needs) {
    n->grad = Matrix<T>(value.rows(), value.cols());
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (auto& in : inputs) n->inputs.push_back(in.node());
    n->backward = std::move(backward);
  }
  n->value = std::move(value);
  n->op = op;
  return Var<T>(std::move(n));
}

// C += A * B, A: m x k, B: k x n.
template <typename T>
void gemm_nn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const T av = a(i, t);
      if (av == T(0)) continue;
      const T* brow = b.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T, A: m x k, B: n x k.
template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b.data() + j * k;
      T s = 0;
      for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
      c(i, j) += s;
    }
  }
}

// C += A^T * B, A: k x m, B: k x n.
template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  for (std::size_t t = 0; t < k; ++t) {
    const T* brow = b.data() + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a(t, i);
      if (av == T(0)) continue;
      T* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
T stable_sigmoid(T x) {
  T s;
  if (x >= 0) {
    s = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  // Keep the open-interval contract even where the exact value rounds to 0 or 1.
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  return std::min(std::max(s, lo), hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.value().shape() + " x " + b.value().shape());
  }
  Matrix<T> out(a.rows(), b.cols());
  detail::gemm_nn(a.value(), b.value(), out);
  return detail::record<T>(std::move(out), "matmul", {a, b}, [](Node<T>& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad) detail::gemm_nt(self.grad, B.value, A.grad);
    if (B.requires_grad) detail::gemm_tn(A.value, self.grad, B.grad);
  });
}

/// A * B^T without materializing the transpose.
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: shape mismatch " + a.value().shape() + " x (" +
                     b.value().shape() + ")^T");
  }
  Matrix<T> out(a.rows(), b.rows());
  detail::gemm_nt(a.value(), b.value(), out);
  return detail::record<T>(std::move(out), "matmul_nt", {a, b}, [](Node<T>& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad) detail::gemm_nn(self.grad, B.value, A.grad);
    if (B.requires_grad) detail::gemm_tn(self.grad, A.value, B.grad);
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  const auto& v = a.value();
  Matrix<T> out(v.cols(), v.rows());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(j, i) = v(i, j);
  return detail::record<T>(std::move(out), "transpose", {a}, [](Node<T>& self) {
    auto& A = *self.inputs[0];
    for (std::size_t i = 0; i < A.grad.rows(); ++i)
      for (std::size_t j = 0; j < A.grad.cols(); ++j) A.grad(i, j) += self.grad(j, i);
  });
}

/// X * W + b, with the 1 x d_out bias broadcast over rows.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("linear: shape mismatch X " + x.value().shape() + ", W " +
                     w.value().shape() + ", b " + b.value().shape());
  }
  Matrix<T> out(x.rows(), w.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = b.value()[j];
  detail::gemm_nn(x.value(), w.value(), out);
  return detail::record<T>(std::move(out), "linear", {x, w, b}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    auto& W = *self.inputs[1];
    auto& B = *self.inputs[2];
    if (X.requires_grad) detail::gemm_nt(self.grad, W.value, X.grad);
    if (W.requires_grad) detail::gemm_tn(X.value, self.grad, W.grad);
    if (B.requires_grad) {
      for (std::size_t i = 0; i < self.grad.rows(); ++i)
        for (std::size_t j = 0; j < self.grad.cols(); ++j) B.grad[j] += self.grad(i, j);
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  Matrix<T>::require_same_shape(a.value(), b.value(), "add");
  Matrix<T> out = a.value();
  out += b.value();
  return detail::record<T>(std::move(out), "add", {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) in->grad += self.grad;
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  Matrix<T>::require_same_shape(a.value(), b.value(), "sub");
  Matrix<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return detail::record<T>(std::move(out), "sub", {a, b}, [](Node<T>& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad) A.grad += self.grad;
    if (B.requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) B.grad[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> hadamard(const Var<T>& a, const Var<T>& b) {
  Matrix<T>::require_same_shape(a.value(), b.value(), "hadamard");
  Matrix<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return detail::record<T>(std::move(out), "hadamard", {a, b}, [](Node<T>& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (A.requires_grad) A.grad[i] += self.grad[i] * B.value[i];
      if (B.requires_grad) B.grad[i] += self.grad[i] * A.value[i];
    }
  });
}

/// Adds a 1 x n row vector to every row of X.
template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row: shape mismatch " + x.value().shape() + " + " + row.value().shape());
  }
  Matrix<T> out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += row.value()[j];
  return detail::record<T>(std::move(out), "add_row", {x, row}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    auto& R = *self.inputs[1];
    if (X.requires_grad) X.grad += self.grad;
    if (R.requires_grad)
      for (std::size_t i = 0; i < self.grad.rows(); ++i)
        for (std::size_t j = 0; j < self.grad.cols(); ++j) R.grad[j] += self.grad(i, j);
  });
}

/// Adds a 1 x 1 value to every entry of X.
template <typename T>
Var<T> add_scalar(const Var<T>& x, const Var<T>& s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw ShapeError("add_scalar: expected 1x1 scalar, got " + s.value().shape());
  }
  Matrix<T> out = x.value();
  const T sv = s.value()[0];
  for (auto& v : out.flat()) v += sv;
  return detail::record<T>(std::move(out), "add_scalar", {x, s}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    auto& S = *self.inputs[1];
    if (X.requires_grad) X.grad += self.grad;
    if (S.requires_grad)
      for (T g : self.grad.flat()) S.grad[0] += g;
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  Matrix<T> out = x.value();
  for (auto& v : out.flat()) v *= c;
  return detail::record<T>(std::move(out), "scale", {x}, [c](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) X.grad[i] += c * self.grad[i];
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Matrix<T> out = x.value();
  for (auto& v : out.flat()) v = detail::stable_sigmoid(v);
  return detail::record<T>(std::move(out), "sigmoid", {x}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T s = self.value[i];
      X.grad[i] += self.grad[i] * s * (T(1) - s);
    }
  });
}

/// GELU, tanh approximation.
template <typename T>
Var<T> gelu(const Var<T>& x) {
  constexpr T k = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T c = T(0.044715);
  Matrix<T> out = x.value();
  for (auto& v : out.flat()) v = T(0.5) * v * (T(1) + std::tanh(k * (v + c * v * v * v)));
  return detail::record<T>(std::move(out), "gelu", {x}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T v = X.value[i];
      const T t = std::tanh(k * (v + c * v * v * v));
      const T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * k * (T(1) + T(3) * c * v * v);
      X.grad[i] += self.grad[i] * d;
    }
  });
}

/**
 * Elementwise convex mix alpha * a + (1 - alpha) * b.
 *
 * The result is clamped into [min(a, b), max(a, b)] so the convexity contract
 * holds exactly in floating point; the clamp only ever moves a value by
 * rounding error and is ignored in the backward pass.
 */
template <typename T>
Var<T> convex_mix(const Var<T>& alpha, const Var<T>& a, const Var<T>& b) {
  Matrix<T>::require_same_shape(alpha.value(), a.value(), "convex_mix");
  Matrix<T>::require_same_shape(a.value(), b.value(), "convex_mix");
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T w = alpha.value()[i], av = a.value()[i], bv = b.value()[i];
    const T m = w * av + (T(1) - w) * bv;
    out[i] = std::min(std::max(m, std::min(av, bv)), std::max(av, bv));
  }
  return detail::record<T>(std::move(out), "convex_mix", {alpha, a, b}, [](Node<T>& self) {
    auto& W = *self.inputs[0];
    auto& A = *self.inputs[1];
    auto& B = *self.inputs[2];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T g = self.grad[i], w = W.value[i];
      if (W.requires_grad) W.grad[i] += g * (A.value[i] - B.value[i]);
      if (A.requires_grad) A.grad[i] += g * w;
      if (B.requires_grad) B.grad[i] += g * (T(1) - w);
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax family

/**
 * Row-wise softmax with max subtraction. When `col_mask` is given, masked
 * columns get probability exactly 0 and their input values are never read.
 * A row with every column masked is an error.
 */
template <typename T>
Var<T> masked_rowwise_softmax(const Var<T>& x, const RowMask* col_mask) {
  const auto& v = x.value();
  if (col_mask && col_mask->size() != v.cols()) {
    throw ShapeError("masked_rowwise_softmax: mask length " + std::to_string(col_mask->size()) +
                     " vs " + std::to_string(v.cols()) + " columns");
  }
  auto keep = [&](std::size_t j) { return !col_mask || (*col_mask)[j] != 0; };
  Matrix<T> out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < v.cols(); ++j)
      if (keep(j)) mx = std::max(mx, v(i, j));
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw std::invalid_argument("masked_rowwise_softmax: every column is masked");
    }
    T sum = 0;
    for (std::size_t j = 0; j < v.cols(); ++j) {
      if (!keep(j)) continue;
      out(i, j) = std::exp(v(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) /= sum;
  }
  return detail::record<T>(std::move(out), "softmax", {x}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    const auto& y = self.value;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      T dot = 0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += self.grad(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) X.grad(i, j) += y(i, j) * (self.grad(i, j) - dot);
    }
  });
}

template <typename T>
Var<T> rowwise_softmax(const Var<T>& x) {
  return masked_rowwise_softmax<T>(x, nullptr);
}

/// -log softmax(logits)[label] for a 1 x K logit row, via log-sum-exp.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::size_t label) {
  const auto& z = logits.value();
  if (z.rows() != 1) throw ShapeError("cross_entropy: expected 1xK logits, got " + z.shape());
  if (label >= z.cols()) {
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(z.cols()) + " classes");
  }
  T mx = z[0];
  for (std::size_t j = 1; j < z.cols(); ++j) mx = std::max(mx, z[j]);
  T sum = 0;
  for (std::size_t j = 0; j < z.cols(); ++j) sum += std::exp(z[j] - mx);
  const T lse = mx + std::log(sum);
  Matrix<T> out(1, 1, std::max(T(0), lse - z[label]));
  return detail::record<T>(std::move(out), "cross_entropy", {logits}, [label, lse](Node<T>& self) {
    auto& Z = *self.inputs[0];
    const T g = self.grad[0];
    for (std::size_t j = 0; j < Z.value.cols(); ++j) {
      const T p = std::exp(Z.value[j] - lse);
      Z.grad[j] += g * (p - (j == label ? T(1) : T(0)));
    }
  });
}

// ---------------------------------------------------------------------------
// Sequence ops

/**
 * 1-D convolution along the sequence (row) axis with zero padding.
 * `kernel` has shape (kernel_size * d_in) x d_out; row k * d_in + c holds the
 * weights applied to input channel c at window offset k.
 */
template <typename T>
Var<T> conv1d_seq(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias,
                  std::size_t kernel_size, std::size_t stride, std::size_t padding) {
  const std::size_t len = x.rows(), d_in = x.cols(), d_out = kernel.cols();
  if (kernel_size < 1 || stride < 1) {
    throw std::invalid_argument("conv1d_seq: kernel size and stride must be >= 1");
  }
  if (kernel.rows() != kernel_size * d_in) {
    throw ShapeError("conv1d_seq: kernel " + kernel.value().shape() + " incompatible with kernel size " +
                     std::to_string(kernel_size) + " and " + std::to_string(d_in) + " input channels");
  }
  if (bias.rows() != 1 || bias.cols() != d_out) {
    throw ShapeError("conv1d_seq: bias " + bias.value().shape() + " vs " + std::to_string(d_out) +
                     " output channels");
  }
  if (len + 2 * padding < kernel_size) {
    throw std::invalid_argument("conv1d_seq: sequence length " + std::to_string(len) +
                                " too short for kernel " + std::to_string(kernel_size));
  }
  const std::size_t out_len = (len + 2 * padding - kernel_size) / stride + 1;
  Matrix<T> out(out_len, d_out);
  const auto& X = x.value();
  const auto& K = kernel.value();
  for (std::size_t o = 0; o < out_len; ++o) {
    T* orow = out.data() + o * d_out;
    for (std::size_t j = 0; j < d_out; ++j) orow[j] = bias.value()[j];
    for (std::size_t k = 0; k < kernel_size; ++k) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(padding);
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
      for (std::size_t c = 0; c < d_in; ++c) {
        const T xv = X(static_cast<std::size_t>(pos), c);
        const T* krow = K.data() + (k * d_in + c) * d_out;
        for (std::size_t j = 0; j < d_out; ++j) orow[j] += xv * krow[j];
      }
    }
  }
  return detail::record<T>(
      std::move(out), "conv1d_seq", {x, kernel, bias},
      [kernel_size, stride, padding, len, d_in, d_out](Node<T>& self) {
        auto& Xn = *self.inputs[0];
        auto& Kn = *self.inputs[1];
        auto& Bn = *self.inputs[2];
        for (std::size_t o = 0; o < self.grad.rows(); ++o) {
          const T* g = self.grad.data() + o * d_out;
          if (Bn.requires_grad)
            for (std::size_t j = 0; j < d_out; ++j) Bn.grad[j] += g[j];
          for (std::size_t k = 0; k < kernel_size; ++k) {
            const std::ptrdiff_t pos =
                static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(padding);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
            const auto p = static_cast<std::size_t>(pos);
            for (std::size_t c = 0; c < d_in; ++c) {
              const std::size_t kr = (k * d_in + c) * d_out;
              if (Xn.requires_grad) {
                T s = 0;
                for (std::size_t j = 0; j < d_out; ++j) s += g[j] * Kn.value[kr + j];
                Xn.grad(p, c) += s;
              }
              if (Kn.requires_grad) {
                const T xv = Xn.value(p, c);
                for (std::size_t j = 0; j < d_out; ++j) Kn.grad[kr + j] += xv * g[j];
              }
            }
          }
        }
      });
}

/// Row range [begin, end) averaged into output row `i` when pooling `len` rows to `target`.
inline std::pair<std::size_t, std::size_t> pool_segment(std::size_t i, std::size_t len, std::size_t target) {
  const std::size_t begin = (i * len) / target;
  const std::size_t end = ((i + 1) * len + target - 1) / target;
  return {begin, end};
}

/// Uniform segment mean pooling of the rows of X down (or up) to exactly `target` rows.
template <typename T>
Var<T> segment_mean_pool(const Var<T>& x, std::size_t target) {
  if (target < 1) throw std::invalid_argument("segment_mean_pool: target length must be >= 1");
  const std::size_t len = x.rows(), d = x.cols();
  if (len < 1) throw std::invalid_argument("segment_mean_pool: empty input");
  Matrix<T> out(target, d);
  for (std::size_t i = 0; i < target; ++i) {
    const auto [b, e] = pool_segment(i, len, target);
    const T inv = T(1) / static_cast<T>(e - b);
    for (std::size_t r = b; r < e; ++r)
      for (std::size_t j = 0; j < d; ++j) out(i, j) += x.value()(r, j);
    for (std::size_t j = 0; j < d; ++j) out(i, j) *= inv;
  }
  return detail::record<T>(std::move(out), "segment_mean_pool", {x}, [len, target, d](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t i = 0; i < target; ++i) {
      const auto [b, e] = pool_segment(i, len, target);
      const T inv = T(1) / static_cast<T>(e - b);
      for (std::size_t r = b; r < e; ++r)
        for (std::size_t j = 0; j < d; ++j) X.grad(r, j) += self.grad(i, j) * inv;
    }
  });
}

/// Mean over rows, restricted to rows whose mask entry is set.
template <typename T>
Var<T> mean_rows(const Var<T>& x, const RowMask* mask = nullptr) {
  const std::size_t m = x.rows(), d = x.cols();
  if (mask && mask->size() != m) {
    throw ShapeError("mean_rows: mask length " + std::to_string(mask->size()) + " vs " +
                     std::to_string(m) + " rows");
  }
  RowMask keep = mask ? *mask : RowMask(m, 1);
  std::size_t count = 0;
  for (auto k : keep) count += k ? 1 : 0;
  if (count == 0) throw std::invalid_argument("mean_rows: every row is masked");
  const T inv = T(1) / static_cast<T>(count);
  Matrix<T> out(1, d);
  for (std::size_t r = 0; r < m; ++r) {
    if (!keep[r]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += x.value()(r, j);
  }
  for (auto& v : out.flat()) v *= inv;
  return detail::record<T>(std::move(out), "mean_rows", {x}, [keep = std::move(keep), inv](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (std::size_t r = 0; r < X.grad.rows(); ++r) {
      if (!keep[r]) continue;
      for (std::size_t j = 0; j < X.grad.cols(); ++j) X.grad(r, j) += self.grad[j] * inv;
    }
  });
}

template <typename T>
Var<T> embedding_lookup(const Var<T>& table, std::span<const std::size_t> ids) {
  const std::size_t vocab = table.rows(), d = table.cols();
  Matrix<T> out(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw std::out_of_range("embedding_lookup: id " + std::to_string(ids[i]) +
                              " out of range for table with " + std::to_string(vocab) + " rows");
    }
    const auto src = table.value().row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return detail::record<T>(std::move(out), "embedding_lookup", {table}, [idv = std::move(idv)](Node<T>& self) {
    auto& E = *self.inputs[0];
    for (std::size_t i = 0; i < idv.size(); ++i) {
      auto g = self.grad.row(i);
      auto dst = E.grad.row(idv[i]);
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
    }
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t d = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != d) {
      throw ShapeError("concat_rows: column mismatch " + parts.front().value().shape() + " vs " + p.value().shape());
    }
    total += p.rows();
  }
  Matrix<T> out(total, d);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.value().flat().begin(), p.value().flat().end(), out.data() + off * d);
    off += p.rows();
  }
  return detail::record<T>(std::move(out), "concat_rows", parts, [d](Node<T>& self) {
    std::size_t off = 0;
    for (auto& in : self.inputs) {
      if (in->requires_grad)
        for (std::size_t i = 0; i < in->grad.size(); ++i) in->grad[i] += self.grad[off * d + i];
      off += in->value.rows();
    }
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) {
      throw ShapeError("concat_cols: row mismatch " + parts.front().value().shape() + " vs " + p.value().shape());
    }
    total += p.cols();
  }
  Matrix<T> out(m, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
    off += p.cols();
  }
  return detail::record<T>(std::move(out), "concat_cols", parts, [](Node<T>& self) {
    std::size_t off = 0;
    for (auto& in : self.inputs) {
      const std::size_t c = in->value.cols();
      if (in->requires_grad)
        for (std::size_t i = 0; i < in->grad.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) in->grad(i, j) += self.grad(i, off + j);
      off += c;
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T s = 0;
  for (T v : x.value().flat()) s += v;
  return detail::record<T>(Matrix<T>(1, 1, s), "sum", {x}, [](Node<T>& self) {
    auto& X = *self.inputs[0];
    for (auto& g : X.grad.flat()) g += self.grad[0];
  });
}

// ---------------------------------------------------------------------------

/**
 * Reverse pass from a 1x1 loss. Every reachable node is visited exactly once
 * in reverse topological order. Intermediate gradients are reset on each call;
 * parameter gradients accumulate until zeroed.
 */
template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.valid()) throw std::logic_error("backward: empty value");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + loss.value().shape());
  }
  if (!loss.requires_grad()) {
    throw std::logic_error("backward: value was not produced by a recorded computation");
  }

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node<T>* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order)
    if (n->backward) n->grad.fill(T(0));
  loss.node()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

}  // namespace ad
}  // namespace toxvid
