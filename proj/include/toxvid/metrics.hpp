#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxvid/matrix.hpp"

namespace toxvid {

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  require_same_length(y_true.size(), y_pred.size(), "accuracy");
  if (y_true.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

/// K x K counts, rows = true class, cols = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k) : k_(k), counts_(k * k, 0) {
    require_same_length(y_true.size(), y_pred.size(), "confusion matrix");
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const int t = y_true[i], p = y_pred[i];
      if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
        throw std::out_of_range("confusion matrix: label outside [0, " + std::to_string(k) + ")");
      }
      ++counts_[static_cast<std::size_t>(t) * k + static_cast<std::size_t>(p)];
    }
    total_ = y_true.size();
  }

  std::size_t classes() const noexcept { return k_; }
  std::size_t total() const noexcept { return total_; }
  std::size_t at(std::size_t t, std::size_t p) const { return counts_[t * k_ + p]; }

  std::size_t support(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < k_; ++p) s += at(c, p);
    return s;
  }
  std::size_t predicted(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < k_; ++t) s += at(t, c);
    return s;
  }

  /// F1 for class c; 0 when precision + recall = 0.
  double f1(std::size_t c) const {
    const double tp = static_cast<double>(at(c, c));
    const double pred = static_cast<double>(predicted(c));
    const double sup = static_cast<double>(support(c));
    const double precision = pred > 0 ? tp / pred : 0.0;
    const double recall = sup > 0 ? tp / sup : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }

 private:
  std::size_t k_;
  std::size_t total_ = 0;
  std::vector<std::size_t> counts_;
};

/// Per-class F1 averaged with true-class support weights.
inline double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k) {
  ConfusionMatrix cm(y_true, y_pred, k);
  if (cm.total() == 0) throw std::invalid_argument("weighted_f1: empty input");
  double acc = 0;
  for (std::size_t c = 0; c < k; ++c) acc += static_cast<double>(cm.support(c)) * cm.f1(c);
  return acc / static_cast<double>(cm.total());
}

// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("incomplete_beta: a and b must be positive");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  /// Both samples constant but different: t is infinite and p = 0.
  bool divergent = false;
};

inline double sample_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Unbiased (n - 1) sample variance.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: each sample needs at least 2 values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = sample_mean(a), mb = sample_mean(b);
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  WelchResult r;
  if (se2 == 0.0) {
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p = 0.0;
    r.divergent = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = std::min(1.0, std::max(0.0, student_t_two_sided_p(r.t, r.df)));
  return r;
}

}  // namespace toxvid
