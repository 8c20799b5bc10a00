#pragma once

// Straight-line reference implementations used only by tests. They share no
// code with the library beyond the Matrix container and the RNG.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "toxvid/matrix.hpp"
#include "toxvid/rng.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid grid(const toxvid::Matrix<double>& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

inline toxvid::Matrix<double> random_matrix(std::size_t rows, std::size_t cols, toxvid::Rng& rng, double scale = 1.0) {
  toxvid::Matrix<double> m(rows, cols);
  for (auto& v : m.flat()) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

inline double max_abs_diff(const Grid& a, const toxvid::Matrix<double>& b) {
  if (a.size() != b.rows() || (a.size() && a[0].size() != b.cols())) return INFINITY;
  double d = 0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) d = std::max(d, std::abs(a[r][c] - b(r, c)));
  return d;
}

inline Grid matmul(const Grid& a, const Grid& b) {
  Grid out(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

/// out[o][j] = bias[j] + sum_{k,c} x[o*stride + k - pad][c] * kernel[k*d_in + c][j], zero outside x.
inline Grid conv1d(const Grid& x, const Grid& kernel, const std::vector<double>& bias, std::size_t ks,
                   std::size_t stride, std::size_t pad) {
  const long len = static_cast<long>(x.size());
  const std::size_t d_in = x[0].size(), d_out = bias.size();
  const std::size_t out_len = (x.size() + 2 * pad - ks) / stride + 1;
  Grid out(out_len, bias);
  for (std::size_t o = 0; o < out_len; ++o)
    for (std::size_t k = 0; k < ks; ++k) {
      const long src = static_cast<long>(o * stride + k) - static_cast<long>(pad);
      if (src < 0 || src >= len) continue;
      for (std::size_t c = 0; c < d_in; ++c)
        for (std::size_t j = 0; j < d_out; ++j) out[o][j] += x[static_cast<std::size_t>(src)][c] * kernel[k * d_in + c][j];
    }
  return out;
}

/// Adaptive average pooling: row i averages [floor(i L / S), ceil((i + 1) L / S)).
inline Grid adaptive_pool(const Grid& x, std::size_t target) {
  const double len = static_cast<double>(x.size());
  Grid out(target, std::vector<double>(x[0].size(), 0.0));
  for (std::size_t i = 0; i < target; ++i) {
    const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(i) * len / static_cast<double>(target)));
    const auto e = static_cast<std::size_t>(std::ceil(static_cast<double>(i + 1) * len / static_cast<double>(target)));
    for (std::size_t r = b; r < e; ++r)
      for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] += x[r][j] / static_cast<double>(e - b);
  }
  return out;
}

inline Grid affine(const Grid& x, const Grid& w, const std::vector<double>& b) {
  Grid out = matmul(x, w);
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return out;
}

inline Grid abstract_features(const Grid& z, const Grid& conv_k, const std::vector<double>& conv_b, const Grid& proj_w,
                              const std::vector<double>& proj_b, std::size_t target) {
  return affine(adaptive_pool(conv1d(z, conv_k, conv_b, 3, 2, 1), target), proj_w, proj_b);
}

struct AttentionResult {
  Grid output;
  std::vector<Grid> weights;
};

/// Multi-head cross-attention written as explicit sums; masked keys get weight 0.
inline AttentionResult mhca(const Grid& q_src, const Grid& kv_src, const std::vector<std::uint8_t>* mask,
                            const std::vector<Grid>& wq, const std::vector<Grid>& wk, const std::vector<Grid>& wv,
                            const Grid& wo) {
  const std::size_t heads = wq.size();
  const std::size_t dk = wq[0][0].size();
  const std::size_t nq = q_src.size(), nk = kv_src.size();
  AttentionResult res;
  Grid concat(nq, std::vector<double>(heads * dk, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    const Grid q = matmul(q_src, wq[h]), k = matmul(kv_src, wk[h]), v = matmul(kv_src, wv[h]);
    Grid w(nq, std::vector<double>(nk, 0.0));
    for (std::size_t i = 0; i < nq; ++i) {
      double mx = -INFINITY;
      std::vector<double> s(nk);
      for (std::size_t j = 0; j < nk; ++j) {
        s[j] = 0;
        for (std::size_t d = 0; d < dk; ++d) s[j] += q[i][d] * k[j][d];
        s[j] /= std::sqrt(static_cast<double>(dk));
        if (!mask || (*mask)[j]) mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (mask && !(*mask)[j]) continue;
        w[i][j] = std::exp(s[j] - mx);
        z += w[i][j];
      }
      for (std::size_t j = 0; j < nk; ++j) w[i][j] /= z;
      for (std::size_t d = 0; d < dk; ++d)
        for (std::size_t j = 0; j < nk; ++j) concat[i][h * dk + d] += w[i][j] * v[j][d];
    }
    res.weights.push_back(std::move(w));
  }
  res.output = matmul(concat, wo);
  return res;
}

struct FusionResult {
  Grid joint, alpha;
};

inline FusionResult gated_fusion(const Grid& cv, const Grid& ca, const Grid& pv, const Grid& pa, double bias) {
  const Grid a = matmul(cv, pv), b = matmul(ca, pa);
  FusionResult r{Grid(cv.size(), std::vector<double>(cv[0].size())), Grid(cv.size(), std::vector<double>(cv[0].size()))};
  for (std::size_t i = 0; i < cv.size(); ++i)
    for (std::size_t j = 0; j < cv[0].size(); ++j) {
      const double al = 1.0 / (1.0 + std::exp(-(a[i][j] + b[i][j] + bias)));
      r.alpha[i][j] = al;
      r.joint[i][j] = al * ca[i][j] + (1.0 - al) * cv[i][j];
    }
  return r;
}

// ---------------------------------------------------------------------------

/// Weighted F1 straight from the definitions of TP, FP and FN per class.
inline double weighted_f1(const std::vector<int>& y, const std::vector<int>& p, int k) {
  double total = 0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) ++support;
      if (y[i] == c && p[i] == c) ++tp;
      if (y[i] != c && p[i] == c) ++fp;
      if (y[i] == c && p[i] != c) ++fn;
    }
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    total += support * f1;
  }
  return total / static_cast<double>(y.size());
}

/// Two-sided Student-t p-value by composite Simpson integration of the density over [0, |t|].
inline double student_t_p(double t, double df, int intervals = 200000) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double b = std::abs(t);
  const double h = b / intervals;
  double s = pdf(0) + pdf(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

/// Fleiss' kappa via P-bar and P-bar_e in floating point.
inline double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  const double items = static_cast<double>(counts.size());
  double n = 0;
  for (int v : counts[0]) n += v;
  double pbar = 0;
  std::vector<double> pj(counts[0].size(), 0.0);
  for (const auto& row : counts) {
    double agree = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      agree += row[j] * (row[j] - 1.0);
      pj[j] += row[j];
    }
    pbar += agree / (n * (n - 1));
  }
  pbar /= items;
  double pe = 0;
  for (double v : pj) pe += (v / (items * n)) * (v / (items * n));
  return (pbar - pe) / (1 - pe);
}

/// Plain scalar Adam with bias correction.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace oracle
