#pragma once

// Cross-modal synchronization: length compression of encoder features into
// fixed-length abstract features, multi-head cross-attention against the text
// embeddings, and a sigmoid-gated elementwise fusion of the video and audio
// soft tokens.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "toxvid/autodiff.hpp"
#include "toxvid/parameters.hpp"
#include "toxvid/text.hpp"

namespace toxvid {

template <typename T>
using Var = ad::Var<T>;

inline constexpr std::size_t kAbstractConvKernel = 3;
inline constexpr std::size_t kAbstractConvStride = 2;
inline constexpr std::size_t kAbstractConvPadding = 1;

/// Conv (d_m -> d_m) followed by a linear projection d_m -> d_t.
template <typename T>
struct AbstractFeatureParams {
  Var<T> conv_kernel;  // (3 * d_m) x d_m
  Var<T> conv_bias;    // 1 x d_m
  Var<T> proj_weight;  // d_m x d_t
  Var<T> proj_bias;    // 1 x d_t

  static AbstractFeatureParams create(ParameterSet<T>& ps, const std::string& prefix, std::size_t d_m,
                                      std::size_t d_t, Rng& rng) {
    const std::size_t k = kAbstractConvKernel;
    return {ps.add(prefix + ".conv.weight", init::xavier_uniform<T>(k * d_m, d_m, k * d_m, d_m, rng)),
            ps.add(prefix + ".conv.bias", Matrix<T>(1, d_m)),
            ps.add(prefix + ".proj.weight", init::xavier_uniform<T>(d_m, d_t, rng)),
            ps.add(prefix + ".proj.bias", Matrix<T>(1, d_t))};
  }
};

/**
 * Compresses an SL_m x d_m encoder output into exactly `target_len` rows of
 * width d_t: strided conv (kernel 3, stride 2, padding 1), uniform segment
 * mean pooling to target_len, then the linear projection.
 */
template <typename T>
Var<T> abstract_features(const Var<T>& z, const AbstractFeatureParams<T>& p, std::size_t target_len) {
  if (target_len < 1) throw std::invalid_argument("abstract_features: target length must be >= 1");
  if (z.rows() < 1) throw std::invalid_argument("abstract_features: empty encoder output");
  auto conv = ad::conv1d_seq<T>(z, p.conv_kernel, p.conv_bias, kAbstractConvKernel, kAbstractConvStride,
                                kAbstractConvPadding);
  auto pooled = ad::segment_mean_pool<T>(conv, target_len);
  return ad::linear<T>(pooled, p.proj_weight, p.proj_bias);
}

/// Per-head query/key/value projections (d_model x d_k each) and an output
/// projection (d_model x d_model). No biases.
template <typename T>
struct AttentionParams {
  std::size_t heads = 1;
  std::size_t head_dim = 0;
  std::vector<Var<T>> query;
  std::vector<Var<T>> key;
  std::vector<Var<T>> value;
  Var<T> output;

  static AttentionParams create(ParameterSet<T>& ps, const std::string& prefix, std::size_t d_model,
                                std::size_t heads, Rng& rng) {
    if (heads < 1 || d_model % heads != 0) {
      throw std::invalid_argument("attention: heads (" + std::to_string(heads) + ") must divide d_model (" +
                                  std::to_string(d_model) + ")");
    }
    AttentionParams a;
    a.heads = heads;
    a.head_dim = d_model / heads;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::string hp = prefix + ".head" + std::to_string(h);
      a.query.push_back(ps.add(hp + ".query", init::xavier_uniform<T>(d_model, a.head_dim, rng)));
      a.key.push_back(ps.add(hp + ".key", init::xavier_uniform<T>(d_model, a.head_dim, rng)));
      a.value.push_back(ps.add(hp + ".value", init::xavier_uniform<T>(d_model, a.head_dim, rng)));
    }
    a.output = ps.add(prefix + ".output", init::xavier_uniform<T>(d_model, d_model, rng));
    return a;
  }
};

template <typename T>
struct AttentionOutput {
  Var<T> output;
  std::vector<Matrix<T>> weights;  // per head, SL_q x SL_k
};

/**
 * Multi-head cross-attention. Per head h:
 *   softmax((Q W_Q^h)(KV W_K^h)^T / sqrt(d_k)) (KV W_V^h)
 * with masked keys excluded from the softmax; heads are concatenated and
 * projected by W_O.
 */
template <typename T>
AttentionOutput<T> mhca_detailed(const Var<T>& q_src, const Var<T>& kv_src, const RowMask* kv_mask,
                                 const AttentionParams<T>& p) {
  if (kv_src.rows() < 1) throw std::invalid_argument("mhca: no keys");
  if (q_src.cols() != kv_src.cols()) {
    throw ShapeError("mhca: query width " + std::to_string(q_src.cols()) + " vs key width " +
                     std::to_string(kv_src.cols()));
  }
  if (kv_mask && std::none_of(kv_mask->begin(), kv_mask->end(), [](auto m) { return m != 0; })) {
    throw std::invalid_argument("mhca: every key is masked");
  }
  const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(p.head_dim));
  AttentionOutput<T> out;
  std::vector<Var<T>> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    auto q = ad::matmul<T>(q_src, p.query[h]);
    auto k = ad::matmul<T>(kv_src, p.key[h]);
    auto v = ad::matmul<T>(kv_src, p.value[h]);
    auto scores = ad::scale<T>(ad::matmul_nt<T>(q, k), inv_sqrt_dk);
    auto attn = ad::masked_rowwise_softmax<T>(scores, kv_mask);
    out.weights.push_back(attn.value());
    heads.push_back(ad::matmul<T>(attn, v));
  }
  auto merged = p.heads == 1 ? heads.front() : ad::concat_cols<T>(heads);
  out.output = ad::matmul<T>(merged, p.output);
  return out;
}

template <typename T>
Var<T> mhca(const Var<T>& q_src, const Var<T>& kv_src, const RowMask* kv_mask, const AttentionParams<T>& p) {
  return mhca_detailed<T>(q_src, kv_src, kv_mask, p).output;
}

/// Video and audio abstract features re-expressed in the text embedding space.
template <typename T>
std::pair<Var<T>, Var<T>> align_soft_tokens(const Var<T>& c_video, const Var<T>& c_audio,
                                            const TextEmbeddings<T>& text, const AttentionParams<T>& params_video,
                                            const AttentionParams<T>& params_audio) {
  return {mhca<T>(c_video, text.embeddings, &text.mask, params_video),
          mhca<T>(c_audio, text.embeddings, &text.mask, params_audio)};
}

/// Gate weights P_v, P_a (d_t x d_t, right-multiplied) and scalar bias b_g.
template <typename T>
struct GateParams {
  Var<T> video;
  Var<T> audio;
  Var<T> bias;

  static GateParams create(ParameterSet<T>& ps, const std::string& prefix, std::size_t d_t, Rng& rng) {
    return {ps.add(prefix + ".video", init::xavier_uniform<T>(d_t, d_t, rng)),
            ps.add(prefix + ".audio", init::xavier_uniform<T>(d_t, d_t, rng)),
            ps.add(prefix + ".bias", Matrix<T>(1, 1))};
  }
};

template <typename T>
struct FusedTokens {
  Var<T> joint;  // J_va
  Var<T> alpha;  // elementwise gate
};

/// alpha = sigmoid(C_v^s P_v + C_a^s P_a + b_g);  J_va = alpha * C_a^s + (1 - alpha) * C_v^s.
template <typename T>
FusedTokens<T> gated_fusion(const Var<T>& soft_video, const Var<T>& soft_audio, const GateParams<T>& g) {
  Matrix<T>::require_same_shape(soft_video.value(), soft_audio.value(), "gated_fusion");
  auto pre = ad::add<T>(ad::matmul<T>(soft_video, g.video), ad::matmul<T>(soft_audio, g.audio));
  auto alpha = ad::sigmoid<T>(ad::add_scalar<T>(pre, g.bias));
  return {ad::convex_mix<T>(alpha, soft_audio, soft_video), alpha};
}

}  // namespace toxvid
