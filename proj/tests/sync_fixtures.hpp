#pragma once

// Random instances of the synchronization modules paired with their loop oracles.

#include "oracles.hpp"
#include "toxvid/sync.hpp"

namespace fixtures {

using toxvid::Matrix;
using toxvid::ParameterSet;
using toxvid::Rng;
using V = toxvid::ad::Var<double>;

inline std::vector<oracle::Grid> grids(const std::vector<V>& vs) {
  std::vector<oracle::Grid> out;
  for (const auto& v : vs) out.push_back(oracle::grid(v.value()));
  return out;
}

inline std::vector<double> row(const V& v) { return std::vector<double>(v.value().flat().begin(), v.value().flat().end()); }

struct MhcaInstance {
  ParameterSet<double> ps;
  toxvid::AttentionParams<double> params;
  Matrix<double> q, kv;
  toxvid::RowMask mask;

  explicit MhcaInstance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t heads = 1 + rng.below(3);
    const std::size_t d = heads * (1 + rng.below(4));
    params = toxvid::AttentionParams<double>::create(ps, "attn", d, heads, rng);
    q = oracle::random_matrix(1 + rng.below(6), d, rng, 2.0);
    kv = oracle::random_matrix(1 + rng.below(8), d, rng, 2.0);
    mask.assign(kv.rows(), 1);
    for (std::size_t j = 1; j < mask.size(); ++j) mask[j] = rng.bernoulli(0.7) ? 1 : 0;
  }

  oracle::AttentionResult expected() const {
    return oracle::mhca(oracle::grid(q), oracle::grid(kv), &mask, grids(params.query), grids(params.key),
                        grids(params.value), oracle::grid(params.output.value()));
  }
};

struct GateInstance {
  ParameterSet<double> ps;
  toxvid::GateParams<double> params;
  Matrix<double> cv, ca;

  explicit GateInstance(std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    const std::size_t d = 1 + rng.below(6), rows = 1 + rng.below(6);
    params = toxvid::GateParams<double>::create(ps, "gate", d, rng);
    params.bias.mutable_value()[0] = rng.uniform(-1, 1);
    cv = oracle::random_matrix(rows, d, rng, scale);
    ca = oracle::random_matrix(rows, d, rng, scale);
  }

  oracle::FusionResult expected() const {
    return oracle::gated_fusion(oracle::grid(cv), oracle::grid(ca), oracle::grid(params.video.value()),
                                oracle::grid(params.audio.value()), params.bias.value()[0]);
  }
};

struct AbstractInstance {
  ParameterSet<double> ps;
  toxvid::AbstractFeatureParams<double> params;
  Matrix<double> z;
  std::size_t target;

  explicit AbstractInstance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t dm = 1 + rng.below(5), dt = 1 + rng.below(6);
    params = toxvid::AbstractFeatureParams<double>::create(ps, "abs", dm, dt, rng);
    for (auto* b : {&params.conv_bias, &params.proj_bias})
      for (auto& v : b->mutable_value().flat()) v = rng.uniform(-1, 1);
    z = oracle::random_matrix(1 + rng.below(40), dm, rng);
    target = 1 + rng.below(10);
  }

  oracle::Grid expected() const {
    return oracle::abstract_features(oracle::grid(z), oracle::grid(params.conv_kernel.value()), row(params.conv_bias),
                                     oracle::grid(params.proj_weight.value()), row(params.proj_bias), target);
  }
};

struct ConvInstance {
  Matrix<double> x, kernel, bias;
  std::size_t ks, stride, pad;

  explicit ConvInstance(std::uint64_t seed) {
    Rng rng(seed);
    ks = 1 + rng.below(4);
    stride = 1 + rng.below(3);
    pad = rng.below(3);
    const std::size_t din = 1 + rng.below(4), dout = 1 + rng.below(4);
    x = oracle::random_matrix(ks + rng.below(12), din, rng);
    kernel = oracle::random_matrix(ks * din, dout, rng);
    bias = oracle::random_matrix(1, dout, rng);
  }

  oracle::Grid expected() const {
    return oracle::conv1d(oracle::grid(x), oracle::grid(kernel), std::vector<double>(bias.flat().begin(), bias.flat().end()),
                          ks, stride, pad);
  }
};

}  // namespace fixtures
