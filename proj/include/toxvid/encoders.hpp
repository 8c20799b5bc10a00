#pragma once

// Modality encoder contract. Anything that produces a FeatureMatrix of shape
// SL_m x d_m can feed the synchronization module; at desk scale that source is
// either a deterministic stub or a precomputed TXVF file.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxvid/labels.hpp"
#include "toxvid/matrix.hpp"
#include "toxvid/rng.hpp"

namespace toxvid {

struct EncoderSpec {
  Modality modality = Modality::video;
  std::size_t dim = 16;
  std::size_t length = 16;
  double cue_strength = 0.0;
  std::uint64_t seed = 0;
};

struct EncodedModality {
  Modality modality = Modality::video;
  FeatureMatrix features;
};

/// One active label cue: the pattern for (task, bit) is added to the features.
struct CueBit {
  Task task = Task::toxicity;
  int bit = 0;
  friend bool operator==(const CueBit&, const CueBit&) = default;
};

/**
 * Unit-Frobenius-norm cue pattern for (task, bit), a pure function of the
 * encoder spec. Patterns are constant along the sequence axis (a fixed feature
 * direction scaled by 1/sqrt(SL_m)), so length pooling preserves them.
 */
inline Matrix<double> cue_pattern(const EncoderSpec& spec, Task task, int bit) {
  const std::string tag = "cue-pattern:" + std::string(modality_name(spec.modality)) + ":" +
                          std::string(task_name(task));
  const std::uint64_t key = derive_seed(spec.seed, tag, static_cast<std::uint64_t>(bit));
  std::vector<double> dir(spec.dim);
  double norm = 0;
  for (std::size_t j = 0; j < spec.dim; ++j) {
    dir[j] = counter_normal(key, j);
    norm += dir[j] * dir[j];
  }
  norm = std::sqrt(norm);
  const double time_scale = 1.0 / std::sqrt(static_cast<double>(spec.length));
  Matrix<double> p(spec.length, spec.dim);
  for (std::size_t r = 0; r < spec.length; ++r)
    for (std::size_t j = 0; j < spec.dim; ++j) p(r, j) = dir[j] / norm * time_scale;
  return p;
}

/// Seeded base features keyed on a stable hash of the record id, plus
/// cue_strength times the pattern of each active cue.
inline EncodedModality stub_encode(const std::string& record_id, const std::vector<CueBit>& label_cues,
                                   const EncoderSpec& spec) {
  if (spec.dim < 1 || spec.length < 1) {
    throw std::invalid_argument("stub_encode: encoder dims must be >= 1");
  }
  const std::uint64_t key =
      splitmix64(derive_seed(spec.seed, "stub-base:" + std::string(modality_name(spec.modality))) ^
                 stable_hash(record_id));
  Matrix<double> acc(spec.length, spec.dim);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = counter_normal(key, i);
  if (spec.cue_strength != 0.0) {
    for (const auto& cue : label_cues) {
      const auto p = cue_pattern(spec, cue.task, cue.bit);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += spec.cue_strength * p[i];
    }
  }
  return {spec.modality, acc.cast<float>()};
}

}  // namespace toxvid
