#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "toxvid/labels.hpp"
#include "toxvid/matrix.hpp"

namespace toxvid {

/// A modality's features: held inline, backed by a TXVF file, or both.
struct FeatureRef {
  std::string path;  // relative to the manifest directory; empty when inline only
  std::optional<FeatureMatrix> data;

  bool available() const noexcept { return data.has_value(); }
};

/// Three annotator labels for one task plus the adjudicated outcome.
struct AnnotationTriple {
  std::array<int, 3> labels{};
  int adjudicated = 0;
  bool escalated = false;
  friend bool operator==(const AnnotationTriple&, const AnnotationTriple&) = default;
};

struct Annotations {
  AnnotationTriple toxicity;
  AnnotationTriple severity;
  AnnotationTriple sentiment;

  AnnotationTriple& get(Task t) noexcept {
    return t == Task::toxicity ? toxicity : (t == Task::severity ? severity : sentiment);
  }
  const AnnotationTriple& get(Task t) const noexcept {
    return t == Task::toxicity ? toxicity : (t == Task::severity ? severity : sentiment);
  }
  friend bool operator==(const Annotations&, const Annotations&) = default;
};

struct UtteranceRecord {
  std::string id;
  std::string transcript;
  FeatureRef video;
  FeatureRef audio;
  TaskLabels labels;
  std::optional<Annotations> annotations;
  double duration_seconds = 0.0;
  std::size_t hindi_word_count = 0;
  std::size_t total_word_count = 0;
};

}  // namespace toxvid
