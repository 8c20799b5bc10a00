#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toxvid {

enum class Task : std::size_t { toxicity = 0, severity = 1, sentiment = 2 };

inline constexpr std::array<Task, 3> kAllTasks{Task::toxicity, Task::severity, Task::sentiment};

constexpr std::size_t class_count(Task t) noexcept { return t == Task::toxicity ? 2 : 3; }

constexpr std::string_view task_name(Task t) noexcept {
  switch (t) {
    case Task::toxicity: return "toxicity";
    case Task::severity: return "severity";
    case Task::sentiment: return "sentiment";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  for (Task t : kAllTasks)
    if (task_name(t) == s) return t;
  throw std::invalid_argument("unknown task: " + std::string(s));
}

enum class Modality { text, video, audio };

constexpr std::string_view modality_name(Modality m) noexcept {
  switch (m) {
    case Modality::text: return "text";
    case Modality::video: return "video";
    case Modality::audio: return "audio";
  }
  return "?";
}

inline Modality parse_modality(std::string_view s) {
  for (Modality m : {Modality::text, Modality::video, Modality::audio})
    if (modality_name(m) == s) return m;
  throw std::invalid_argument("unknown modality: " + std::string(s));
}

/// toxicity: 0 non-toxic, 1 toxic. severity: 0 none, 1 mild, 2 strong.
/// sentiment: 0 positive, 1 neutral, 2 negative.
struct TaskLabels {
  int toxicity = 0;
  int severity = 0;
  int sentiment = 1;

  int get(Task t) const noexcept {
    switch (t) {
      case Task::toxicity: return toxicity;
      case Task::severity: return severity;
      case Task::sentiment: return sentiment;
    }
    return 0;
  }
  void set(Task t, int v) noexcept {
    switch (t) {
      case Task::toxicity: toxicity = v; break;
      case Task::severity: severity = v; break;
      case Task::sentiment: sentiment = v; break;
    }
  }
  friend bool operator==(const TaskLabels&, const TaskLabels&) = default;
};

}  // namespace toxvid
