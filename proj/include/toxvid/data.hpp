#pragma once

// Synthetic code-mixed utterance corpora, manifest I/O, annotation simulation,
// inter-annotator agreement and corpus statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxvid/encoders.hpp"
#include "toxvid/feature_file.hpp"
#include "toxvid/labels.hpp"
#include "toxvid/record.hpp"
#include "toxvid/rng.hpp"
#include "toxvid/wordlists.hpp"

namespace toxvid {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Preset { toxcmm_marginals, crossmodal_xor };

inline std::string_view preset_name(Preset p) {
  return p == Preset::toxcmm_marginals ? "toxcmm-marginals" : "crossmodal-xor";
}

inline Preset parse_preset(std::string_view s) {
  if (s == "toxcmm-marginals") return Preset::toxcmm_marginals;
  if (s == "crossmodal-xor") return Preset::crossmodal_xor;
  throw std::invalid_argument("unknown preset '" + std::string(s) + "' (expected toxcmm-marginals or crossmodal-xor)");
}

/// Per-task class totals. Severity 0 must equal the non-toxic count.
struct ClassCounts {
  std::size_t non_toxic = 0;
  std::size_t toxic = 0;
  std::array<std::size_t, 3> severity{};
  std::array<std::size_t, 3> sentiment{};

  std::size_t total() const noexcept { return non_toxic + toxic; }

  void validate(std::size_t expected_total) const {
    if (total() != expected_total) {
      throw std::invalid_argument("class counts sum to " + std::to_string(total()) + ", expected " +
                                  std::to_string(expected_total));
    }
    if (severity[0] + severity[1] + severity[2] != expected_total ||
        sentiment[0] + sentiment[1] + sentiment[2] != expected_total) {
      throw std::invalid_argument("severity and sentiment counts must each sum to the total");
    }
    if (severity[0] != non_toxic) {
      throw std::invalid_argument("severity-0 count must equal the non-toxic count");
    }
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// Reference corpus: 4021 utterances.
inline constexpr ClassCounts kToxCmmCounts{2324, 1697, {2324, 834, 863}, {469, 1401, 2151}};

/// The reference class proportions rescaled to `total` (exact at 4021).
inline ClassCounts scaled_toxcmm_counts(std::size_t total) {
  const double n0 = static_cast<double>(kToxCmmCounts.total());
  auto share = [&](std::size_t part, std::size_t whole, double of) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(part) * of / static_cast<double>(whole)));
  };
  ClassCounts c;
  c.toxic = share(kToxCmmCounts.toxic, kToxCmmCounts.total(), static_cast<double>(total));
  c.non_toxic = total - c.toxic;
  c.severity[0] = c.non_toxic;
  c.severity[1] = share(kToxCmmCounts.severity[1], kToxCmmCounts.toxic, static_cast<double>(c.toxic));
  c.severity[2] = c.toxic - c.severity[1];
  c.sentiment[0] = static_cast<std::size_t>(std::llround(469.0 * static_cast<double>(total) / n0));
  c.sentiment[1] = static_cast<std::size_t>(std::llround(1401.0 * static_cast<double>(total) / n0));
  c.sentiment[2] = total - c.sentiment[0] - c.sentiment[1];
  return c;
}

struct GeneratorSpec {
  Preset preset = Preset::toxcmm_marginals;
  std::size_t total = 4021;
  std::optional<ClassCounts> counts;  // toxcmm-marginals only; defaults to the rescaled reference counts
  double video_cue_strength = 6.0;
  double audio_cue_strength = 6.0;
  /// toxcmm-marginals: probability that a toxic utterance carries a toxic marker word.
  double text_cue_rate = 0.6;
  /// toxcmm-marginals: probability that a non-toxic utterance carries one anyway.
  double text_false_cue_rate = 0.1;
  /// toxcmm-marginals: probability of a sentiment marker word.
  double sentiment_cue_rate = 0.5;
  std::size_t video_len = 16;
  std::size_t video_dim = 16;
  std::size_t audio_len = 32;
  std::size_t audio_dim = 16;
  std::uint64_t seed = 0;

  EncoderSpec video_encoder() const { return {Modality::video, video_dim, video_len, video_cue_strength, seed}; }
  EncoderSpec audio_encoder() const { return {Modality::audio, audio_dim, audio_len, audio_cue_strength, seed}; }

  ClassCounts resolved_counts() const { return counts ? *counts : scaled_toxcmm_counts(total); }

  void validate() const {
    if (total < 1) throw std::invalid_argument("generator: total must be >= 1");
    if (video_cue_strength < 0 || audio_cue_strength < 0) {
      throw std::invalid_argument("generator: cue strengths must be nonnegative");
    }
    for (double p : {text_cue_rate, text_false_cue_rate, sentiment_cue_rate})
      if (p < 0 || p > 1) throw std::invalid_argument("generator: rates must lie in [0, 1]");
    if (preset == Preset::toxcmm_marginals) resolved_counts().validate(total);
  }
};

/// Markers are placed within the first few words so they survive truncation.
inline constexpr std::size_t kMarkerWindow = 8;
/// Per-word probability of drawing from the Hindi list; tuned so the
/// corpus-level Hindi share lands near 68%.
inline constexpr double kHindiWordRate = 0.648;
inline constexpr double kMeanWords = 8.68;
inline constexpr double kMeanDuration = 8.89;

inline bool is_hindi_word(std::string_view w) {
  static const std::unordered_set<std::string_view> hindi = [] {
    std::unordered_set<std::string_view> s(words::kHindi.begin(), words::kHindi.end());
    for (auto x : words::kToxic) s.insert(x);
    for (auto x : words::kPositive) s.insert(x);
    for (auto x : words::kNeutral) s.insert(x);
    for (auto x : words::kNegative) s.insert(x);
    s.insert(words::kCueOn);
    s.insert(words::kCueOff);
    return s;
  }();
  return hindi.contains(w);
}

namespace detail {

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& list, Rng& rng) {
  return list[rng.below(N)];
}

inline std::vector<std::string_view> filler_words(Rng& rng) {
  const double draw = std::round(kMeanWords + 2.0 * rng.normal());
  const auto len = static_cast<std::size_t>(std::clamp(draw, 3.0, 16.0));
  std::vector<std::string_view> w(len);
  for (auto& x : w) x = rng.bernoulli(kHindiWordRate) ? pick(words::kHindi, rng) : pick(words::kEnglish, rng);
  return w;
}

/// Overwrites a word at a distinct random position inside the marker window.
inline void place_marker(std::vector<std::string_view>& w, std::vector<bool>& taken, std::string_view marker, Rng& rng) {
  const std::size_t window = std::min(w.size(), kMarkerWindow);
  for (int tries = 0; tries < 64; ++tries) {
    const std::size_t pos = rng.below(window);
    if (!taken[pos]) {
      w[pos] = marker;
      taken[pos] = true;
      return;
    }
  }
  w.push_back(marker);
  taken.push_back(true);
}

inline void finish_text(UtteranceRecord& r, const std::vector<std::string_view>& w, Rng& rng) {
  std::string t;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) t.push_back(' ');
    t.append(w[i]);
  }
  r.transcript = std::move(t);
  r.total_word_count = w.size();
  r.hindi_word_count = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), is_hindi_word));
  r.duration_seconds = std::max(0.5, kMeanDuration + 2.0 * rng.normal());
}

inline std::string record_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "utt" + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

/// Balanced assignment of `n` items to `k` classes in shuffled order.
inline std::vector<int> balanced_labels(std::size_t n, int k, Rng& rng) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  rng.shuffle(v);
  return v;
}

inline std::vector<UtteranceRecord> generate_toxcmm(const GeneratorSpec& spec) {
  const ClassCounts c = spec.resolved_counts();
  Rng rng(derive_seed(spec.seed, "toxcmm-labels"));

  // Toxic utterances take negative sentiment first (85% of them), then neutral;
  // non-toxic utterances absorb the remaining sentiment counts.
  std::array<std::size_t, 3> tox_sent{};
  tox_sent[2] = std::min(c.sentiment[2], static_cast<std::size_t>(std::floor(0.85 * static_cast<double>(c.toxic))));
  tox_sent[1] = std::min(c.sentiment[1], c.toxic - tox_sent[2]);
  tox_sent[0] = c.toxic - tox_sent[2] - tox_sent[1];
  if (tox_sent[0] > c.sentiment[0]) throw std::invalid_argument("generator: sentiment counts cannot be allocated");

  std::vector<TaskLabels> labels;
  labels.reserve(c.total());
  std::vector<int> toxic_sent;
  for (int s = 0; s < 3; ++s) toxic_sent.insert(toxic_sent.end(), tox_sent[static_cast<std::size_t>(s)], s);
  rng.shuffle(toxic_sent);
  for (std::size_t i = 0; i < c.toxic; ++i) labels.push_back({1, i < c.severity[1] ? 1 : 2, toxic_sent[i]});
  std::vector<int> clean_sent;
  for (int s = 0; s < 3; ++s) clean_sent.insert(clean_sent.end(), c.sentiment[static_cast<std::size_t>(s)] - tox_sent[static_cast<std::size_t>(s)], s);
  rng.shuffle(clean_sent);
  for (std::size_t i = 0; i < c.non_toxic; ++i) labels.push_back({0, 0, clean_sent[i]});
  rng.shuffle(labels);

  const auto venc = spec.video_encoder();
  const auto aenc = spec.audio_encoder();
  std::vector<UtteranceRecord> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& r = out[i];
    r.id = record_id(i);
    r.labels = labels[i];
    Rng trng(derive_seed(spec.seed, "toxcmm-text", i));
    auto w = filler_words(trng);
    std::vector<bool> taken(w.size(), false);
    const bool toxic_marker = trng.bernoulli(r.labels.toxicity ? spec.text_cue_rate : spec.text_false_cue_rate);
    if (toxic_marker) place_marker(w, taken, pick(words::kToxic, trng), trng);
    if (trng.bernoulli(spec.sentiment_cue_rate)) {
      const auto s = r.labels.sentiment;
      place_marker(w, taken, s == 0 ? pick(words::kPositive, trng) : s == 1 ? pick(words::kNeutral, trng) : pick(words::kNegative, trng), trng);
    }
    finish_text(r, w, trng);
    // Video carries severity and sentiment; audio carries toxicity.
    std::vector<CueBit> vcues{{Task::sentiment, r.labels.sentiment}};
    if (r.labels.severity > 0) vcues.push_back({Task::severity, r.labels.severity});
    std::vector<CueBit> acues;
    if (r.labels.toxicity) acues.push_back({Task::toxicity, 1});
    r.video.data = stub_encode(r.id, vcues, venc).features;
    r.audio.data = stub_encode(r.id, acues, aenc).features;
  }
  return out;
}

/**
 * toxicity = text cue XOR audio cue, with both cue bits balanced and exactly
 * independent when the total is a multiple of 4. Severity 1 vs 2 follows a
 * video cue; sentiment follows a text marker and is independent of toxicity.
 */
inline std::vector<UtteranceRecord> generate_xor(const GeneratorSpec& spec) {
  Rng rng(derive_seed(spec.seed, "xor-labels"));
  const auto pair = balanced_labels(spec.total, 4, rng);  // bit 0: text cue, bit 1: audio cue
  const auto video_bit = balanced_labels(spec.total, 2, rng);
  const auto sentiment = balanced_labels(spec.total, 3, rng);
  const auto venc = spec.video_encoder();
  const auto aenc = spec.audio_encoder();
  std::vector<UtteranceRecord> out(spec.total);
  for (std::size_t i = 0; i < spec.total; ++i) {
    auto& r = out[i];
    r.id = record_id(i);
    const int text_cue = pair[i] & 1;
    const int audio_cue = (pair[i] >> 1) & 1;
    r.labels.toxicity = text_cue ^ audio_cue;
    r.labels.severity = r.labels.toxicity ? 1 + video_bit[i] : 0;
    r.labels.sentiment = sentiment[i];
    Rng trng(derive_seed(spec.seed, "xor-text", i));
    auto w = filler_words(trng);
    std::vector<bool> taken(w.size(), false);
    place_marker(w, taken, text_cue ? words::kCueOn : words::kCueOff, trng);
    const auto s = r.labels.sentiment;
    place_marker(w, taken, s == 0 ? pick(words::kPositive, trng) : s == 1 ? pick(words::kNeutral, trng) : pick(words::kNegative, trng), trng);
    finish_text(r, w, trng);
    std::vector<CueBit> vcues;
    if (video_bit[i]) vcues.push_back({Task::severity, 1});
    std::vector<CueBit> acues;
    if (audio_cue) acues.push_back({Task::toxicity, 1});
    r.video.data = stub_encode(r.id, vcues, venc).features;
    r.audio.data = stub_encode(r.id, acues, aenc).features;
  }
  return out;
}

}  // namespace detail

inline std::vector<UtteranceRecord> generate_dataset(const GeneratorSpec& spec) {
  spec.validate();
  return spec.preset == Preset::toxcmm_marginals ? detail::generate_toxcmm(spec) : detail::generate_xor(spec);
}

/// Text and audio cue bits of a crossmodal-xor record, recovered from its transcript and label.
inline std::pair<int, int> xor_cue_bits(const UtteranceRecord& r) {
  const std::string on(words::kCueOn);
  const bool text = (" " + r.transcript + " ").find(" " + on + " ") != std::string::npos;
  const int t = text ? 1 : 0;
  return {t, t ^ r.labels.toxicity};
}

// ---------------------------------------------------------------------------
// Manifest: JSON Lines, one record per line, features in sibling TXVF files.

inline nlohmann::json triple_to_json(const AnnotationTriple& a) {
  return {{"labels", a.labels}, {"adjudicated", a.adjudicated}, {"escalated", a.escalated}};
}

inline AnnotationTriple triple_from_json(const nlohmann::json& j) {
  AnnotationTriple a;
  a.labels = j.at("labels").get<std::array<int, 3>>();
  a.adjudicated = j.at("adjudicated").get<int>();
  a.escalated = j.at("escalated").get<bool>();
  return a;
}

inline nlohmann::json record_to_json(const UtteranceRecord& r) {
  nlohmann::json j{{"id", r.id},
                   {"transcript", r.transcript},
                   {"video", r.video.path},
                   {"audio", r.audio.path},
                   {"labels",
                    {{"toxicity", r.labels.toxicity}, {"severity", r.labels.severity}, {"sentiment", r.labels.sentiment}}},
                   {"duration_seconds", r.duration_seconds},
                   {"hindi_word_count", r.hindi_word_count},
                   {"total_word_count", r.total_word_count}};
  if (r.annotations) {
    j["annotations"] = {{"toxicity", triple_to_json(r.annotations->toxicity)},
                        {"severity", triple_to_json(r.annotations->severity)},
                        {"sentiment", triple_to_json(r.annotations->sentiment)}};
  }
  return j;
}

inline UtteranceRecord record_from_json(const nlohmann::json& j) {
  UtteranceRecord r;
  r.id = j.at("id").get<std::string>();
  r.transcript = j.at("transcript").get<std::string>();
  r.video.path = j.value("video", std::string{});
  r.audio.path = j.value("audio", std::string{});
  const auto& l = j.at("labels");
  r.labels = {l.at("toxicity").get<int>(), l.at("severity").get<int>(), l.at("sentiment").get<int>()};
  r.duration_seconds = j.at("duration_seconds").get<double>();
  r.hindi_word_count = j.at("hindi_word_count").get<std::size_t>();
  r.total_word_count = j.at("total_word_count").get<std::size_t>();
  if (r.hindi_word_count > r.total_word_count) throw std::invalid_argument("hindi_word_count exceeds total_word_count");
  if (j.contains("annotations")) {
    const auto& a = j.at("annotations");
    r.annotations = Annotations{triple_from_json(a.at("toxicity")), triple_from_json(a.at("severity")),
                                triple_from_json(a.at("sentiment"))};
  }
  return r;
}

inline constexpr std::string_view kManifestName = "manifest.jsonl";

/// Writes `dir/manifest.jsonl` plus `dir/features/<id>.<modality>.txvf` for inline features.
inline void write_manifest(const std::vector<UtteranceRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  std::ofstream f(dir / kManifestName, std::ios::trunc);
  if (!f) throw DataError((dir / kManifestName).string() + ": cannot open for writing");
  for (const auto& r : records) {
    UtteranceRecord copy = r;
    for (auto [ref, name] : {std::pair{&copy.video, "video"}, std::pair{&copy.audio, "audio"}}) {
      if (!ref->data) continue;
      if (ref->path.empty()) ref->path = "features/" + r.id + "." + name + ".txvf";
      write_feature_file(dir / ref->path, *ref->data);
    }
    f << record_to_json(copy).dump() << '\n';
  }
  if (!f) throw DataError((dir / kManifestName).string() + ": write failed");
}

inline std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream f(path);
  if (!f) throw DataError(path.string() + ": cannot open manifest");
  std::vector<UtteranceRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(f, line);) {
    ++line_no;
    if (line.empty()) continue;
    UtteranceRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    for (auto* ref : {&r.video, &r.audio}) {
      if (ref->path.empty()) continue;
      try {
        ref->data = read_feature_file(dir / ref->path);
      } catch (const FeatureFileError& e) {
        throw DataError("record " + r.id + ": " + e.what());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation

/// Majority label of three; all-distinct triples are escalated to `adjudicator`.
inline AnnotationTriple majority_vote(const std::array<int, 3>& labels, int adjudicator) {
  AnnotationTriple t;
  t.labels = labels;
  if (labels[0] == labels[1] || labels[0] == labels[2]) {
    t.adjudicated = labels[0];
  } else if (labels[1] == labels[2]) {
    t.adjudicated = labels[1];
  } else {
    t.adjudicated = adjudicator;
    t.escalated = true;
  }
  return t;
}

/// Per-task probability that an annotator reports the true label, indexed by Task.
using AgreementRates = std::array<double, 3>;

/// Rates calibrated with calibrate_agreement on the 4021-utterance
/// toxcmm-marginals corpus (generator seed 0, annotator seed
/// derive_seed(0, "annotators")) to reach kappa 0.74 / 0.64 / 0.67 for
/// toxicity / severity / sentiment.
inline constexpr AgreementRates kCalibratedAgreement{0.933, 0.875, 0.891};

inline std::vector<UtteranceRecord> simulate_annotations(std::vector<UtteranceRecord> records,
                                                         const AgreementRates& agreement, std::uint64_t seed) {
  for (double q : agreement)
    if (q < 0 || q > 1) throw std::invalid_argument("simulate_annotations: agreement must lie in [0, 1]");
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    Rng rng(derive_seed(seed, "annotate", i));
    Annotations a;
    for (Task t : kAllTasks) {
      const int truth = r.labels.get(t);
      const int k = static_cast<int>(class_count(t));
      std::array<int, 3> votes{};
      for (auto& v : votes) {
        if (rng.bernoulli(agreement[static_cast<std::size_t>(t)])) {
          v = truth;
        } else {
          const int other = static_cast<int>(rng.below(static_cast<std::size_t>(k - 1)));
          v = other >= truth ? other + 1 : other;
        }
      }
      a.get(t) = majority_vote(votes, truth);
    }
    r.annotations = a;
  }
  return records;
}

/**
 * Fleiss' kappa from per-item category counts. Every item must have the same
 * number of raters n >= 2. Returns exactly 1 when observed agreement is
 * perfect. Evaluated in integer arithmetic with a single final division.
 */
inline double fleiss_kappa(const std::vector<std::vector<int>>& item_counts) {
  if (item_counts.empty()) throw std::invalid_argument("fleiss_kappa: no items");
  const std::size_t k = item_counts.front().size();
  long long n = -1;
  long long sum_sq = 0;
  std::vector<long long> col(k, 0);
  for (const auto& item : item_counts) {
    if (item.size() != k) throw std::invalid_argument("fleiss_kappa: inconsistent category count");
    long long raters = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (item[j] < 0) throw std::invalid_argument("fleiss_kappa: negative count");
      raters += item[j];
      sum_sq += static_cast<long long>(item[j]) * item[j];
      col[j] += item[j];
    }
    if (n < 0) n = raters;
    if (raters != n) throw std::invalid_argument("fleiss_kappa: items have unequal rater counts");
  }
  if (n < 2) throw std::invalid_argument("fleiss_kappa: need at least 2 raters per item");
  const long long m = static_cast<long long>(item_counts.size()) * n;  // total ratings
  long long col_sq = 0;
  for (long long c : col) col_sq += c * c;
  if (sum_sq - m == m * (n - 1)) return 1.0;  // perfect observed agreement
  const long double num = static_cast<long double>(sum_sq - m) * m - static_cast<long double>(col_sq) * (n - 1);
  const long double den = static_cast<long double>(n - 1) * (static_cast<long double>(m) * m - col_sq);
  return static_cast<double>(num / den);
}

/// Category counts of one task's annotation triples.
inline std::vector<std::vector<int>> annotation_counts(const std::vector<UtteranceRecord>& records, Task task) {
  std::vector<std::vector<int>> counts;
  counts.reserve(records.size());
  for (const auto& r : records) {
    if (!r.annotations) throw std::invalid_argument("record " + r.id + " has no annotations");
    std::vector<int> c(class_count(task), 0);
    for (int l : r.annotations->get(task).labels) ++c.at(static_cast<std::size_t>(l));
    counts.push_back(std::move(c));
  }
  return counts;
}

inline double annotation_kappa(const std::vector<UtteranceRecord>& annotated, Task task) {
  return fleiss_kappa(annotation_counts(annotated, task));
}

/// Bisection on one task's agreement rate until the simulated kappa reaches `target`.
inline double calibrate_agreement(const std::vector<UtteranceRecord>& records, Task task, double target,
                                  std::uint64_t seed, int iterations = 40) {
  const double chance = 1.0 / static_cast<double>(class_count(task));
  double lo = chance, hi = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    AgreementRates rates{1.0, 1.0, 1.0};
    rates[static_cast<std::size_t>(task)] = mid;
    const double kappa = annotation_kappa(simulate_annotations(records, rates, seed), task);
    (kappa < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t records = 0;
  std::array<std::size_t, 2> toxicity{};
  std::array<std::size_t, 3> severity{};
  std::array<std::size_t, 3> sentiment{};
  double mean_words = 0;
  double mean_duration = 0;
  double mean_hindi_fraction = 0;

  nlohmann::json to_json() const {
    return {{"records", records},
            {"toxicity", {{"non_toxic", toxicity[0]}, {"toxic", toxicity[1]}}},
            {"severity", severity},
            {"sentiment", {{"positive", sentiment[0]}, {"neutral", sentiment[1]}, {"negative", sentiment[2]}}},
            {"mean_words", mean_words},
            {"mean_duration_seconds", mean_duration},
            {"mean_hindi_fraction", mean_hindi_fraction}};
  }

  std::string to_text() const {
    std::ostringstream o;
    o << "records:            " << records << '\n'
      << "toxicity:           non-toxic " << toxicity[0] << ", toxic " << toxicity[1] << '\n'
      << "severity:           0: " << severity[0] << ", 1: " << severity[1] << ", 2: " << severity[2] << '\n'
      << "sentiment:          positive " << sentiment[0] << ", neutral " << sentiment[1] << ", negative "
      << sentiment[2] << '\n'
      << "mean words:         " << mean_words << '\n'
      << "mean duration (s):  " << mean_duration << '\n'
      << "mean Hindi share:   " << mean_hindi_fraction << '\n';
    return o.str();
  }
};

inline CorpusStats corpus_stats(const std::vector<UtteranceRecord>& records) {
  if (records.empty()) throw std::invalid_argument("corpus_stats: empty corpus");
  CorpusStats s;
  s.records = records.size();
  for (const auto& r : records) {
    ++s.toxicity.at(static_cast<std::size_t>(r.labels.toxicity));
    ++s.severity.at(static_cast<std::size_t>(r.labels.severity));
    ++s.sentiment.at(static_cast<std::size_t>(r.labels.sentiment));
    s.mean_words += static_cast<double>(r.total_word_count);
    s.mean_duration += r.duration_seconds;
    if (r.total_word_count > 0) {
      s.mean_hindi_fraction += static_cast<double>(r.hindi_word_count) / static_cast<double>(r.total_word_count);
    }
  }
  const double n = static_cast<double>(records.size());
  s.mean_words /= n;
  s.mean_duration /= n;
  s.mean_hindi_fraction /= n;
  return s;
}

}  // namespace toxvid
