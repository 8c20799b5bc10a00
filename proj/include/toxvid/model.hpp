#pragma once

// Multitask model: [text tokens][SEP][soft tokens] -> toy transformer
// backbone -> masked mean pooling -> one softmax head per enabled task, with
// the task losses combined by learned positive weights that sum to the task
// count. Also hosts the concatenation-fusion baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxvid/autodiff.hpp"
#include "toxvid/labels.hpp"
#include "toxvid/parameters.hpp"
#include "toxvid/record.hpp"
#include "toxvid/sync.hpp"
#include "toxvid/text.hpp"

namespace toxvid {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  std::size_t d_t = 32;
  std::size_t abstract_len = 8;  // SL'
  std::size_t text_len = 12;     // SL_t
  std::size_t heads = 4;
  std::size_t depth = 2;
  std::size_t ffn_dim = 64;
  std::size_t vocab_size = 512;
  std::size_t video_len = 16;
  std::size_t video_dim = 16;
  std::size_t audio_len = 32;
  std::size_t audio_dim = 16;
  std::vector<Task> tasks{Task::toxicity, Task::severity, Task::sentiment};
  bool use_video = true;
  bool use_audio = true;
  bool disable_mhca = false;
  bool disable_gf = false;
  bool baseline_mode = false;
  std::uint64_t seed = 0;
  std::string precision = "float32";

  bool has_sync() const noexcept { return use_video || use_audio; }

  void validate() const {
    if (tasks.empty()) throw ConfigError("model: at least one task must be enabled");
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t j = i + 1; j < tasks.size(); ++j)
        if (tasks[i] == tasks[j]) throw ConfigError("model: duplicate task " + std::string(task_name(tasks[i])));
    if (d_t < 1 || abstract_len < 1 || text_len < 1 || ffn_dim < 1) throw ConfigError("model: dims must be >= 1");
    if (heads < 1 || d_t % heads != 0) throw ConfigError("model: heads must divide d_t");
    if (vocab_size < 4) throw ConfigError("model: vocab_size must be >= 4");
    if (use_video && (video_dim < 1 || video_len < 1)) throw ConfigError("model: video dims must be >= 1");
    if (use_audio && (audio_dim < 1 || audio_len < 1)) throw ConfigError("model: audio dims must be >= 1");
    if (baseline_mode && tasks.size() != 1) throw ConfigError("model: the baseline is trained on exactly one task");
    if (precision != "float32" && precision != "float64") {
      throw ConfigError("model: precision must be float32 or float64");
    }
  }

  Task primary_task() const {
    return std::find(tasks.begin(), tasks.end(), Task::toxicity) != tasks.end() ? Task::toxicity : tasks.front();
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  std::vector<std::string> tasks;
  for (Task t : c.tasks) tasks.emplace_back(task_name(t));
  j = nlohmann::json{{"d_t", c.d_t},
                     {"abstract_len", c.abstract_len},
                     {"text_len", c.text_len},
                     {"heads", c.heads},
                     {"depth", c.depth},
                     {"ffn_dim", c.ffn_dim},
                     {"vocab_size", c.vocab_size},
                     {"video_len", c.video_len},
                     {"video_dim", c.video_dim},
                     {"audio_len", c.audio_len},
                     {"audio_dim", c.audio_dim},
                     {"tasks", tasks},
                     {"use_video", c.use_video},
                     {"use_audio", c.use_audio},
                     {"disable_mhca", c.disable_mhca},
                     {"disable_gf", c.disable_gf},
                     {"baseline_mode", c.baseline_mode},
                     {"seed", c.seed},
                     {"precision", c.precision}};
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
    }
  }
}

template <typename V>
void read_opt(const nlohmann::json& j, const char* key, V& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  detail::reject_unknown_keys(j,
                              {"d_t", "abstract_len", "text_len", "heads", "depth", "ffn_dim", "vocab_size",
                               "video_len", "video_dim", "audio_len", "audio_dim", "tasks", "use_video", "use_audio",
                               "disable_mhca", "disable_gf", "baseline_mode", "seed", "precision"},
                              "model");
  detail::read_opt(j, "d_t", c.d_t, "model");
  detail::read_opt(j, "abstract_len", c.abstract_len, "model");
  detail::read_opt(j, "text_len", c.text_len, "model");
  detail::read_opt(j, "heads", c.heads, "model");
  detail::read_opt(j, "depth", c.depth, "model");
  detail::read_opt(j, "ffn_dim", c.ffn_dim, "model");
  detail::read_opt(j, "vocab_size", c.vocab_size, "model");
  detail::read_opt(j, "video_len", c.video_len, "model");
  detail::read_opt(j, "video_dim", c.video_dim, "model");
  detail::read_opt(j, "audio_len", c.audio_len, "model");
  detail::read_opt(j, "audio_dim", c.audio_dim, "model");
  detail::read_opt(j, "use_video", c.use_video, "model");
  detail::read_opt(j, "use_audio", c.use_audio, "model");
  detail::read_opt(j, "disable_mhca", c.disable_mhca, "model");
  detail::read_opt(j, "disable_gf", c.disable_gf, "model");
  detail::read_opt(j, "baseline_mode", c.baseline_mode, "model");
  detail::read_opt(j, "seed", c.seed, "model");
  detail::read_opt(j, "precision", c.precision, "model");
  if (j.contains("tasks")) {
    std::vector<std::string> names;
    detail::read_opt(j, "tasks", names, "model");
    c.tasks.clear();
    try {
      for (const auto& n : names) c.tasks.push_back(parse_task(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model.tasks: ") + e.what());
    }
  }
}

// ---------------------------------------------------------------------------

struct TaskOutput {
  Task task = Task::toxicity;
  std::vector<double> logits;
  std::vector<double> probabilities;
  int label = 0;
};

struct TaskPrediction {
  std::vector<TaskOutput> outputs;

  const TaskOutput* find(Task t) const {
    for (const auto& o : outputs)
      if (o.task == t) return &o;
    return nullptr;
  }
};

template <typename T>
TaskOutput make_task_output(Task task, const Matrix<T>& logits) {
  TaskOutput o;
  o.task = task;
  for (T v : logits.flat()) o.logits.push_back(static_cast<double>(v));
  const double mx = *std::max_element(o.logits.begin(), o.logits.end());
  double s = 0;
  for (double z : o.logits) {
    o.probabilities.push_back(std::exp(z - mx));
    s += o.probabilities.back();
  }
  for (auto& p : o.probabilities) p /= s;
  o.label = static_cast<int>(std::max_element(o.logits.begin(), o.logits.end()) - o.logits.begin());
  return o;
}

template <typename T>
struct MultitaskLoss {
  ad::Var<T> total;      // Loss_f
  Matrix<T> weights;     // beta, 1 x M
};

/// Loss_f = sum_k beta_k * loss_k with beta = M * softmax(theta).
template <typename T>
MultitaskLoss<T> multitask_loss(const std::vector<ad::Var<T>>& task_losses, const ad::Var<T>& theta) {
  const std::size_t m = task_losses.size();
  if (m < 1) throw std::invalid_argument("multitask_loss: no task losses");
  if (theta.rows() != 1 || theta.cols() != m) {
    throw ShapeError("multitask_loss: theta " + theta.value().shape() + " vs " + std::to_string(m) + " tasks");
  }
  auto beta = ad::scale<T>(ad::rowwise_softmax<T>(theta), static_cast<T>(m));
  auto losses = m == 1 ? task_losses.front() : ad::concat_cols<T>(task_losses);
  return {ad::sum<T>(ad::hadamard<T>(beta, losses)), beta.value()};
}

/// Concatenates text rows, the SEP embedding and the soft-token rows, with the
/// matching key mask. Without soft tokens the text rows are returned alone.
template <typename T>
std::pair<ad::Var<T>, RowMask> assemble_sequence(const TextEmbeddings<T>& text, const ad::Var<T>* soft_tokens,
                                                 const ad::Var<T>& sep_row) {
  if (!soft_tokens) return {text.embeddings, text.mask};
  const std::size_t d = text.embeddings.cols();
  if (soft_tokens->cols() != d || sep_row.cols() != d || sep_row.rows() != 1) {
    throw ShapeError("assemble_sequence: width mismatch text " + text.embeddings.value().shape() + ", SEP " +
                     sep_row.value().shape() + ", soft tokens " + soft_tokens->value().shape());
  }
  RowMask mask = text.mask;
  mask.push_back(1);
  mask.insert(mask.end(), soft_tokens->rows(), 1);
  return {ad::concat_rows<T>({text.embeddings, sep_row, *soft_tokens}), std::move(mask)};
}

template <typename T>
struct BackboneLayer {
  AttentionParams<T> attn;
  ad::Var<T> ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
};

/// depth x {masked self-attention + residual, GELU feed-forward + residual}.
template <typename T>
ad::Var<T> backbone_forward(const ad::Var<T>& seq, const RowMask& mask, const std::vector<BackboneLayer<T>>& layers) {
  ad::Var<T> h = seq;
  for (const auto& layer : layers) {
    h = ad::add<T>(h, mhca<T>(h, h, &mask, layer.attn));
    auto ff = ad::linear<T>(ad::gelu<T>(ad::linear<T>(h, layer.ffn_in_w, layer.ffn_in_b)), layer.ffn_out_w,
                            layer.ffn_out_b);
    h = ad::add<T>(h, ff);
  }
  return h;
}

template <typename T>
struct TaskHead {
  Task task;
  ad::Var<T> weight;
  ad::Var<T> bias;
};

template <typename T>
std::vector<ad::Var<T>> multitask_heads(const ad::Var<T>& pooled, const std::vector<TaskHead<T>>& heads) {
  std::vector<ad::Var<T>> logits;
  for (const auto& h : heads) logits.push_back(ad::linear<T>(pooled, h.weight, h.bias));
  return logits;
}

/// Everything the model needs for one utterance, already tokenized.
struct ModelInput {
  TokenizedText tokens;
  const FeatureMatrix* video = nullptr;
  const FeatureMatrix* audio = nullptr;
  std::optional<TaskLabels> labels;
};

inline ModelInput prepare_input(const UtteranceRecord& r, const Vocabulary& vocab, const ModelConfig& c,
                                bool with_labels = true) {
  ModelInput in;
  in.tokens = tokenize(r.transcript, vocab, c.text_len);
  auto need = [&](const FeatureRef& f, Modality m, std::size_t dim) -> const FeatureMatrix* {
    if (!f.available()) {
      throw std::invalid_argument("record " + r.id + ": missing " + std::string(modality_name(m)) + " features");
    }
    if (f.data->cols() != dim) {
      throw ShapeError("record " + r.id + ": " + std::string(modality_name(m)) + " feature width " +
                       std::to_string(f.data->cols()) + " does not match configured " + std::to_string(dim));
    }
    return &*f.data;
  };
  if (c.use_video) in.video = need(r.video, Modality::video, c.video_dim);
  if (c.use_audio) in.audio = need(r.audio, Modality::audio, c.audio_dim);
  if (with_labels) in.labels = r.labels;
  return in;
}

template <typename T>
struct ForwardResult {
  TaskPrediction prediction;
  std::vector<ad::Var<T>> task_losses;  // empty without labels
  ad::Var<T> loss;                      // Loss_f; invalid without labels
  Matrix<T> task_weights;               // beta
};

template <typename T>
class ToxVidModel {
 public:
  explicit ToxVidModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng(derive_seed(config_.seed, "init"));
    embedding_ = params_.add("text.embedding", init::normal<T>(config_.vocab_size, config_.d_t, 1.0, rng));
    if (config_.baseline_mode) {
      build_baseline(rng);
    } else {
      build_full(rng);
    }
  }

  ToxVidModel(const ToxVidModel&) = delete;
  ToxVidModel& operator=(const ToxVidModel&) = delete;
  ToxVidModel(ToxVidModel&&) noexcept = default;
  ToxVidModel& operator=(ToxVidModel&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet<T>& parameters() noexcept { return params_; }
  const ParameterSet<T>& parameters() const noexcept { return params_; }

  ForwardResult<T> forward(const ModelInput& in) const {
    return config_.baseline_mode ? forward_baseline(in) : forward_full(in);
  }

  /// Soft tokens appended after SEP, or an invalid Var for text-only configs.
  ad::Var<T> soft_tokens(const ModelInput& in, const TextEmbeddings<T>& text) const {
    if (!config_.has_sync()) return {};
    std::optional<ad::Var<T>> sv, sa;
    if (config_.use_video) {
      check_features(in.video, Modality::video, config_.video_dim);
      auto c = abstract_features<T>(ad::Var<T>::constant(in.video->cast<T>()), video_abs_, config_.abstract_len);
      sv = config_.disable_mhca ? c : mhca<T>(c, text.embeddings, &text.mask, video_attn_);
    }
    if (config_.use_audio) {
      check_features(in.audio, Modality::audio, config_.audio_dim);
      auto c = abstract_features<T>(ad::Var<T>::constant(in.audio->cast<T>()), audio_abs_, config_.abstract_len);
      sa = config_.disable_mhca ? c : mhca<T>(c, text.embeddings, &text.mask, audio_attn_);
    }
    if (sv && sa) {
      if (config_.disable_gf) return ad::concat_rows<T>({*sv, *sa});
      return gated_fusion<T>(*sv, *sa, gate_).joint;
    }
    return sv ? *sv : *sa;
  }

 private:
  static void check_features(const FeatureMatrix* f, Modality m, std::size_t dim) {
    if (!f) throw std::invalid_argument("forward: missing " + std::string(modality_name(m)) + " features");
    if (f->cols() != dim || f->rows() < 1) {
      throw ShapeError("forward: " + std::string(modality_name(m)) + " features " + f->shape() +
                       " incompatible with configured width " + std::to_string(dim));
    }
  }

  void build_full(Rng& rng) {
    const auto& c = config_;
    if (c.use_video) {
      video_abs_ = AbstractFeatureParams<T>::create(params_, "sync.video.abstract", c.video_dim, c.d_t, rng);
      if (!c.disable_mhca) video_attn_ = AttentionParams<T>::create(params_, "sync.video.attn", c.d_t, c.heads, rng);
    }
    if (c.use_audio) {
      audio_abs_ = AbstractFeatureParams<T>::create(params_, "sync.audio.abstract", c.audio_dim, c.d_t, rng);
      if (!c.disable_mhca) audio_attn_ = AttentionParams<T>::create(params_, "sync.audio.attn", c.d_t, c.heads, rng);
    }
    if (c.use_video && c.use_audio && !c.disable_gf) gate_ = GateParams<T>::create(params_, "sync.gate", c.d_t, rng);
    for (std::size_t l = 0; l < c.depth; ++l) {
      const std::string p = "backbone.layer" + std::to_string(l);
      BackboneLayer<T> layer;
      layer.attn = AttentionParams<T>::create(params_, p + ".attn", c.d_t, c.heads, rng);
      layer.ffn_in_w = params_.add(p + ".ffn.in.weight", init::xavier_uniform<T>(c.d_t, c.ffn_dim, rng));
      layer.ffn_in_b = params_.add(p + ".ffn.in.bias", Matrix<T>(1, c.ffn_dim));
      layer.ffn_out_w = params_.add(p + ".ffn.out.weight", init::xavier_uniform<T>(c.ffn_dim, c.d_t, rng));
      layer.ffn_out_b = params_.add(p + ".ffn.out.bias", Matrix<T>(1, c.d_t));
      layers_.push_back(std::move(layer));
    }
    for (Task t : c.tasks) {
      const std::string p = "heads." + std::string(task_name(t));
      heads_.push_back({t, params_.add(p + ".weight", init::xavier_uniform<T>(c.d_t, class_count(t), rng)),
                        params_.add(p + ".bias", Matrix<T>(1, class_count(t)))});
    }
    task_theta_ = params_.add("loss.task_logits", Matrix<T>(1, c.tasks.size()));
  }

  void build_baseline(Rng& rng) {
    const auto& c = config_;
    baseline_text_ = {params_.add("baseline.text.weight", init::xavier_uniform<T>(c.d_t, c.d_t, rng)),
                      params_.add("baseline.text.bias", Matrix<T>(1, c.d_t))};
    std::size_t fused = c.d_t;
    if (c.use_video) {
      baseline_video_ = {params_.add("baseline.video.weight", init::xavier_uniform<T>(c.video_dim, c.d_t, rng)),
                         params_.add("baseline.video.bias", Matrix<T>(1, c.d_t))};
      fused += c.d_t;
    }
    if (c.use_audio) {
      baseline_audio_ = {params_.add("baseline.audio.weight", init::xavier_uniform<T>(c.audio_dim, c.d_t, rng)),
                         params_.add("baseline.audio.bias", Matrix<T>(1, c.d_t))};
      fused += c.d_t;
    }
    const Task t = c.tasks.front();
    heads_.push_back({t, params_.add("baseline.classifier.weight", init::xavier_uniform<T>(fused, class_count(t), rng)),
                      params_.add("baseline.classifier.bias", Matrix<T>(1, class_count(t)))});
  }

  ForwardResult<T> forward_full(const ModelInput& in) const {
    auto text = embed_text<T>(in.tokens, embedding_);
    auto soft = soft_tokens(in, text);
    const std::size_t sep_id[1] = {kSepId};
    auto [seq, mask] = soft.valid() ? assemble_sequence<T>(text, &soft, ad::embedding_lookup<T>(embedding_, sep_id))
                                    : assemble_sequence<T>(text, nullptr, ad::Var<T>{});
    auto hidden = backbone_forward<T>(seq, mask, layers_);
    auto pooled = ad::mean_rows<T>(hidden, &mask);
    auto logits = multitask_heads<T>(pooled, heads_);
    return finish(logits, in);
  }

  ForwardResult<T> forward_baseline(const ModelInput& in) const {
    auto text = embed_text<T>(in.tokens, embedding_);
    std::vector<ad::Var<T>> parts;
    parts.push_back(ad::linear<T>(ad::mean_rows<T>(text.embeddings, &text.mask), baseline_text_.first,
                                  baseline_text_.second));
    if (config_.use_video) {
      check_features(in.video, Modality::video, config_.video_dim);
      auto pooled = ad::mean_rows<T>(ad::Var<T>::constant(in.video->cast<T>()));
      parts.push_back(ad::linear<T>(pooled, baseline_video_.first, baseline_video_.second));
    }
    if (config_.use_audio) {
      check_features(in.audio, Modality::audio, config_.audio_dim);
      auto pooled = ad::mean_rows<T>(ad::Var<T>::constant(in.audio->cast<T>()));
      parts.push_back(ad::linear<T>(pooled, baseline_audio_.first, baseline_audio_.second));
    }
    auto fused = parts.size() == 1 ? parts.front() : ad::concat_cols<T>(parts);
    std::vector<ad::Var<T>> logits{ad::linear<T>(fused, heads_.front().weight, heads_.front().bias)};
    return finish(logits, in);
  }

  ForwardResult<T> finish(const std::vector<ad::Var<T>>& logits, const ModelInput& in) const {
    ForwardResult<T> r;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      r.prediction.outputs.push_back(make_task_output<T>(heads_[k].task, logits[k].value()));
    }
    if (!in.labels) return r;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      r.task_losses.push_back(
          ad::cross_entropy<T>(logits[k], static_cast<std::size_t>(in.labels->get(heads_[k].task))));
    }
    if (config_.baseline_mode) {
      r.loss = r.task_losses.front();
      r.task_weights = Matrix<T>(1, 1, T(1));
    } else {
      auto ml = multitask_loss<T>(r.task_losses, task_theta_);
      r.loss = ml.total;
      r.task_weights = ml.weights;
    }
    return r;
  }

  ModelConfig config_;
  ParameterSet<T> params_;
  ad::Var<T> embedding_;
  AbstractFeatureParams<T> video_abs_, audio_abs_;
  AttentionParams<T> video_attn_, audio_attn_;
  GateParams<T> gate_;
  std::vector<BackboneLayer<T>> layers_;
  std::vector<TaskHead<T>> heads_;
  ad::Var<T> task_theta_;
  std::pair<ad::Var<T>, ad::Var<T>> baseline_text_, baseline_video_, baseline_audio_;
};

}  // namespace toxvid
