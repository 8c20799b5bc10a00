#pragma once

// Adam with cosine annealing, seeded splits, best-on-validation checkpoint
// selection, repeated runs and ablation sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxvid/labels.hpp"
#include "toxvid/metrics.hpp"
#include "toxvid/model.hpp"
#include "toxvid/record.hpp"
#include "toxvid/rng.hpp"
#include "toxvid/text.hpp"

namespace toxvid {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 2;
  std::size_t epochs = 30;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_min = 0.0;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};  // train, val, test
  std::size_t n_runs = 10;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // global gradient norm; 0 disables

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (n_runs < 1) throw ConfigError("train: n_runs must be >= 1");
    if (!(learning_rate >= 0) || !(lr_min >= 0) || lr_min > learning_rate) {
      throw ConfigError("train: need 0 <= lr_min <= learning_rate");
    }
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("train: Adam betas must lie in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("train: epsilon must be > 0");
    if (!(clip_norm >= 0)) throw ConfigError("train: clip_norm must be >= 0");
    double s = 0;
    for (double r : split_ratios) {
      if (!(r >= 0 && r <= 1)) throw ConfigError("train: split ratios must lie in [0, 1]");
      s += r;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("train: split ratios must sum to 1");
    if (split_ratios[0] <= 0) throw ConfigError("train: train ratio must be positive");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
       {"beta1", c.beta1},                 {"beta2", c.beta2},           {"epsilon", c.epsilon},
       {"lr_min", c.lr_min},               {"split_ratios", c.split_ratios}, {"n_runs", c.n_runs},
       {"seed", c.seed},                   {"clip_norm", c.clip_norm}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  detail::reject_unknown_keys(j,
                              {"learning_rate", "batch_size", "epochs", "beta1", "beta2", "epsilon", "lr_min",
                               "split_ratios", "n_runs", "seed", "clip_norm"},
                              "train");
  detail::read_opt(j, "learning_rate", c.learning_rate, "train");
  detail::read_opt(j, "batch_size", c.batch_size, "train");
  detail::read_opt(j, "epochs", c.epochs, "train");
  detail::read_opt(j, "beta1", c.beta1, "train");
  detail::read_opt(j, "beta2", c.beta2, "train");
  detail::read_opt(j, "epsilon", c.epsilon, "train");
  detail::read_opt(j, "lr_min", c.lr_min, "train");
  detail::read_opt(j, "split_ratios", c.split_ratios, "train");
  detail::read_opt(j, "n_runs", c.n_runs, "train");
  detail::read_opt(j, "seed", c.seed, "train");
  detail::read_opt(j, "clip_norm", c.clip_norm, "train");
  c.validate();
}

// ---------------------------------------------------------------------------

/// First and second moment estimates, one pair per parameter.
template <typename T>
struct AdamState {
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;
  std::uint64_t step = 0;

  static AdamState for_parameters(const ParameterSet<T>& params) {
    AdamState s;
    for (const auto& p : params.entries()) {
      s.m.emplace_back(p.var.rows(), p.var.cols());
      s.v.emplace_back(p.var.rows(), p.var.cols());
    }
    return s;
  }
};

/// One bias-corrected Adam update at learning rate `lr`; gradients are zeroed afterward.
template <typename T>
void adam_step(ParameterSet<T>& params, AdamState<T>& state, const TrainConfig& hyper, double lr) {
  auto& entries = params.entries();
  if (state.m.size() != entries.size() || state.v.size() != entries.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match the parameter set");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& g = entries[i].var.grad();
    if (!g.same_shape(entries[i].var.value()) || !state.m[i].same_shape(g)) {
      throw std::invalid_argument("adam_step: missing or mis-shaped gradient for " + entries[i].name);
    }
  }
  ++state.step;
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& var = entries[i].var;
    auto w = var.mutable_value().flat();
    auto g = var.grad().flat();
    auto m = state.m[i].flat();
    auto v = state.v[i].flat();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      w[k] = static_cast<T>(static_cast<double>(w[k]) - lr * (mk / c1) / (std::sqrt(vk / c2) + hyper.epsilon));
    }
    var.zero_grad();
  }
}

inline double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max, double lr_min) {
  if (total_steps < 1) throw std::invalid_argument("cosine_lr: total_steps must be >= 1");
  if (step > total_steps) {
    throw std::out_of_range("cosine_lr: step " + std::to_string(step) + " exceeds " + std::to_string(total_steps));
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`. Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterSet<T>& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params.entries())
    for (T g : p.var.grad().flat()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const T f = static_cast<T>(max_norm / norm);
    for (auto& p : params.entries())
      for (T& g : p.var.mutable_grad().flat()) g *= f;
  }
  return norm;
}

// ---------------------------------------------------------------------------

struct DataSplit {
  std::vector<UtteranceRecord> train, val, test;
};

/// Order-sensitive hash of the record ids in each partition.
inline std::uint64_t split_checksum(const DataSplit& s) {
  std::uint64_t h = stable_hash("split");
  std::uint64_t part = 0;
  for (const auto* v : {&s.train, &s.val, &s.test}) {
    h = splitmix64(h ^ ++part);
    for (const auto& r : *v) h = splitmix64(h ^ stable_hash(r.id));
  }
  return h;
}

/// Seeded shuffle, then |val| = floor(r_val N), |test| = floor(r_test N), train = rest.
inline DataSplit split_dataset(std::vector<UtteranceRecord> records, const std::array<double, 3>& ratios,
                               std::uint64_t seed) {
  if (records.size() < 3) throw std::invalid_argument("split_dataset: need at least 3 records");
  double s = 0;
  for (double r : ratios) {
    if (!(r >= 0 && r <= 1)) throw std::invalid_argument("split_dataset: ratios must lie in [0, 1]");
    s += r;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("split_dataset: ratios must sum to 1");
  const double n = static_cast<double>(records.size());
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * n + 1e-9));
  if (n_val + n_test >= records.size()) throw std::invalid_argument("split_dataset: train split would be empty");
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(records);
  DataSplit out;
  const auto mid = records.end() - static_cast<std::ptrdiff_t>(n_val + n_test);
  const auto tail = records.end() - static_cast<std::ptrdiff_t>(n_test);
  out.train.assign(std::make_move_iterator(records.begin()), std::make_move_iterator(mid));
  out.val.assign(std::make_move_iterator(mid), std::make_move_iterator(tail));
  out.test.assign(std::make_move_iterator(tail), std::make_move_iterator(records.end()));
  return out;
}

// ---------------------------------------------------------------------------

struct TaskMetrics {
  double accuracy = 0;
  double f1 = 0;
  friend bool operator==(const TaskMetrics&, const TaskMetrics&) = default;
};

using MetricsByTask = std::map<Task, TaskMetrics>;

inline nlohmann::json metrics_to_json(const MetricsByTask& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, v] : m) j[std::string(task_name(t))] = {{"accuracy", v.accuracy}, {"f1", v.f1}};
  return j;
}

inline MetricsByTask metrics_from_json(const nlohmann::json& j) {
  MetricsByTask m;
  for (const auto& [k, v] : j.items()) m[parse_task(k)] = {v.at("accuracy").get<double>(), v.at("f1").get<double>()};
  return m;
}

template <typename T>
MetricsByTask evaluate(const ToxVidModel<T>& model, const Vocabulary& vocab, const std::vector<UtteranceRecord>& records) {
  if (records.empty()) throw std::invalid_argument("evaluate: no records");
  const auto& tasks = model.config().tasks;
  std::vector<std::vector<int>> truth(tasks.size()), pred(tasks.size());
  for (const auto& r : records) {
    const auto out = model.forward(prepare_input(r, vocab, model.config(), false));
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const auto* o = out.prediction.find(tasks[k]);
      truth[k].push_back(r.labels.get(tasks[k]));
      pred[k].push_back(o->label);
    }
  }
  MetricsByTask m;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    m[tasks[k]] = {accuracy(truth[k], pred[k]), weighted_f1(truth[k], pred[k], class_count(tasks[k]))};
  }
  return m;
}

struct RunResult {
  std::uint64_t seed = 0;
  std::uint64_t split_checksum = 0;
  MetricsByTask test;
  std::vector<double> loss_curve;  // mean training Loss_f per epoch
  std::vector<double> task_weights;  // beta after the selected epoch
  std::size_t best_epoch = 0;
  double best_val_f1 = 0;

  friend bool operator==(const RunResult&, const RunResult&) = default;

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"split_checksum", split_checksum},
            {"test", metrics_to_json(test)},
            {"loss_curve", loss_curve},
            {"task_weights", task_weights},
            {"best_epoch", best_epoch},
            {"best_val_f1", best_val_f1}};
  }

  static RunResult from_json(const nlohmann::json& j) {
    RunResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.split_checksum = j.at("split_checksum").get<std::uint64_t>();
    r.test = metrics_from_json(j.at("test"));
    r.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    r.task_weights = j.at("task_weights").get<std::vector<double>>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    r.best_val_f1 = j.at("best_val_f1").get<double>();
    return r;
  }
};

template <typename T>
struct TrainOutcome {
  std::unique_ptr<ToxVidModel<T>> model;  // holds the selected parameters
  Vocabulary vocab;
  RunResult result;
};

/// Per-epoch progress: epoch (1-based), mean training loss, validation F1 of the primary task.
using EpochLogger = std::function<void(std::size_t, double, double)>;

inline Vocabulary vocab_for(const std::vector<UtteranceRecord>& train, const ModelConfig& mc) {
  std::vector<std::string> corpus;
  corpus.reserve(train.size());
  for (const auto& r : train) corpus.push_back(r.transcript);
  return build_vocab(corpus, mc.vocab_size);
}

/**
 * Trains on a fixed partition. The run seed drives initialization and batch
 * order; the model config's own seed is overridden. The parameters with the
 * best validation weighted F1 on the primary task are kept (the last epoch
 * when the validation split is empty).
 */
template <typename T>
TrainOutcome<T> train_with_splits(const DataSplit& split, ModelConfig mc, const TrainConfig& tc, std::uint64_t seed,
                                  const EpochLogger& log = {}) {
  tc.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");
  if (split.test.empty()) throw std::invalid_argument("train: empty test split");
  mc.seed = seed;
  TrainOutcome<T> out;
  out.vocab = vocab_for(split.train, mc);
  out.model = std::make_unique<ToxVidModel<T>>(mc);
  auto& model = *out.model;
  auto& params = model.parameters();
  const Task primary = mc.primary_task();

  std::vector<ModelInput> inputs;
  inputs.reserve(split.train.size());
  for (const auto& r : split.train) inputs.push_back(prepare_input(r, out.vocab, mc));

  auto state = AdamState<T>::for_parameters(params);
  const std::size_t batches_per_epoch = (inputs.size() + tc.batch_size - 1) / tc.batch_size;
  const std::size_t total_steps = batches_per_epoch * tc.epochs;
  std::size_t step = 0;
  std::vector<std::size_t> order(inputs.size());
  std::vector<Matrix<T>> best = params.values();
  double best_f1 = -1;
  params.zero_grad();

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, "batch-order", epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
      const std::size_t end = std::min(order.size(), b + tc.batch_size);
      const T inv = static_cast<T>(1.0 / static_cast<double>(end - b));
      for (std::size_t k = b; k < end; ++k) {
        auto fr = model.forward(inputs[order[k]]);
        const double loss = static_cast<double>(fr.loss.item());
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", step " << step << " (record "
              << split.train[order[k]].id << ", seed " << seed << ")";
          throw TrainingError(msg.str());
        }
        epoch_loss += loss;
        ad::backward<T>(ad::scale<T>(fr.loss, inv));
      }
      clip_grad_norm(params, tc.clip_norm);
      adam_step(params, state, tc, cosine_lr(step, total_steps, tc.learning_rate, tc.lr_min));
      ++step;
    }
    epoch_loss /= static_cast<double>(inputs.size());
    out.result.loss_curve.push_back(epoch_loss);

    double val_f1 = 0;
    if (!split.val.empty()) val_f1 = evaluate(model, out.vocab, split.val).at(primary).f1;
    if (split.val.empty() || val_f1 > best_f1) {
      best_f1 = val_f1;
      best = params.values();
      out.result.best_epoch = epoch;
    }
    if (log) log(epoch, epoch_loss, val_f1);
  }

  params.assign(best);
  out.result.seed = seed;
  out.result.split_checksum = split_checksum(split);
  out.result.best_val_f1 = std::max(best_f1, 0.0);
  out.result.test = evaluate(model, out.vocab, split.test);
  const auto probe = model.forward(prepare_input(split.train.front(), out.vocab, mc));
  for (T w : probe.task_weights.flat()) out.result.task_weights.push_back(static_cast<double>(w));
  return out;
}

template <typename T>
TrainOutcome<T> train(const std::vector<UtteranceRecord>& records, const ModelConfig& mc, const TrainConfig& tc,
                      const EpochLogger& log = {}) {
  tc.validate();
  return train_with_splits<T>(split_dataset(records, tc.split_ratios, tc.seed), mc, tc, tc.seed, log);
}

// ---------------------------------------------------------------------------

struct MetricSummary {
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for a single run
  std::vector<double> runs;

  static MetricSummary of(std::vector<double> v) {
    MetricSummary s;
    s.mean = sample_mean(v);
    s.std = std::sqrt(sample_variance(v));
    s.runs = std::move(v);
    return s;
  }
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::map<Task, MetricSummary> accuracy;
  std::map<Task, MetricSummary> f1;

  static ExperimentResult aggregate(std::vector<RunResult> runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    ExperimentResult e;
    for (const auto& [task, _] : runs.front().test) {
      std::vector<double> acc, f1;
      for (const auto& r : runs) {
        acc.push_back(r.test.at(task).accuracy);
        f1.push_back(r.test.at(task).f1);
      }
      e.accuracy[task] = MetricSummary::of(std::move(acc));
      e.f1[task] = MetricSummary::of(std::move(f1));
    }
    e.runs = std::move(runs);
    return e;
  }

  nlohmann::json to_json() const {
    nlohmann::json metrics = nlohmann::json::object();
    auto summary = [](const MetricSummary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"runs", s.runs}}; };
    for (const auto& [task, acc] : accuracy) {
      metrics[std::string(task_name(task))] = {{"accuracy", summary(acc)}, {"f1", summary(f1.at(task))}};
    }
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : runs) rs.push_back(r.to_json());
    return {{"n_runs", runs.size()}, {"metrics", metrics}, {"runs", rs}};
  }
};

/// Called after each run with its index and outcome, e.g. to persist artifacts.
template <typename T>
using RunCallback = std::function<void(std::size_t, const TrainOutcome<T>&)>;

/// Run i uses seed = base + i for both the split and the initialization.
template <typename T>
ExperimentResult run_experiment(const std::vector<UtteranceRecord>& records, const ModelConfig& mc,
                                const TrainConfig& tc, const RunCallback<T>& on_run = {}) {
  tc.validate();
  std::vector<RunResult> runs;
  for (std::size_t i = 0; i < tc.n_runs; ++i) {
    TrainConfig run_cfg = tc;
    run_cfg.seed = tc.seed + i;
    auto outcome = train<T>(records, mc, run_cfg);
    if (on_run) on_run(i, outcome);
    runs.push_back(outcome.result);
  }
  return ExperimentResult::aggregate(std::move(runs));
}

inline constexpr std::array<std::string_view, 6> kVariants{"full", "no_gf", "no_mhca", "no_both", "baseline", "text_only"};

/// Model configuration for a named ablation variant.
inline ModelConfig apply_variant(ModelConfig c, std::string_view variant) {
  if (variant == "full") {
  } else if (variant == "no_gf") {
    c.disable_gf = true;
  } else if (variant == "no_mhca") {
    c.disable_mhca = true;
  } else if (variant == "no_both") {
    c.disable_gf = true;
    c.disable_mhca = true;
  } else if (variant == "baseline") {
    c.baseline_mode = true;
    c.tasks = {c.primary_task()};
  } else if (variant == "text_only") {
    c.use_video = false;
    c.use_audio = false;
  } else {
    throw ConfigError("unknown variant '" + std::string(variant) +
                      "' (expected full, no_gf, no_mhca, no_both, baseline or text_only)");
  }
  return c;
}

struct AblationRow {
  std::string variant;
  ExperimentResult result;
};

template <typename T>
std::vector<AblationRow> ablation_sweep(const std::vector<UtteranceRecord>& records, const ModelConfig& mc,
                                        const TrainConfig& tc, const std::vector<std::string>& variants) {
  std::vector<ModelConfig> configs;
  for (const auto& v : variants) configs.push_back(apply_variant(mc, v));  // fail before any training
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    rows.push_back({variants[i], run_experiment<T>(records, configs[i], tc)});
  }
  return rows;
}

/// One line per (variant, task).
inline std::string ablation_table_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream o;
  o.precision(6);
  o << std::fixed;
  o << "variant,task,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
  for (const auto& row : rows) {
    for (const auto& [task, acc] : row.result.accuracy) {
      const auto& f = row.result.f1.at(task);
      o << row.variant << ',' << task_name(task) << ',' << acc.mean << ',' << acc.std << ',' << f.mean << ','
        << f.std << '\n';
    }
  }
  return o.str();
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace toxvid
