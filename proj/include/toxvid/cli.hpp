#pragma once

// Subcommands of the `toxvid` tool. Kept in a header so tests can drive the
// same code paths in-process.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toxvid/checkpoint.hpp"
#include "toxvid/data.hpp"
#include "toxvid/metrics.hpp"
#include "toxvid/model.hpp"
#include "toxvid/train.hpp"

namespace toxvid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Experiment file: manifest path (relative to the file), model and train sections, optional variant list.
struct ExperimentConfig {
  std::filesystem::path manifest;
  ModelConfig model;
  TrainConfig train;
  std::vector<std::string> variants{"full", "no_gf", "no_mhca", "no_both"};

  nlohmann::json to_json() const {
    return {{"manifest", manifest.string()},
            {"model", nlohmann::json(model)},
            {"train", nlohmann::json(train)},
            {"variants", variants}};
  }
};

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  detail::reject_unknown_keys(j, {"manifest", "model", "train", "variants"}, "config");
  ExperimentConfig c;
  if (!j.contains("manifest")) throw ConfigError("config: missing 'manifest'");
  std::filesystem::path m = j.at("manifest").get<std::string>();
  c.manifest = m.is_absolute() ? m : path.parent_path() / m;
  try {
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  detail::read_opt(j, "variants", c.variants, "config");
  c.model.validate();
  c.train.validate();
  for (const auto& v : c.variants) apply_variant(c.model, v);
  return c;
}

/// Timestamped log lines, confined to the run directory.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path) : file_(path, std::ios::app) {
    if (!file_) throw std::runtime_error(path.string() + ": cannot open log file");
  }

  void line(const std::string& msg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << msg << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
};

inline constexpr const char* kLogName = "toxvid.log";

/// Calls `f(std::type_identity<T>{})` with T matching the precision name.
template <typename F>
decltype(auto) with_precision(const std::string& precision, F&& f) {
  if (precision == "float64") return f(std::type_identity<double>{});
  return f(std::type_identity<float>{});
}

inline std::filesystem::path manifest_dir(const std::filesystem::path& p) {
  return std::filesystem::is_regular_file(p) ? p.parent_path() : p;
}

inline std::vector<UtteranceRecord> load_records(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw DataError("manifest not found: " + p.string());
  return read_manifest(manifest_dir(p));
}

// ---------------------------------------------------------------------------

struct GenDataOptions {
  std::string preset = "toxcmm-marginals";
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::size_t total = 4021;
  bool annotate = true;
};

inline int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
  GeneratorSpec spec;
  try {
    spec.preset = parse_preset(o.preset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.total = o.total;
  spec.seed = o.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto records = generate_dataset(spec);
  if (o.annotate) records = simulate_annotations(std::move(records), kCalibratedAgreement, derive_seed(o.seed, "annotators"));
  std::filesystem::create_directories(o.out);
  RunLog log(o.out / kLogName);
  log.line("gen-data preset=" + o.preset + " total=" + std::to_string(o.total) + " seed=" + std::to_string(o.seed));
  write_manifest(records, o.out);
  write_json_file(o.out / "resolved_config.json",
                  {{"preset", o.preset},
                   {"total", spec.total},
                   {"seed", spec.seed},
                   {"annotate", o.annotate},
                   {"video_cue_strength", spec.video_cue_strength},
                   {"audio_cue_strength", spec.audio_cue_strength},
                   {"video", {{"length", spec.video_len}, {"dim", spec.video_dim}}},
                   {"audio", {{"length", spec.audio_len}, {"dim", spec.audio_dim}}}});
  const auto stats = corpus_stats(records);
  auto stats_json = stats.to_json();
  if (o.annotate) {
    for (Task t : kAllTasks) stats_json["fleiss_kappa"][std::string(task_name(t))] = annotation_kappa(records, t);
  }
  write_json_file(o.out / "stats.json", stats_json);
  std::ofstream(o.out / "stats.txt") << stats.to_text();
  out << stats.to_text();
  log.line("wrote " + std::to_string(records.size()) + " records");
  return kExitOk;
}

inline int cmd_stats(const std::filesystem::path& manifest, bool as_json, std::ostream& out) {
  const auto stats = corpus_stats(load_records(manifest));
  if (as_json) {
    out << stats.to_json().dump(2) << '\n';
  } else {
    out << stats.to_text();
  }
  return kExitOk;
}

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

inline int cmd_train(const TrainOptions& o, std::ostream& out) {
  auto cfg = load_experiment_config(o.config);
  if (o.seed) cfg.train.seed = *o.seed;
  const auto records = load_records(cfg.manifest);
  std::filesystem::create_directories(o.out);
  write_json_file(o.out / "resolved_config.json", cfg.to_json());
  RunLog log(o.out / kLogName);
  log.line("train: " + std::to_string(records.size()) + " records, " + std::to_string(cfg.train.n_runs) + " runs");
  const auto result = with_precision(cfg.model.precision, [&]<typename T>(std::type_identity<T>) {
    RunCallback<T> on_run = [&](std::size_t i, const TrainOutcome<T>& r) {
      const auto dir = o.out / ("run_" + std::to_string(i));
      save_checkpoint(dir / "checkpoint", *r.model, r.vocab);
      write_json_file(dir / "result.json", r.result.to_json());
      std::ostringstream msg;
      msg << "run " << i << " seed " << r.result.seed << " best epoch " << r.result.best_epoch;
      for (const auto& [task, m] : r.result.test) msg << ' ' << task_name(task) << ".f1=" << m.f1;
      log.line(msg.str());
    };
    return run_experiment<T>(records, cfg.model, cfg.train, on_run);
  });
  write_json_file(o.out / "aggregate.json", result.to_json());
  for (const auto& [task, f] : result.f1) {
    out << task_name(task) << ": accuracy " << result.accuracy.at(task).mean << " +/- " << result.accuracy.at(task).std
        << ", f1 " << f.mean << " +/- " << f.std << '\n';
  }
  log.line("done");
  return kExitOk;
}

inline int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest, std::ostream& out) {
  const auto config = read_json_file(checkpoint / "config.json").get<ModelConfig>();
  const auto records = load_records(manifest);
  const auto metrics = with_precision(config.precision, [&]<typename T>(std::type_identity<T>) {
    auto ck = load_checkpoint<T>(checkpoint);
    return evaluate(*ck.model, ck.vocab, records);
  });
  out << nlohmann::json{{"records", records.size()}, {"metrics", metrics_to_json(metrics)}}.dump(2) << '\n';
  return kExitOk;
}

struct AblateOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::vector<std::string>> variants;
  std::optional<std::uint64_t> seed;
};

inline int cmd_ablate(const AblateOptions& o, std::ostream& out) {
  auto cfg = load_experiment_config(o.config);
  if (o.variants) {
    for (const auto& v : *o.variants) apply_variant(cfg.model, v);
    cfg.variants = *o.variants;
  }
  if (o.seed) cfg.train.seed = *o.seed;
  const auto records = load_records(cfg.manifest);
  std::filesystem::create_directories(o.out);
  write_json_file(o.out / "resolved_config.json", cfg.to_json());
  RunLog log(o.out / kLogName);
  log.line("ablate: " + std::to_string(cfg.variants.size()) + " variants");
  const auto rows = with_precision(cfg.model.precision, [&]<typename T>(std::type_identity<T>) {
    return ablation_sweep<T>(records, cfg.model, cfg.train, cfg.variants);
  });
  for (const auto& row : rows) write_json_file(o.out / (row.variant + ".aggregate.json"), row.result.to_json());
  const auto table = ablation_table_csv(rows);
  std::ofstream(o.out / "ablation_table.csv") << table;
  out << table;
  log.line("done");
  return kExitOk;
}

/// The per-run vector for "<task>.<metric>" in an aggregate.json document.
inline std::vector<double> metric_runs(const nlohmann::json& aggregate, const std::string& metric,
                                       const std::string& origin) {
  const auto dot = metric.find('.');
  if (dot == std::string::npos) throw UsageError("metric must look like <task>.<accuracy|f1>, got '" + metric + "'");
  const auto task = metric.substr(0, dot), name = metric.substr(dot + 1);
  const nlohmann::json::json_pointer ptr("/metrics/" + task + "/" + name + "/runs");
  if (!aggregate.contains(ptr)) throw UsageError(origin + ": no metric '" + metric + "'");
  auto runs = aggregate.at(ptr).get<std::vector<double>>();
  if (runs.size() < 2) {
    throw UsageError(origin + ": metric '" + metric + "' has " + std::to_string(runs.size()) +
                     " run(s); at least 2 are required");
  }
  return runs;
}

inline int cmd_significance(const std::filesystem::path& a, const std::filesystem::path& b, const std::string& metric,
                            std::ostream& out) {
  const auto ra = metric_runs(read_json_file(a), metric, a.string());
  const auto rb = metric_runs(read_json_file(b), metric, b.string());
  const auto w = welch_t_test(ra, rb);
  nlohmann::json j{{"metric", metric},
                   {"n_a", ra.size()},
                   {"n_b", rb.size()},
                   {"mean_a", sample_mean(ra)},
                   {"mean_b", sample_mean(rb)},
                   {"df", w.df},
                   {"p", w.p},
                   {"divergent", w.divergent},
                   {"verdict", w.p < 0.05 ? "significant" : "not significant"}};
  j["t"] = std::isfinite(w.t) ? nlohmann::json(w.t) : nlohmann::json(w.t > 0 ? "inf" : "-inf");
  out << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Parses `args` (without the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal code-mixed toxicity detection: data, training, evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus with features and a stats report");
  gen_cmd->add_option("--preset", gen.preset, "toxcmm-marginals or crossmodal-xor")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  gen_cmd->add_option("--total", gen.total, "Number of utterances")->capture_default_str();
  gen_cmd->add_flag("!--no-annotations", gen.annotate, "Skip simulated annotator triples");

  std::filesystem::path stats_manifest;
  bool stats_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "Print corpus statistics for a manifest");
  stats_cmd->add_option("--manifest", stats_manifest, "Manifest directory or manifest.jsonl")->required();
  stats_cmd->add_flag("--json", stats_json, "Emit JSON");

  TrainOptions tr;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Run repeated training runs and write aggregate.json");
  train_cmd->add_option("--config", tr.config, "Experiment JSON")->required();
  train_cmd->add_option("--out", tr.out, "Run directory")->required();
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Override train.seed");

  std::filesystem::path ck, eval_manifest;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; metrics JSON on stdout");
  eval_cmd->add_option("--checkpoint", ck, "Checkpoint directory")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Manifest directory or manifest.jsonl")->required();

  AblateOptions ab;
  std::string variants;
  std::uint64_t ablate_seed = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation sweep and write ablation_table.csv");
  ablate_cmd->add_option("--config", ab.config, "Experiment JSON")->required();
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  auto* variants_opt = ablate_cmd->add_option("--variants", variants, "Comma-separated variant names");
  auto* ablate_seed_opt = ablate_cmd->add_option("--seed", ablate_seed, "Override train.seed");

  std::filesystem::path runs_a, runs_b;
  std::string metric = "toxicity.f1";
  auto* sig_cmd = app.add_subcommand("significance", "Welch t-test between two aggregate.json files");
  sig_cmd->add_option("--runs-a", runs_a, "First aggregate.json")->required();
  sig_cmd->add_option("--runs-b", runs_b, "Second aggregate.json")->required();
  sig_cmd->add_option("--metric", metric, "<task>.<accuracy|f1>")->capture_default_str();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (stats_cmd->parsed()) return cmd_stats(stats_manifest, stats_json, out);
    if (train_cmd->parsed()) {
      if (*train_seed_opt) tr.seed = train_seed;
      return cmd_train(tr, out);
    }
    if (eval_cmd->parsed()) return cmd_eval(ck, eval_manifest, out);
    if (ablate_cmd->parsed()) {
      if (*variants_opt) {
        std::vector<std::string> names;
        std::stringstream ss(variants);
        for (std::string v; std::getline(ss, v, ',');)
          if (!v.empty()) names.push_back(v);
        ab.variants = names;
      }
      if (*ablate_seed_opt) ab.seed = ablate_seed;
      return cmd_ablate(ab, out);
    }
    if (sig_cmd->parsed()) return cmd_significance(runs_a, runs_b, metric, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace toxvid::cli
