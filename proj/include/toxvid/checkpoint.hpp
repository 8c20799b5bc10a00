#pragma once

// Checkpoint directory layout:
//   config.json   resolved ModelConfig
//   params.json   { "<name>": { "file": "<name>.txvf", "rows": r, "cols": c }, ... }
//   vocab.txt     one token per line, line number = id
//   <name>.txvf   one TXVF file per parameter

#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxvid/feature_file.hpp"
#include "toxvid/model.hpp"
#include "toxvid/text.hpp"

namespace toxvid {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error(path.string() + ": cannot open for writing");
  f << j.dump(2) << '\n';
}

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ToxVidModel<T>& model, const Vocabulary& vocab) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "config.json", nlohmann::json(model.config()));
  nlohmann::json index = nlohmann::json::object();
  for (const auto& p : model.parameters().entries()) {
    const std::string file = p.name + ".txvf";
    write_feature_file(dir / file, p.var.value().template cast<float>());
    index[p.name] = {{"file", file}, {"rows", p.var.rows()}, {"cols", p.var.cols()}};
  }
  write_json_file(dir / "params.json", index);
  vocab.save(dir / "vocab.txt");
}

template <typename T>
struct LoadedCheckpoint {
  Vocabulary vocab;
  std::unique_ptr<ToxVidModel<T>> model;
};

/// Loads every parameter before touching the model, so a bad file leaves nothing half-initialized.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& dir) {
  try {
    ModelConfig config = read_json_file(dir / "config.json").get<ModelConfig>();
    auto model = std::make_unique<ToxVidModel<T>>(config);
    const auto index = read_json_file(dir / "params.json");
    auto& params = model->parameters();
    if (!index.is_object() || index.size() != params.size()) {
      throw CheckpointError(dir.string() + ": parameter index does not match the configured model");
    }
    std::vector<Matrix<T>> values;
    for (const auto& p : params.entries()) {
      if (!index.contains(p.name)) throw CheckpointError(dir.string() + ": missing parameter " + p.name);
      const auto& e = index.at(p.name);
      const auto rows = e.at("rows").template get<std::size_t>();
      const auto cols = e.at("cols").template get<std::size_t>();
      if (rows != p.var.rows() || cols != p.var.cols()) {
        throw CheckpointError(dir.string() + ": parameter " + p.name + " has shape " +
                              Matrix<T>::shape_string(rows, cols) + ", model expects " + p.var.value().shape());
      }
      auto m = read_feature_file(dir / e.at("file").template get<std::string>());
      if (m.rows() != rows || m.cols() != cols) {
        throw CheckpointError(dir.string() + ": file for " + p.name + " holds " + m.shape());
      }
      values.push_back(m.template cast<T>());
    }
    params.assign(values);
    return {Vocabulary::load(dir / "vocab.txt"), std::move(model)};
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint load failed: ") + e.what());
  }
}

}  // namespace toxvid
