#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "toxvid/data.hpp"

namespace support {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("toxvid_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::vector<toxvid::UtteranceRecord> small_corpus(toxvid::Preset preset, std::size_t total, std::uint64_t seed = 0) {
  toxvid::GeneratorSpec g;
  g.preset = preset;
  g.total = total;
  g.seed = seed;
  return toxvid::generate_dataset(g);
}

}  // namespace support
