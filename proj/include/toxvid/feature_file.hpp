#pragma once

// TXVF feature files:
//   bytes 0-3   magic "TXVF"
//   bytes 4-7   rows, uint32 little-endian
//   bytes 8-11  cols, uint32 little-endian
//   then rows*cols IEEE-754 float32 little-endian values, row-major.

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxvid/matrix.hpp"

namespace toxvid {

class FeatureFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 4> kFeatureMagic{'T', 'X', 'V', 'F'};

namespace detail {

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<char> encode_features(const FeatureMatrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw FeatureFileError("feature matrix too large for TXVF: " + m.shape());
  }
  std::vector<char> out(kFeatureMagic.begin(), kFeatureMagic.end());
  out.reserve(12 + 4 * m.size());
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.flat()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline FeatureMatrix decode_features(const std::vector<char>& bytes, const std::string& origin) {
  if (bytes.size() < 12) throw FeatureFileError(origin + ": truncated TXVF header");
  if (!std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), bytes.begin())) {
    throw FeatureFileError(origin + ": bad magic, not a TXVF feature file");
  }
  const std::uint32_t rows = detail::get_u32(bytes.data() + 4);
  const std::uint32_t cols = detail::get_u32(bytes.data() + 8);
  if (rows == 0 || cols == 0) {
    throw FeatureFileError(origin + ": empty feature matrix (" + std::to_string(rows) + "x" +
                           std::to_string(cols) + ")");
  }
  const std::uint64_t need = 12 + 4ULL * rows * cols;
  if (bytes.size() < need) {
    throw FeatureFileError(origin + ": truncated payload, declared " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " needs " + std::to_string(need) + " bytes, found " +
                           std::to_string(bytes.size()));
  }
  if (bytes.size() > need) throw FeatureFileError(origin + ": trailing bytes after payload");
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + 12 + 4 * i));
  return FeatureMatrix(rows, cols, std::move(data));
}

inline void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m) {
  const auto bytes = encode_features(m);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FeatureFileError(path.string() + ": cannot open for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FeatureFileError(path.string() + ": write failed");
}

inline FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FeatureFileError(path.string() + ": cannot open feature file");
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_features(bytes, path.string());
}

}  // namespace toxvid
