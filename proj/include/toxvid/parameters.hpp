#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "toxvid/autodiff.hpp"
#include "toxvid/rng.hpp"

namespace toxvid {

template <typename T>
struct Parameter {
  std::string name;
  ad::Var<T> var;
};

/// Named trainable parameters in insertion order. Names are unique.
template <typename T>
class ParameterSet {
 public:
  ad::Var<T> add(const std::string& name, Matrix<T> init) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    params_.push_back({name, ad::Var<T>::parameter(std::move(init))});
    return params_.back().var;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const ad::Var<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return params_[it->second].var;
  }
  ad::Var<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return params_[it->second].var;
  }

  std::vector<Parameter<T>>& entries() noexcept { return params_; }
  const std::vector<Parameter<T>>& entries() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var.value().size();
    return n;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : params_) out.push_back(p.name);
    return out;
  }

  void zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
  }

  /// Value snapshot, in insertion order.
  std::vector<Matrix<T>> values() const {
    std::vector<Matrix<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.var.value());
    return out;
  }

  void assign(const std::vector<Matrix<T>>& values) {
    if (values.size() != params_.size()) throw std::invalid_argument("ParameterSet::assign: count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      Matrix<T>::require_same_shape(params_[i].var.value(), values[i], params_[i].name.c_str());
      params_[i].var.mutable_value() = values[i];
    }
  }

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

namespace init {

template <typename T>
Matrix<T> xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix<T> m(rows, cols);
  for (auto& v : m.flat()) v = static_cast<T>(rng.uniform(-a, a));
  return m;
}

template <typename T>
Matrix<T> xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  return xavier_uniform<T>(rows, cols, rows, cols, rng);
}

template <typename T>
Matrix<T> normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix<T> m(rows, cols);
  for (auto& v : m.flat()) v = static_cast<T>(stddev * rng.normal());
  return m;
}

}  // namespace init
}  // namespace toxvid
