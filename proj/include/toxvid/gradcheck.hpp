#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "toxvid/autodiff.hpp"
#include "toxvid/parameters.hpp"
#include "toxvid/rng.hpp"

namespace toxvid {

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
  }
  double worst() const {
    double w = 0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_error);
    return w;
  }
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Relative errors use max(|analytic|, |numeric|, abs_floor) as denominator,
  /// so entries whose true gradient is at rounding level do not dominate.
  double abs_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded random subset per parameter.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  const double diff = std::abs(analytic - numeric);
  return diff == 0.0 ? 0.0 : diff / denom;
}

/**
 * Compares analytic gradients of `forward` (a deterministic function that
 * rebuilds its graph from the current parameter values and returns a 1x1
 * result) against central differences. Parameter values are restored and
 * gradients zeroed on return.
 */
template <typename F>
GradCheckReport grad_check(F&& forward, ParameterSet<double>& params, const GradCheckOptions& opt = {}) {
  params.zero_grad();
  {
    ad::Var<double> loss = forward();
    if (loss.requires_grad()) ad::backward(loss);
  }
  std::vector<Matrix<double>> analytic;
  for (const auto& p : params.entries()) analytic.push_back(p.var.grad());
  params.zero_grad();

  GradCheckReport report;
  Rng rng(opt.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params.entries()[pi];
    auto& value = p.var.mutable_value();
    std::vector<std::size_t> idx(value.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (opt.max_entries_per_param > 0 && idx.size() > opt.max_entries_per_param) {
      rng.shuffle(idx);
      idx.resize(opt.max_entries_per_param);
    }
    GradCheckEntry entry{p.name};
    for (std::size_t i : idx) {
      const double orig = value[i];
      value[i] = orig + opt.step;
      const double fp = forward().item();
      value[i] = orig - opt.step;
      const double fm = forward().item();
      value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.step);
      const double err = relative_error(analytic[pi][i], numeric, opt.abs_floor);
      entry.max_rel_error = std::max(entry.max_rel_error, err);
      ++entry.checked;
    }
    entry.passed = entry.max_rel_error < opt.tolerance;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace toxvid
