#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vitalrr {

struct GradCheckReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t skipped_kinks = 0;

  bool pass(double tolerance) const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Components with |gradient| below floor_fraction * max|gradient| are
  /// compared against that floor instead of their own magnitude.
  double floor_fraction = 1e-3;
  /// Check at most this many coordinates (0 = all), chosen deterministically.
  std::size_t max_checks = 0;
  std::uint64_t seed = 7;
  /// Skip coordinates where the forward and backward one-sided slopes differ
  /// by more than kink_ratio of the slope (the step straddles a
  /// non-differentiable point, e.g. a bilinear sample crossing a pixel edge).
  bool skip_kinks = false;
  double kink_ratio = 1e-3;
};

/// Central differences of a scalar function against an analytic gradient.
/// `f` is evaluated at perturbed copies of `params`.
GradCheckReport grad_check(const std::string& name,
                           const std::function<double(std::span<const double>)>& f,
                           std::span<const double> params, std::span<const double> analytic,
                           const GradCheckOptions& opt = {});

std::string describe(const GradCheckReport& r);

}  // namespace vitalrr
