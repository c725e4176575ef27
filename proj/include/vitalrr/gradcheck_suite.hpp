#pragma once

#include <cstdint>
#include <vector>

#include "vitalrr/gradcheck.hpp"

namespace vitalrr {

struct GradCheckEntry {
  GradCheckReport report;
  double tolerance = 1e-4;
  bool pass() const { return report.pass(tolerance); }
};

/// Finite-difference checks of every hand-written backward pass in 64-bit:
/// conv, bilinear sampling, both snake axes, context, loss and the full network.
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace vitalrr
