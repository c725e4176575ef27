#pragma once

#include <complex>
#include <span>

namespace vitalrr {

/// In-place forward DFT, X[k] = sum x[n] exp(-j 2 pi n k / N). Thread-safe.
void fft_forward(std::span<std::complex<double>> data);

}  // namespace vitalrr
