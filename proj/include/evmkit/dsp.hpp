#pragma once

#include <span>

#include "evmkit/common.hpp"

namespace evmkit::dsp {

// In-place iterative radix-2 DFT, unscaled (forward: sum of x[n] e^{-j2pi kn/N}).
// N must be a power of two.
void fft(CplxVec& x, bool inverse);

CplxVec fft_copy(std::span<const cplx> x, bool inverse);

double mean_power(std::span<const cplx> x);

}  // namespace evmkit::dsp
