#pragma once

#include <complex>
#include <vector>

namespace qpr {

// In-place iterative radix-2 FFT (forward, no scaling). Size must be a power
// of two; throws InvalidFftLength otherwise.
void fft_inplace(std::vector<std::complex<double>>& x);

std::size_t next_power_of_two(std::size_t n);

}  // namespace qpr
