#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fp::detail {

/// Real-to-complex FFT of x zero-padded to nfft; returns nfft/2 + 1 bins.
/// Safe to call concurrently.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t nfft);

}  // namespace fp::detail
