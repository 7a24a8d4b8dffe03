#pragma once

// Reference implementations used as test oracles. They are written straight
// from the textbook definitions, share no code with the library, and are not
// edited to follow library changes.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

/// Residual of an ordinary least-squares line fit against the sample index.
std::vector<double> line_residual(const std::vector<double>& x);

/// |H(f)| of an FIR filter, by direct DTFT summation.
double fir_magnitude(const std::vector<double>& taps, double f_hz, double fs);

/// Centered windowed mean; windows are truncated at the edges.
std::vector<double> window_mean(const std::vector<double>& x, std::size_t width);

/// Katz fractal dimension with unit x-step, straight from the definition.
double katz(const std::vector<double>& x);

/// Sample entropy by exhaustive template comparison (Chebyshev distance,
/// self-matches excluded, N - m templates for both lengths).
double sample_entropy(const std::vector<double>& x, int m, double r);

double mae(const std::vector<double>& a, const std::vector<double>& b);
double rmse(const std::vector<double>& a, const std::vector<double>& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// sRGB (0..255) to CIELab against the tabulated D65 white.
void srgb_to_lab(double r, double g, double b, double lab[3]);

/// Power of the component at f_hz, from a least-squares sine/cosine fit.
double tone_power(const std::vector<double>& x, double fs, double f_hz);

/// Seeded standard normal samples (Box-Muller over a 64-bit LCG).
std::vector<double> gaussian(std::size_t n, std::uint64_t seed);

}  // namespace oracle
