#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {
constexpr long double kPi = 3.141592653589793238462643383279502884L;
}

std::vector<double> line_residual(const std::vector<double>& x) {
  const long double n = static_cast<long double>(x.size());
  long double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double t = static_cast<long double>(i);
    st += t;
    sy += x[i];
    stt += t * t;
    sty += t * x[i];
  }
  const long double slope = (n * sty - st * sy) / (n * stt - st * st);
  const long double icpt = (sy - slope * st) / n;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<double>(x[i] - (icpt + slope * static_cast<long double>(i)));
  return out;
}

double fir_magnitude(const std::vector<double>& taps, double f_hz, double fs) {
  long double re = 0, im = 0;
  const long double w = 2.0L * kPi * f_hz / fs;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    re += taps[k] * std::cos(w * static_cast<long double>(k));
    im -= taps[k] * std::sin(w * static_cast<long double>(k));
  }
  return static_cast<double>(std::sqrt(re * re + im * im));
}

std::vector<double> window_mean(const std::vector<double>& x, std::size_t width) {
  const long left = static_cast<long>((width - 1) / 2);
  const long right = static_cast<long>(width / 2);
  const long n = static_cast<long>(x.size());
  std::vector<double> out;
  for (long i = 0; i < n; ++i) {
    long double s = 0;
    long c = 0;
    for (long j = i - left; j <= i + right; ++j) {
      if (j < 0 || j >= n) continue;
      s += x[static_cast<std::size_t>(j)];
      ++c;
    }
    out.push_back(static_cast<double>(s / c));
  }
  return out;
}

double katz(const std::vector<double>& x) {
  long double length = 0, far = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    length += std::hypot(1.0L, static_cast<long double>(x[i + 1]) - x[i]);
  for (std::size_t i = 1; i < n; ++i)
    far = std::max(far, std::hypot(static_cast<long double>(i), static_cast<long double>(x[i]) - x[0]));
  const long double avg = length / static_cast<long double>(n - 1);
  const long double steps = length / avg;
  return static_cast<double>(std::log10(steps) / (std::log10(steps) + std::log10(far / length)));
}

double sample_entropy(const std::vector<double>& x, int m, double r) {
  const std::size_t N = x.size();
  const std::size_t M = static_cast<std::size_t>(m);
  const auto close = [&](std::size_t i, std::size_t j, std::size_t len) {
    for (std::size_t k = 0; k < len; ++k)
      if (std::fabs(x[i + k] - x[j + k]) > r) return false;
    return true;
  };
  long long b = 0, a = 0;
  for (std::size_t i = 0; i < N - M; ++i)
    for (std::size_t j = 0; j < N - M; ++j) {
      if (i == j) continue;
      if (close(i, j, M)) ++b;
      if (close(i, j, M + 1)) ++a;
    }
  if (a == 0 || b == 0) return std::numeric_limits<double>::infinity();
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

double mae(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(static_cast<long double>(a[i]) - b[i]);
  return static_cast<double>(s / a.size());
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s / a.size()));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const long double n = static_cast<long double>(a.size());
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += static_cast<long double>(a[i]) * a[i];
    sbb += static_cast<long double>(b[i]) * b[i];
    sab += static_cast<long double>(a[i]) * b[i];
  }
  return static_cast<double>((n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb)));
}

void srgb_to_lab(double r, double g, double b, double lab[3]) {
  double c[3] = {r / 255.0, g / 255.0, b / 255.0};
  for (double& v : c) v = v > 0.04045 ? std::pow((v + 0.055) / 1.055, 2.4) : v / 12.92;
  const double X = (0.4124 * c[0] + 0.3576 * c[1] + 0.1805 * c[2]) / 0.95047;
  const double Y = (0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]) / 1.0;
  const double Z = (0.0193 * c[0] + 0.1192 * c[1] + 0.9505 * c[2]) / 1.08883;
  const auto f = [](double t) { return t > 216.0 / 24389.0 ? std::cbrt(t) : (24389.0 / 27.0 * t + 16.0) / 116.0; };
  lab[0] = 116.0 * f(Y) - 16.0;
  lab[1] = 500.0 * (f(X) - f(Y));
  lab[2] = 200.0 * (f(Y) - f(Z));
}

double tone_power(const std::vector<double>& x, double fs, double f_hz) {
  // Normal equations of x ~ a cos + b sin + c.
  long double m[3][4] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double t = static_cast<long double>(i) / fs;
    const long double v[3] = {std::cos(2 * kPi * f_hz * t), std::sin(2 * kPi * f_hz * t), 1.0L};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += v[r] * v[c];
      m[r][3] += v[r] * x[i];
    }
  }
  for (int p = 0; p < 3; ++p)
    for (int r = 0; r < 3; ++r) {
      if (r == p) continue;
      const long double k = m[r][p] / m[p][p];
      for (int c = 0; c < 4; ++c) m[r][c] -= k * m[p][c];
    }
  const long double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1];
  return static_cast<double>((a * a + b * b) / 2);
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::uint64_t s = seed * 2862933555777941757ULL + 3037000493ULL;
  const auto uniform = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return (static_cast<double>(s >> 11) + 0.5) / 9007199254740992.0;
  };
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double u1 = uniform(), u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    out.push_back(rad * std::cos(2.0 * static_cast<double>(kPi) * u2));
    if (out.size() < n) out.push_back(rad * std::sin(2.0 * static_cast<double>(kPi) * u2));
  }
  return out;
}

}  // namespace oracle
