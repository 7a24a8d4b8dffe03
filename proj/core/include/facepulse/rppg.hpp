#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "facepulse/regions.hpp"

namespace fp::rppg {

enum class Method { green, ica, pca, chrom, pbv, ssr, lab, pos, lgi, omit };

std::string_view method_name(Method m) noexcept;
/// Registry lookup by lowercase name ("2sr" for Method::ssr). Throws Errc::config.
Method parse_method(std::string_view name);
std::span<const Method> all_methods() noexcept;
/// 2SR works on pixel moments rather than mean colors.
constexpr bool requires_pixels(Method m) noexcept { return m == Method::ssr; }

/// Rows R, G, B of one window.
struct TraceMatrix {
  Eigen::Matrix3Xd C;
  double fs = 0.0;

  static TraceMatrix from(const regions::RgbTrace& t);
  Eigen::Index size() const noexcept { return C.cols(); }
};

struct MethodOptions {
  double band_lo = 0.75;  // component selection band (PCA, ICA)
  double band_hi = 4.0;
  std::array<double, 3> pbv_signature{0.33, 0.77, 0.53};
  std::uint64_t ica_seed = 0;
  int ica_max_iter = 200;
  double ica_tol = 1e-6;
  double pos_window_s = 1.6;
  bool omit_normalize = true;  // divide rows by their means before the QR
};

struct PulseWindow {
  std::vector<double> samples;
  double fs = 0.0;
  Method method = Method::green;
  bool flat = false;            // output variance <= 1e-12 of the input's
  bool regularized = false;     // PBV ridge applied
  bool normalized = false;      // rows were mean-normalized
  bool eig_unstable = false;    // 2SR dominant eigenvalue not strictly maximal
};

PulseWindow green(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow chrom(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow pos(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow pca_method(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow ica_method(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow pbv(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow lgi(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow lab_method(const TraceMatrix& tm, const MethodOptions& opt = {});
PulseWindow omit(const TraceMatrix& tm, const MethodOptions& opt = {});

/// moments: per-frame mean outer product over skin pixels (rr, gg, bb, rg, rb, gb).
PulseWindow ssr_2sr(std::span<const std::array<double, 6>> moments, double fs, const MethodOptions& opt = {});

/// Dominant-direction projection shared by LGI and OMIT: Y = (I - S S^T) X.
struct Projection {
  Eigen::Vector3d S;
  Eigen::Matrix3Xd Y;
  Eigen::Matrix3d Q;  // OMIT only: full orthogonal factor
};
Projection lgi_projection(const TraceMatrix& tm);
Projection omit_projection(const TraceMatrix& tm, bool normalize = true);

/// Dispatch through the registry. 2SR reads trace.moments.
PulseWindow apply(Method m, const regions::RgbTrace& trace, const MethodOptions& opt = {});

/// In-band peak power over total in-band power (component selector).
double peak_ratio(std::span<const double> x, double fs, double lo, double hi);

/// sRGB (0..255, D65) to CIELab.
std::array<double, 3> srgb_to_lab(double r, double g, double b);

}  // namespace fp::rppg
