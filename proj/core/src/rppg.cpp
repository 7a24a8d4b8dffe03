#include "facepulse/rppg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

#include "facepulse/dsp.hpp"
#include "facepulse/error.hpp"
#include "facepulse/linalg.hpp"

namespace fp::rppg {

namespace {

constexpr std::array<Method, 10> kMethods{Method::green, Method::ica, Method::pca, Method::chrom, Method::pbv,
                                          Method::ssr,   Method::lab, Method::pos, Method::lgi,   Method::omit};

constexpr std::size_t kMinSamples = 32;

void check(const TraceMatrix& tm) {
  if (static_cast<std::size_t>(tm.C.cols()) < kMinSamples)
    fail(Errc::invalid_input, "trace window needs at least 32 samples");
  if (!tm.C.allFinite()) fail(Errc::invalid_input, "trace window contains non-finite values");
}

double row_variance_mean(const Eigen::Matrix3Xd& C) {
  double v = 0.0;
  for (int r = 0; r < 3; ++r) {
    const double m = C.row(r).mean();
    v += (C.row(r).array() - m).square().mean();
  }
  return v / 3.0;
}

Eigen::Matrix3Xd mean_normalized(const Eigen::Matrix3Xd& C) {
  Eigen::Matrix3Xd out = C;
  for (int r = 0; r < 3; ++r) {
    const double m = C.row(r).mean();
    if (!(std::abs(m) > 1e-12)) fail(Errc::degenerate_trace, "zero-mean color channel");
    out.row(r) /= m;
  }
  return out;
}

Eigen::Matrix3Xd mean_removed(const Eigen::Matrix3Xd& C) {
  Eigen::Matrix3Xd out = C;
  for (int r = 0; r < 3; ++r) out.row(r).array() -= C.row(r).mean();
  return out;
}

// Mean removal plus the flat-output test against the raw input.
PulseWindow finish(std::vector<double> s, const TraceMatrix& tm, Method m) {
  PulseWindow w;
  w.fs = tm.fs;
  w.method = m;
  const double mu = dsp::mean(s);
  for (double& x : s) x -= mu;
  w.flat = dsp::variance(s) <= 1e-12 * row_variance_mean(tm.C);
  w.samples = std::move(s);
  return w;
}

std::vector<double> to_vec(const Eigen::RowVectorXd& r) { return {r.data(), r.data() + r.size()}; }

// Index of the best-scoring component; sign chosen so it correlates
// positively with the green row.
std::vector<double> pick_component(const Eigen::MatrixXd& comps, const Eigen::Matrix3Xd& C, double fs,
                                   const MethodOptions& opt, double min_var) {
  int best = -1;
  double best_score = -1.0;
  for (Eigen::Index i = 0; i < comps.rows(); ++i) {
    const std::vector<double> c = to_vec(comps.row(i));
    if (dsp::variance(c) < min_var) continue;
    const double score = peak_ratio(c, fs, opt.band_lo, opt.band_hi);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) fail(Errc::degenerate_trace, "no usable component");
  Eigen::RowVectorXd out = comps.row(best);
  const Eigen::RowVectorXd g = C.row(1).array() - C.row(1).mean();
  if ((out.array() - out.mean()).matrix().dot(g) < 0.0) out = -out;
  return to_vec(out);
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::green: return "green";
    case Method::ica: return "ica";
    case Method::pca: return "pca";
    case Method::chrom: return "chrom";
    case Method::pbv: return "pbv";
    case Method::ssr: return "2sr";
    case Method::lab: return "lab";
    case Method::pos: return "pos";
    case Method::lgi: return "lgi";
    case Method::omit: return "omit";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : kMethods)
    if (method_name(m) == name) return m;
  fail(Errc::config, "unknown method '" + std::string(name) + "'");
}

std::span<const Method> all_methods() noexcept { return kMethods; }

TraceMatrix TraceMatrix::from(const regions::RgbTrace& t) {
  TraceMatrix tm;
  tm.fs = t.fs;
  const auto n = static_cast<Eigen::Index>(t.size());
  tm.C.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    tm.C(0, i) = t.r[static_cast<std::size_t>(i)];
    tm.C(1, i) = t.g[static_cast<std::size_t>(i)];
    tm.C(2, i) = t.b[static_cast<std::size_t>(i)];
  }
  return tm;
}

double peak_ratio(std::span<const double> x, double fs, double lo, double hi) {
  const auto psd = dsp::welch_psd(x, fs);
  double peak = 0.0, total = 0.0;
  for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < lo || psd.freqs[i] > hi) continue;
    peak = std::max(peak, psd.power[i]);
    total += psd.power[i];
  }
  return total > 0.0 ? peak / total : 0.0;
}

PulseWindow green(const TraceMatrix& tm, const MethodOptions&) {
  check(tm);
  return finish(to_vec(tm.C.row(1)), tm, Method::green);
}

PulseWindow chrom(const TraceMatrix& tm, const MethodOptions&) {
  check(tm);
  const Eigen::Matrix3Xd Cn = mean_normalized(tm.C);
  const Eigen::RowVectorXd X = 3.0 * Cn.row(0) - 2.0 * Cn.row(1);
  const Eigen::RowVectorXd Y = 1.5 * Cn.row(0) + Cn.row(1) - 1.5 * Cn.row(2);
  const double sx = dsp::stddev(to_vec(X));
  const double sy = dsp::stddev(to_vec(Y));
  const double alpha = sy > 0.0 ? sx / sy : 0.0;
  auto w = finish(to_vec(X - alpha * Y), tm, Method::chrom);
  w.normalized = true;
  return w;
}

PulseWindow pos(const TraceMatrix& tm, const MethodOptions& opt) {
  check(tm);
  const Eigen::Index N = tm.C.cols();
  const Eigen::Index l = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(opt.pos_window_s * tm.fs)), 2, N);
  std::vector<double> H(static_cast<std::size_t>(N), 0.0);
  for (Eigen::Index m = 0; m + l <= N; ++m) {
    const Eigen::Matrix3Xd Cn = mean_normalized(tm.C.middleCols(m, l));
    const Eigen::RowVectorXd S1 = Cn.row(1) - Cn.row(2);
    const Eigen::RowVectorXd S2 = -2.0 * Cn.row(0) + Cn.row(1) + Cn.row(2);
    const double s1 = dsp::stddev(to_vec(S1));
    const double s2 = dsp::stddev(to_vec(S2));
    const double alpha = s2 > 1e-300 ? s1 / s2 : 0.0;
    const Eigen::RowVectorXd h = S1 + alpha * S2;
    const double hm = h.mean();
    for (Eigen::Index k = 0; k < l; ++k) H[static_cast<std::size_t>(m + k)] += h(k) - hm;
  }
  auto w = finish(std::move(H), tm, Method::pos);
  w.normalized = true;
  return w;
}

PulseWindow pca_method(const TraceMatrix& tm, const MethodOptions& opt) {
  check(tm);
  const Eigen::Matrix3Xd X = mean_removed(tm.C);
  const Eigen::Matrix3d cov = X * X.transpose() / static_cast<double>(X.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::MatrixXd comps = es.eigenvectors().transpose() * X;
  const double total = cov.trace();
  if (!(total > 0.0)) return finish(std::vector<double>(static_cast<std::size_t>(X.cols()), 0.0), tm, Method::pca);
  return finish(pick_component(comps, tm.C, tm.fs, opt, 1e-12 * total), tm, Method::pca);
}

PulseWindow ica_method(const TraceMatrix& tm, const MethodOptions& opt) {
  check(tm);
  const Eigen::Index N = tm.C.cols();
  const Eigen::Matrix3Xd X = mean_removed(tm.C);
  const Eigen::Matrix3d cov = X * X.transpose() / static_cast<double>(N);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d ev = es.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() < 1e-10 * ev.maxCoeff())
    fail(Errc::degenerate_trace, "ICA whitening impossible: trace covariance is rank deficient");
  const Eigen::Matrix3d V = es.eigenvectors();
  const Eigen::Matrix3d Wh = V * ev.cwiseInverse().cwiseSqrt().asDiagonal() * V.transpose();
  const Eigen::Matrix3Xd Z = Wh * X;

  const auto sym_decorrelate = [](const Eigen::Matrix3d& W) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s(W * W.transpose());
    return Eigen::Matrix3d(s.eigenvectors() * s.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                           s.eigenvectors().transpose() * W);
  };

  std::mt19937_64 rng(opt.ica_seed);
  std::normal_distribution<double> nd;
  Eigen::Matrix3d W;
  for (int i = 0; i < 9; ++i) W(i / 3, i % 3) = nd(rng);
  W = sym_decorrelate(W);

  for (int it = 0; it < opt.ica_max_iter; ++it) {
    const Eigen::Matrix3Xd WZ = W * Z;
    const Eigen::Matrix3Xd G = WZ.array().tanh();
    const Eigen::Vector3d Gp = (1.0 - G.array().square()).rowwise().mean();
    Eigen::Matrix3d Wn = G * Z.transpose() / static_cast<double>(N) - Gp.asDiagonal() * W;
    Wn = sym_decorrelate(Wn);
    const double lim = ((Wn * W.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    W = Wn;
    if (lim < opt.ica_tol) break;
  }
  const Eigen::MatrixXd S = W * Z;
  return finish(pick_component(S, tm.C, tm.fs, opt, 1e-12), tm, Method::ica);
}

PulseWindow pbv(const TraceMatrix& tm, const MethodOptions& opt) {
  check(tm);
  const Eigen::Matrix3Xd Ct = mean_removed(mean_normalized(tm.C));
  Eigen::Matrix3d Q = Ct * Ct.transpose();
  const Eigen::Vector3d sig(opt.pbv_signature[0], opt.pbv_signature[1], opt.pbv_signature[2]);
  bool ridge = false;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(Q);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) {
    Q += Eigen::Matrix3d::Identity() * (1e-9 * std::max(Q.trace(), 1e-300));
    ridge = true;
  }
  const Eigen::Vector3d w = Q.ldlt().solve(sig);
  const double denom = sig.dot(w);
  Eigen::RowVectorXd S = w.transpose() * Ct;
  if (std::abs(denom) > 0.0) S /= denom;
  auto out = finish(to_vec(S), tm, Method::pbv);
  out.regularized = ridge;
  out.normalized = true;
  return out;
}

Projection lgi_projection(const TraceMatrix& tm) {
  Projection p;
  const Eigen::Matrix3Xd X = mean_normalized(tm.C);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU);
  p.S = svd.matrixU().col(0);
  if (p.S.dot(X.rowwise().mean()) < 0.0) p.S = -p.S;
  p.Y = (Eigen::Matrix3d::Identity() - p.S * p.S.transpose()) * X;
  p.Q = svd.matrixU();
  return p;
}

PulseWindow lgi(const TraceMatrix& tm, const MethodOptions&) {
  check(tm);
  auto w = finish(to_vec(lgi_projection(tm).Y.row(1)), tm, Method::lgi);
  w.normalized = true;
  return w;
}

Projection omit_projection(const TraceMatrix& tm, bool normalize) {
  Projection p;
  const Eigen::Matrix3Xd X = normalize ? mean_normalized(tm.C) : tm.C;
  auto qr = linalg::householder_qr(X);
  p.S = qr.Q.col(0);
  if (p.S.dot(X.rowwise().mean()) < 0.0) p.S = -p.S;
  p.Y = (Eigen::Matrix3d::Identity() - p.S * p.S.transpose()) * X;
  p.Q = qr.Q;
  return p;
}

PulseWindow omit(const TraceMatrix& tm, const MethodOptions& opt) {
  check(tm);
  auto w = finish(to_vec(omit_projection(tm, opt.omit_normalize).Y.row(1)), tm, Method::omit);
  w.normalized = opt.omit_normalize;
  return w;
}

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  const auto lin = [](double c) {
    c /= 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double R = lin(r), G = lin(g), B = lin(b);
  constexpr double M[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                              {0.2126729, 0.7151522, 0.0721750},
                              {0.0193339, 0.1191920, 0.9503041}};
  // White point as the image of RGB white, so grays map to a* = b* = 0.
  constexpr double Xn = M[0][0] + M[0][1] + M[0][2];
  constexpr double Yn = M[1][0] + M[1][1] + M[1][2];
  constexpr double Zn = M[2][0] + M[2][1] + M[2][2];
  const double X = (M[0][0] * R + M[0][1] * G + M[0][2] * B) / Xn;
  const double Y = (M[1][0] * R + M[1][1] * G + M[1][2] * B) / Yn;
  const double Z = (M[2][0] * R + M[2][1] * G + M[2][2] * B) / Zn;
  const auto f = [](double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(X), fy = f(Y), fz = f(Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

PulseWindow lab_method(const TraceMatrix& tm, const MethodOptions&) {
  check(tm);
  std::vector<double> a(static_cast<std::size_t>(tm.C.cols()));
  for (Eigen::Index i = 0; i < tm.C.cols(); ++i)
    a[static_cast<std::size_t>(i)] = srgb_to_lab(tm.C(0, i), tm.C(1, i), tm.C(2, i))[1];
  return finish(std::move(a), tm, Method::lab);
}

PulseWindow ssr_2sr(std::span<const std::array<double, 6>> moments, double fs, const MethodOptions&) {
  const std::size_t N = moments.size();
  if (N < kMinSamples) fail(Errc::invalid_input, "2SR window needs at least 32 frames");
  PulseWindow w;
  w.fs = fs;
  w.method = Method::ssr;

  std::vector<Eigen::Vector3d> lam(N);
  std::vector<Eigen::Matrix3d> U(N);
  for (std::size_t t = 0; t < N; ++t) {
    const auto& m = moments[t];
    Eigen::Matrix3d C;
    C << m[0], m[3], m[4], m[3], m[1], m[5], m[4], m[5], m[2];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
    // Descending order; dominant direction oriented into the positive octant.
    lam[t] = es.eigenvalues().reverse();
    U[t] = es.eigenvectors().rowwise().reverse();
    if (U[t].col(0).sum() < 0.0) U[t].col(0) *= -1.0;
    if (!(lam[t](0) > lam[t](1))) w.eig_unstable = true;
  }

  // Backward stride spans the whole window: every frame rotates against frame 0.
  const Eigen::Vector3d& l0 = lam[0];
  const Eigen::Matrix3d& u0 = U[0];
  if (!(l0(1) > 0.0) || !(l0(2) > 0.0)) {
    w.samples.assign(N, 0.0);
    w.flat = true;
    return w;
  }
  std::vector<double> s0(N), s1(N);
  for (std::size_t t = 0; t < N; ++t) {
    const Eigen::Vector3d ut = U[t].col(0);
    const Eigen::Vector3d sr = std::sqrt(lam[t](0) / l0(1)) * ut.dot(u0.col(1)) * u0.col(1) +
                               std::sqrt(lam[t](0) / l0(2)) * ut.dot(u0.col(2)) * u0.col(2);
    s0[t] = sr(0);
    s1[t] = sr(1);
  }
  const double sd0 = dsp::stddev(s0);
  const double sd1 = dsp::stddev(s1);
  const double alpha = sd1 > 0.0 ? sd0 / sd1 : 0.0;
  std::vector<double> p(N);
  for (std::size_t t = 0; t < N; ++t) p[t] = s0[t] - alpha * s1[t];
  const double mu = dsp::mean(p);
  for (double& x : p) x -= mu;
  // The rotation is dimensionless; an absolute floor plays the role of the
  // input-variance ratio used by the color-trace methods.
  w.flat = dsp::variance(p) <= 1e-20;
  w.samples = std::move(p);
  return w;
}

PulseWindow apply(Method m, const regions::RgbTrace& trace, const MethodOptions& opt) {
  if (m == Method::ssr) {
    if (trace.moments.size() != trace.size()) fail(Errc::invalid_input, "2SR needs per-frame pixel moments");
    return ssr_2sr(trace.moments, trace.fs, opt);
  }
  const TraceMatrix tm = TraceMatrix::from(trace);
  switch (m) {
    case Method::green: return green(tm, opt);
    case Method::ica: return ica_method(tm, opt);
    case Method::pca: return pca_method(tm, opt);
    case Method::chrom: return chrom(tm, opt);
    case Method::pbv: return pbv(tm, opt);
    case Method::lab: return lab_method(tm, opt);
    case Method::pos: return pos(tm, opt);
    case Method::lgi: return lgi(tm, opt);
    case Method::omit: return omit(tm, opt);
    case Method::ssr: break;
  }
  fail(Errc::invalid_input, "unhandled method");
}

}  // namespace fp::rppg
