#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rdx/model.hpp"
#include "rdx/simdiag.hpp"

namespace rdx {

/// Rate bounds in nats. per_mode_lower is indexed by sorted position,
/// per_mode_upper by the diagonalizer's mode.
struct RateBounds {
  double lower = 0;
  double upper = 0;
  std::vector<double> per_mode_lower;
  std::vector<double> per_mode_upper;
  bool coincide = false;
};

/// Forward channel u = F y + nu realizing the upper bound, expressed in the
/// diagonalized basis: row i of `encoder` is row i of V C for an active mode
/// and `noise_cov` is diagonal. Modes with lambda'_i >= lambda_i would need
/// infinite noise and are dropped. The channel u' = U C y + nu' with
/// correlated noise maps to this one through u = P V U^T u', where P keeps
/// the active rows.
struct TestChannel {
  Matrix encoder;    // n_active x n_y
  Matrix noise_cov;  // n_active x n_active, diagonal
  std::vector<bool> active;
  JointDiagonalization basis;
  Matrix target;     // the D the channel was built for

  Index n_active() const { return encoder.rows(); }
  bool all_active() const { return n_active() == static_cast<Index>(active.size()); }
};

/// (Sigma_{x|z} - Sigma_{x|yz}, D - Sigma_{x|yz}).
inline std::pair<SpdMatrix, SpdMatrix> sigma1_sigma2(const ConditionalStats& stats, const Matrix& d) {
  require_square(d, "D");
  if (d.rows() != stats.nx())
    throw Error(ErrorKind::DimensionMismatch, "D must be " + std::to_string(stats.nx()) + "x" +
                                                  std::to_string(stats.nx()));
  if (!is_symmetric(d)) throw Error(ErrorKind::InvalidArgument, "D is not symmetric");

  const Matrix s2 = symmetrize(d - stats.x_given_yz.matrix());
  const double min2 = min_eigenvalue(s2);
  if (!(min2 > tol::pd * spectral_norm(symmetrize(d))))
    throw Error(ErrorKind::InfeasibleDistortion,
                "D - Sigma_{x|yz} is not positive definite (D must strictly exceed the remote-coding floor)",
                {{"min_eigenvalue_D_minus_Sigma_x_given_yz", min2}});

  const Matrix s1 = symmetrize(stats.x_given_z.matrix() - stats.x_given_yz.matrix());
  const double min1 = min_eigenvalue(s1);
  if (!(min1 > tol::pd * spectral_norm(stats.x_given_z)))
    throw Error(ErrorKind::DegenerateObservation,
                "Sigma_{x|z} - Sigma_{x|yz} is not positive definite (y adds no information in some direction)",
                {{"min_eigenvalue_Sigma1", min1}});
  return {SpdMatrix(s1, "Sigma1"), SpdMatrix(s2, "Sigma2")};
}

inline RateBounds rate_bounds(const ConditionalStats& stats, const Matrix& d) {
  const auto [s1, s2] = sigma1_sigma2(stats, d);
  const JointDiagonalization jd = whiten_diagonalize(s1, s2);
  const Index n = jd.dim();

  RateBounds rb;
  rb.per_mode_upper.resize(static_cast<std::size_t>(n));
  rb.per_mode_lower.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    rb.per_mode_upper[static_cast<std::size_t>(i)] = 0.5 * log_plus(jd.lambda(i) / jd.lambda_prime(i));
  }
  std::vector<double> ls(jd.lambda.data(), jd.lambda.data() + n);
  std::vector<double> lps(jd.lambda_prime.data(), jd.lambda_prime.data() + n);
  std::sort(ls.begin(), ls.end(), std::greater<>());
  std::sort(lps.begin(), lps.end(), std::greater<>());
  for (std::size_t i = 0; i < ls.size(); ++i) rb.per_mode_lower[i] = 0.5 * log_plus(ls[i] / lps[i]);

  for (double v : rb.per_mode_upper) rb.upper += v;
  for (double v : rb.per_mode_lower) rb.lower += v;
  rb.coincide = std::abs(rb.upper - rb.lower) <= tol::rate_atol;
  return rb;
}

/// Closed-form rate for Sigma_{x|yz} < D <= Sigma_{x|z}:
///   1/2 log(|Sigma_{x|z} - Sigma_{x|yz}| / |D - Sigma_{x|yz}|).
inline double exact_rdf(const ConditionalStats& stats, const Matrix& d) {
  const auto [s1, s2] = sigma1_sigma2(stats, d);
  if (!loewner_leq(d, stats.x_given_z, tol::pd))
    throw Error(ErrorKind::RegimeViolation, "D is not Loewner-below Sigma_{x|z}",
                {{"min_eigenvalue_Sigma_x_given_z_minus_D", min_eigenvalue(stats.x_given_z.matrix() - d)}});
  return std::max(0.0, 0.5 * (log_det_spd(s1, "Sigma1") - log_det_spd(s2, "Sigma2")));
}

inline TestChannel build_test_channel(const ConditionalStats& stats, const Matrix& d) {
  const auto [s1, s2] = sigma1_sigma2(stats, d);
  JointDiagonalization jd = whiten_diagonalize(s1, s2);
  const Index n = jd.dim();

  TestChannel ch;
  ch.active.resize(static_cast<std::size_t>(n));
  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    // lambda'_i < lambda_i within rate_atol on the ratio.
    const bool on = jd.lambda_prime(i) < jd.lambda(i) * (1.0 - tol::rate_atol);
    ch.active[static_cast<std::size_t>(i)] = on;
    if (on) rows.push_back(i);
  }
  const Matrix vc = jd.V * stats.C;
  const Index na = static_cast<Index>(rows.size());
  ch.encoder.resize(na, stats.ny());
  ch.noise_cov = Matrix::Zero(na, na);
  for (Index r = 0; r < na; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    const double l = jd.lambda(i);
    const double m = std::min(l, jd.lambda_prime(i));
    ch.encoder.row(r) = vc.row(i);
    ch.noise_cov(r, r) = l * m / (l - m);
  }
  ch.basis = std::move(jd);
  ch.target = symmetrize(d);
  return ch;
}

/// Coding-noise covariance in the basis of u' = U C y + nu':
///   U V^{-1} diag(lambda_i m_i / (lambda_i - m_i)) V^{-T} U^T.
/// Defined only when every mode is active.
inline std::optional<Matrix> full_noise_cov(const TestChannel& ch) {
  if (!ch.all_active()) return std::nullopt;
  const JointDiagonalization& jd = ch.basis;
  const Matrix& vinv = jd.V_inv;
  Vector nv(jd.dim());
  for (Index i = 0; i < jd.dim(); ++i) nv(i) = ch.noise_cov(i, i);
  return symmetrize(jd.U * vinv * nv.asDiagonal() * vinv.transpose() * jd.U.transpose());
}

/// I(y; u | z) = 1/2 log(|F Sigma_{y|z} F^T + Sigma_nu| / |Sigma_nu|).
inline double channel_rate(const TestChannel& ch, const ConditionalStats& stats) {
  if (ch.encoder.cols() != stats.ny())
    throw Error(ErrorKind::DimensionMismatch, "channel encoder does not match n_y");
  if (ch.n_active() == 0) return 0.0;
  const Matrix& f = ch.encoder;
  const Matrix u_given_z = symmetrize(f * stats.y_given_z.matrix() * f.transpose() + ch.noise_cov);
  return 0.5 * (log_det_spd(u_given_z, "Sigma_{u|z}") - log_det_spd(ch.noise_cov, "Sigma_nu"));
}

/// Error covariance of E[x | u, z] under the channel, by Gaussian conditioning:
///   Sigma_{x|z} - Sigma_{xu|z} Sigma_{u|z}^{-1} Sigma_{xu|z}^T,
///   Sigma_{xu|z} = C Sigma_{y|z} F^T.
inline SymMatrix achieved_distortion(const TestChannel& ch, const ConditionalStats& stats) {
  if (ch.encoder.cols() != stats.ny())
    throw Error(ErrorKind::DimensionMismatch, "channel encoder does not match n_y");
  if (ch.n_active() == 0) return SymMatrix(stats.x_given_z.matrix(), "achieved distortion");
  const Matrix& f = ch.encoder;
  const Matrix xu = stats.C * stats.y_given_z.matrix() * f.transpose();
  const Matrix uu = f * stats.y_given_z.matrix() * f.transpose() + ch.noise_cov;
  const Matrix err = stats.x_given_z.matrix() - xu * spd_solve(uu, xu.transpose(), "Sigma_{u|z}");
  return SymMatrix(symmetrize(err), "achieved distortion");
}

/// Sigma_{x|yz} + V^{-1} diag(min(lambda_i, lambda'_i)) V^{-T}.
inline SymMatrix closed_form_distortion(const TestChannel& ch, const ConditionalStats& stats) {
  const JointDiagonalization& jd = ch.basis;
  const Matrix& vinv = jd.V_inv;
  const Vector m = jd.lambda.cwiseMin(jd.lambda_prime);
  return SymMatrix(symmetrize(stats.x_given_yz.matrix() + vinv * m.asDiagonal() * vinv.transpose()),
                   "closed-form distortion");
}

/// D(t) = Sigma_{x|yz} + t (Sigma_{x|z} - Sigma_{x|yz}).
inline Matrix distortion_on_path(const ConditionalStats& stats, double t) {
  return symmetrize(stats.x_given_yz.matrix() + t * (stats.x_given_z.matrix() - stats.x_given_yz.matrix()));
}

struct CurvePoint {
  double t = 0;
  double lower = 0;
  double upper = 0;
  std::optional<double> exact;
};

inline CurvePoint sweep_point(const ConditionalStats& stats, double t) {
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be > 0");
  const Matrix d = distortion_on_path(stats, t);
  const RateBounds rb = rate_bounds(stats, d);
  CurvePoint p{t, rb.lower, rb.upper, std::nullopt};
  if (t <= 1.0) p.exact = exact_rdf(stats, d);
  return p;
}

/// K points with t log-spaced over (0.01, t_max]; the last point is t_max.
inline std::vector<CurvePoint> sweep_curve(const ConditionalStats& stats, int k, double t_max = 1.0) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "sweep needs at least 2 points");
  constexpr double t_min = 0.01;
  if (!(t_max > t_min)) throw Error(ErrorKind::InvalidArgument, "t_max must exceed 0.01");
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(k));
  const double span = std::log(t_max / t_min);
  for (int i = 1; i <= k; ++i) {
    const double t = i == k ? t_max : t_min * std::exp(span * i / k);
    out.push_back(sweep_point(stats, t));
  }
  return out;
}

}  // namespace rdx
