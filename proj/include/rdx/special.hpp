#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rdx/rdf.hpp"

namespace rdx {

/// Scalar remote Wyner-Ziv rate: 1/2 log((s_z - s_yz) / (D - s_yz)) for
/// s_yz < D <= s_z, zero above s_z.
inline double scalar_rdf(double sigma_x_given_z, double sigma_x_given_yz, double d) {
  if (!(sigma_x_given_yz > 0.0)) throw Error(ErrorKind::InvalidArgument, "Sigma_{x|yz} must be > 0");
  if (!(sigma_x_given_yz < sigma_x_given_z))
    throw Error(ErrorKind::DegenerateObservation, "Sigma_{x|yz} must be < Sigma_{x|z}");
  if (!(d > sigma_x_given_yz))
    throw Error(ErrorKind::InfeasibleDistortion, "D must exceed Sigma_{x|yz}",
                {{"D_minus_Sigma_x_given_yz", d - sigma_x_given_yz}});
  if (d >= sigma_x_given_z) return 0.0;
  return 0.5 * std::log((sigma_x_given_z - sigma_x_given_yz) / (d - sigma_x_given_yz));
}

// ---------------------------------------------------------------------------
// Trace (MSE) constraint: reverse water-filling over eigenvalues of C S_{y|z} C^T.

struct WaterfillResult {
  double rate = 0;
  double level = 0;
  std::vector<double> allocations;  // min(level, lambda_i)
  double budget = 0;                // n_x D - tr(Sigma_{x|yz})
  std::vector<double> lambdas;      // descending
  double residual = 0;              // sum(allocations) - budget
  int iterations = 0;
};

namespace detail {

inline double mse_budget(const ConditionalStats& stats, double d_scalar) {
  const double nx = static_cast<double>(stats.nx());
  const double lo = stats.x_given_yz.matrix().trace();
  const double hi = stats.x_given_z.matrix().trace();
  const double total = nx * d_scalar;
  if (!(total > lo) || total > hi * (1.0 + tol::rtol))
    throw Error(ErrorKind::RegimeViolation,
                "n_x D must lie in (tr Sigma_{x|yz}, tr Sigma_{x|z}]",
                {{"n_x_D", total}, {"trace_Sigma_x_given_yz", lo}, {"trace_Sigma_x_given_z", hi}});
  return total - lo;
}

inline double waterfill_sum(std::span<const double> lambdas, double level) {
  double s = 0;
  for (double l : lambdas) s += std::min(level, l);
  return s;
}

}  // namespace detail

inline WaterfillResult mse_rdf(const ConditionalStats& stats, double d_scalar) {
  double budget = detail::mse_budget(stats, d_scalar);
  const Matrix s1 = stats.C * stats.y_given_z.matrix() * stats.C.transpose();
  const Vector ev = eigenvalues_desc(s1).cwiseMax(0.0);

  WaterfillResult r;
  r.lambdas.assign(ev.data(), ev.data() + ev.size());
  const double lambda_sum = ev.sum();
  // tr Sigma_{x|z} - tr Sigma_{x|yz} = sum lambda_i only to rtol, so a budget
  // within rtol of the total counts as full.
  if (budget >= lambda_sum * (1.0 - tol::rtol)) budget = lambda_sum;
  r.budget = budget;

  // sum_i min(level, lambda_i) is continuous and nondecreasing in level.
  // A full budget leaves the level free above max lambda; take max lambda.
  double lo = 0.0, hi = ev(0);
  int it = 0;
  if (budget == lambda_sum) lo = hi;
  for (; it < 200 && lo < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::waterfill_sum(r.lambdas, mid) < budget) lo = mid;
    else hi = mid;
  }
  const double res_lo = detail::waterfill_sum(r.lambdas, lo) - budget;
  const double res_hi = detail::waterfill_sum(r.lambdas, hi) - budget;
  r.level = std::abs(res_lo) < std::abs(res_hi) ? lo : hi;
  r.residual = std::abs(res_lo) < std::abs(res_hi) ? res_lo : res_hi;
  r.iterations = it;
  if (!(r.level > 0.0)) throw Error(ErrorKind::NumericalFailure, "water level collapsed to zero");

  for (double l : r.lambdas) {
    r.allocations.push_back(std::min(r.level, l));
    r.rate += 0.5 * log_plus(l / r.level);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Mutual-information constraint I(x; u | z) >= R_I: the rate-rate function.

struct RateRateResult {
  double rate = 0;
  double gamma = 0;
  std::vector<double> mu;  // descending, in (0, 1)
  double r_i = 0;
  double residual = 0;     // water-equation LHS - R_I
  int iterations = 0;
};

/// Eigenvalues of S_{y|z}^{1/2} C^T S_{x|z}^{-1} C S_{y|z}^{1/2}; the n_x
/// largest are returned (the remaining n_y - n_x vanish).
inline std::vector<double> rate_rate_mu(const ConditionalStats& stats) {
  const Index nx = stats.nx(), ny = stats.ny();
  if (ny < nx)
    throw Error(ErrorKind::DegenerateObservation, "n_y < n_x: C Sigma_{y|z} C^T is rank deficient");
  const Matrix root = sym_sqrt(stats.y_given_z);
  const Matrix op = root * stats.C.transpose() * spd_solve(stats.x_given_z, stats.C, "Sigma_{x|z}") * root;
  const Vector ev = eigenvalues_desc(op);
  std::vector<double> mu(ev.data(), ev.data() + nx);
  if (!(mu.back() > 1e-12))
    throw Error(ErrorKind::DegenerateObservation, "rank-deficient C: a water-equation eigenvalue vanishes",
                {{"min_mu", mu.back()}});
  return mu;
}

/// -1/2 sum_i log(min((1 - mu_i) / (1 - gamma), 1)).
inline double water_equation_lhs(std::span<const double> mu, double gamma) {
  double s = 0;
  for (double m : mu) s += std::log(std::min((1.0 - m) / (1.0 - gamma), 1.0));
  return -0.5 * s;
}

/// 1/2 log(|Sigma_{x|z}| / |Sigma_{x|yz}|), the largest achievable R_I.
inline double max_information_rate(const ConditionalStats& stats) {
  return 0.5 * (log_det_spd(stats.x_given_z, "Sigma_{x|z}") - log_det_spd(stats.x_given_yz, "Sigma_{x|yz}"));
}

inline RateRateResult rate_rate(const ConditionalStats& stats, double r_i) {
  RateRateResult r;
  r.mu = rate_rate_mu(stats);
  r.r_i = r_i;
  const double r_max = max_information_rate(stats);
  if (!(r_i >= 0.0) || !(r_i < r_max) || !(r_i < water_equation_lhs(r.mu, 0.0)))
    throw Error(ErrorKind::RegimeViolation, "R_I must lie in [0, 1/2 log(|Sigma_{x|z}|/|Sigma_{x|yz}|))",
                {{"R_I", r_i}, {"R_I_max", r_max}});

  // LHS is continuous and nonincreasing in gamma; LHS(lo) > R_I >= LHS(hi).
  double lo = 0.0, hi = 1.0 - 1e-15;
  if (water_equation_lhs(r.mu, hi) > r_i)
    throw Error(ErrorKind::NumericalFailure, "water equation does not bracket R_I");
  int it = 0;
  for (; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (water_equation_lhs(r.mu, mid) > r_i) lo = mid;
    else hi = mid;
  }
  const double res_lo = water_equation_lhs(r.mu, lo) - r_i;
  const double res_hi = water_equation_lhs(r.mu, hi) - r_i;
  const bool take_lo = std::abs(res_lo) < std::abs(res_hi);
  r.gamma = take_lo ? lo : hi;
  r.residual = take_lo ? res_lo : res_hi;
  r.iterations = it;

  for (double m : r.mu) {
    const double ratio = (1.0 - m) / (1.0 - r.gamma);
    if (ratio >= 1.0) continue;  // bracket equals mu_i, term is log 1
    r.rate += 0.5 * std::log(m / (ratio - (1.0 - m)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Numerical minimization of the closed-form rate over commuting distortion sets.

struct SeparableSolution {
  std::vector<double> x;
  int sweeps = 0;
  double max_step = 0;  // largest pair move in the final sweep
};

/// Minimizes sum_i phi_i(x_i) subject to sum_i x_i fixed and
/// lo_i < x_i <= hi_i, for convex phi_i given by their derivatives. Pairwise
/// exchange: each (i, j) move keeps the sum and solves the 1-D optimality
/// condition phi_i'(x_i + t) = phi_j'(x_j - t) by bisection. `x` must be a
/// feasible start.
inline SeparableSolution minimize_separable_convex(std::span<const std::function<double(double)>> dphi,
                                                   std::vector<double> x, std::span<const double> lo,
                                                   std::span<const double> hi, int max_sweeps = 20000) {
  const std::size_t n = x.size();
  SeparableSolution sol;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_step = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double tmin = std::max(lo[i] - x[i], x[j] - hi[j]);
        double tmax = std::min(hi[i] - x[i], x[j] - lo[j]);
        if (!(tmax > tmin)) continue;
        auto g = [&](double t) { return dphi[i](x[i] + t) - dphi[j](x[j] - t); };
        if (g(0.0) == 0.0) continue;
        double a = tmin, b = tmax;
        for (int k = 0; k < 400; ++k) {
          const double mid = 0.5 * (a + b);
          if (mid <= a || mid >= b) break;
          if (g(mid) < 0.0) a = mid;
          else b = mid;
        }
        // Stay strictly inside: the lower bounds are open.
        const double t = (a == tmin) ? b : a;
        const double xi = x[i] + t, xj = x[j] - t;
        if (!(xi > lo[i]) || !(xj > lo[j])) continue;
        max_step = std::max(max_step, std::abs(t));
        x[i] = std::min(xi, hi[i]);
        x[j] = std::min(xj, hi[j]);
      }
    }
    sol.sweeps = sweep + 1;
    sol.max_step = max_step;
    double scale = 0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (max_step <= 1e-15 * std::max(scale, 1e-300)) break;
  }
  sol.x = std::move(x);
  return sol;
}

struct ConstrainedMinimum {
  SpdMatrix D_star;
  double rate = 0;
  std::vector<double> allocation;  // eigenvalues of D* - Sigma_{x|yz} (trace set) or of D* (det set)
  int sweeps = 0;
};

/// Minimizes the closed-form rate over D with D - Sigma_{x|yz} commuting with
/// Sigma_{x|z} - Sigma_{x|yz}, Sigma_{x|yz} < D <= Sigma_{x|z}, and
/// tr(D) <= n_x D_scalar. D is parameterized as Sigma_{x|yz} + Q diag(x) Q^T
/// in the eigenbasis Q of Sigma_{x|z} - Sigma_{x|yz}.
inline ConstrainedMinimum minimize_exact_over_trace_set(const ConditionalStats& stats, double d_scalar) {
  const double budget = detail::mse_budget(stats, d_scalar);
  const Matrix s1 = symmetrize(stats.x_given_z.matrix() - stats.x_given_yz.matrix());
  const SymEigen es = sym_eigen_desc(s1);
  const std::size_t n = static_cast<std::size_t>(es.values.size());
  if (!(es.values(es.values.size() - 1) > 0.0))
    throw Error(ErrorKind::DegenerateObservation, "Sigma_{x|z} - Sigma_{x|yz} is not positive definite");

  std::vector<double> hi(es.values.data(), es.values.data() + n);
  std::vector<double> lo(n, 0.0);
  double lambda_sum = 0;
  for (double l : hi) lambda_sum += l;
  const double total = std::min(budget, lambda_sum);
  std::vector<double> x0(n);
  for (std::size_t i = 0; i < n; ++i) x0[i] = hi[i] * (total / lambda_sum);

  // rate = 1/2 sum log(lambda_i / x_i) + const
  std::vector<std::function<double(double)>> dphi(n, [](double v) { return -0.5 / v; });
  SeparableSolution sol = minimize_separable_convex(dphi, x0, lo, hi);

  const Matrix d_star =
      symmetrize(stats.x_given_yz.matrix() + es.vectors * Eigen::Map<const Vector>(sol.x.data(), static_cast<Index>(n)).asDiagonal() * es.vectors.transpose());
  ConstrainedMinimum out{SpdMatrix(d_star, "D*"), 0.0, sol.x, sol.sweeps};
  out.rate = exact_rdf(stats, d_star);
  return out;
}

/// Joint eigenbasis of Sigma_{x|z} and Sigma_{x|yz}; throws StructureViolation
/// if they do not commute.
inline Matrix commuting_eigenbasis(const ConditionalStats& stats) {
  const Matrix& a = stats.x_given_z;
  const Matrix& b = stats.x_given_yz;
  const double na = spectral_norm(a), nb = spectral_norm(b);
  const double comm = commutator_norm(a, b);
  if (comm > tol::rtol * na * nb)
    throw Error(ErrorKind::StructureViolation, "Sigma_{x|z} and Sigma_{x|yz} do not commute",
                {{"commutator_norm", comm}});
  // A generic combination separates eigenspaces shared by both matrices.
  const Matrix q = sym_eigen_desc(b / nb + 0.6180339887498949 * a / na).vectors;
  const Matrix da = q.transpose() * a * q, db = q.transpose() * b * q;
  const double off = std::max((da - Matrix(da.diagonal().asDiagonal())).cwiseAbs().maxCoeff() / na,
                              (db - Matrix(db.diagonal().asDiagonal())).cwiseAbs().maxCoeff() / nb);
  if (off > 1e-8)
    throw Error(ErrorKind::StructureViolation, "no common eigenbasis found", {{"off_diagonal", off}});
  return q;
}

/// Minimizes the closed-form rate over D commuting with Sigma_{x|yz},
/// Sigma_{x|yz} < D <= Sigma_{x|z}, and |D| <= exp(-2 R_I) |Sigma_{x|z}|.
/// Requires Sigma_{x|z} and Sigma_{x|yz} to commute (white observation noise).
inline ConstrainedMinimum minimize_exact_over_detinfo_set(const ConditionalStats& stats, double r_i) {
  const Matrix q = commuting_eigenbasis(stats);
  const double r_max = max_information_rate(stats);
  if (!(r_i >= 0.0) || !(r_i < r_max))
    throw Error(ErrorKind::RegimeViolation, "R_I must lie in [0, 1/2 log(|Sigma_{x|z}|/|Sigma_{x|yz}|))",
                {{"R_I", r_i}, {"R_I_max", r_max}});
  const Vector a = (q.transpose() * stats.x_given_z.matrix() * q).diagonal();
  const Vector b = (q.transpose() * stats.x_given_yz.matrix() * q).diagonal();
  const std::size_t n = static_cast<std::size_t>(a.size());

  // Work in s_i = log d_i, where the objective is convex and the determinant
  // constraint is the linear sum_i s_i = sum_i log a_i - 2 R_I.
  std::vector<double> lo(n), hi(n), s0(n);
  double gap = 0;
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::log(b(static_cast<Index>(i)));
    hi[i] = std::log(a(static_cast<Index>(i)));
    gap += hi[i] - lo[i];
  }
  const double theta = 2.0 * r_i / gap;
  for (std::size_t i = 0; i < n; ++i) s0[i] = hi[i] - theta * (hi[i] - lo[i]);

  std::vector<std::function<double(double)>> dphi;
  for (std::size_t i = 0; i < n; ++i) {
    const double bi = b(static_cast<Index>(i));
    dphi.emplace_back([bi](double s) { return -0.5 / (1.0 - bi * std::exp(-s)); });
  }
  SeparableSolution sol = minimize_separable_convex(dphi, s0, lo, hi);

  Vector d(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) d(static_cast<Index>(i)) = std::exp(sol.x[i]);
  const Matrix d_star = symmetrize(q * d.asDiagonal() * q.transpose());
  ConstrainedMinimum out{SpdMatrix(d_star, "D*"), 0.0, std::vector<double>(d.data(), d.data() + d.size()),
                         sol.sweeps};
  out.rate = exact_rdf(stats, d_star);
  return out;
}

}  // namespace rdx
