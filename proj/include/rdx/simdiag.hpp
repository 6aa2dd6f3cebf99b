#pragma once

#include <limits>
#include <vector>

#include "rdx/linalg.hpp"

namespace rdx {

/// Congruence that diagonalizes an SPD pair (Sigma1, Sigma2):
///
///   S Sigma1 S^T = I,             S Sigma2 S^T = diag(gamma)
///   Sigma1 = U^T diag(lambda) U,  V = diag(lambda)^{1/2} S
///   V Sigma1 V^T = diag(lambda),  V Sigma2 V^T = diag(lambda_prime)
///
/// Mode i pairs the i-th eigenvalue of Sigma1 (descending) with the
/// generalized eigenvector best aligned to its eigenvector. For commuting
/// pairs V is then orthogonal and lambda_prime holds Sigma2's eigenvalues.
struct JointDiagonalization {
  Matrix S;
  Matrix U;
  Matrix V;
  Matrix V_inv;  // Sigma1 S^T diag(lambda)^{-1/2}
  Vector lambda;
  Vector lambda_prime;
  Vector gamma;

  Index dim() const { return lambda.size(); }
};

namespace detail {

/// Minimum-cost perfect assignment (Hungarian method, O(n^3)).
/// Returns col[i], the column assigned to row i.
inline std::vector<Index> solve_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> col(n, 0);
  for (Index j = 1; j <= n; ++j) col[p[j] - 1] = j - 1;
  return col;
}

}  // namespace detail

inline JointDiagonalization whiten_diagonalize(const Matrix& sigma1, const Matrix& sigma2) {
  require_square(sigma1, "Sigma1");
  require_square(sigma2, "Sigma2");
  require_same_dim(sigma1, sigma2, "Sigma1 and Sigma2 must have the same dimension");
  const Index n = sigma1.rows();
  const SymEigen e1 = sym_eigen_desc(sigma1);
  // Positive but nearly singular Sigma1 is reported as ill-conditioned.
  if (e1.values(n - 1) > 0.0 && e1.values(0) / e1.values(n - 1) > tol::max_condition)
    throw Error(ErrorKind::IllConditioned, "Sigma1 condition number exceeds 1e12",
                {{"condition", e1.values(0) / e1.values(n - 1)}});
  if (!is_spd(sigma1))
    throw Error(ErrorKind::NotPositiveDefinite, "Sigma1 is not positive definite",
                {{"min_eigenvalue", min_eigenvalue(sigma1)}});
  if (!is_spd(sigma2))
    throw Error(ErrorKind::NotPositiveDefinite, "Sigma2 is not positive definite",
                {{"min_eigenvalue", min_eigenvalue(sigma2)}});

  // Whitening: Sigma1 = L L^T, L^{-1} Sigma2 L^{-T} = Q diag(g) Q^T.
  const auto llt = cholesky(sigma1, "Sigma1");
  const Matrix l = llt.matrixL();
  const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  const Matrix whitened = symmetrize(linv * sigma2 * linv.transpose());
  const SymEigen eg = sym_eigen_desc(whitened);
  const Matrix s0 = eg.vectors.transpose() * linv;  // rows: generalized eigenvectors

  // Pair eigenvector j of Sigma1 with generalized eigenvector k by maximizing
  // the product of |cosines|.
  Matrix cost(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      const double c = std::abs(e1.vectors.col(j).dot(s0.row(k))) / s0.row(k).norm();
      cost(j, k) = -std::log(std::max(c, 1e-300));
    }
  }
  const std::vector<Index> pick = detail::solve_assignment(cost);

  // Order modes by lambda descending, ties by gamma descending.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (e1.values(a) != e1.values(b)) return e1.values(a) > e1.values(b);
    return eg.values(pick[a]) > eg.values(pick[b]);
  });

  JointDiagonalization jd{Matrix(n, n), Matrix(n, n), Matrix(n, n), Matrix(n, n), Vector(n), Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    const Index k = pick[static_cast<std::size_t>(j)];
    jd.lambda(i) = e1.values(j);
    jd.U.row(i) = e1.vectors.col(j).transpose();
    jd.gamma(i) = eg.values(k);
    jd.S.row(i) = s0.row(k);
  }
  jd.V = jd.lambda.cwiseSqrt().asDiagonal() * jd.S;
  jd.V_inv = sigma1 * jd.S.transpose() * jd.lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  jd.lambda_prime = jd.lambda.cwiseProduct(jd.gamma);
  return jd;
}

/// Relative residuals of the six defining identities, each divided by the
/// spectral norm of the reference side.
struct DiagonalizationResiduals {
  double s_sigma1 = 0;   // S Sigma1 S^T = I
  double s_sigma2 = 0;   // S Sigma2 S^T = diag(gamma)
  double v_sigma1 = 0;   // V Sigma1 V^T = diag(lambda)
  double v_sigma2 = 0;   // V Sigma2 V^T = diag(lambda')
  double product = 0;    // lambda' = lambda * gamma
  double eigen = 0;      // U^T diag(lambda) U = Sigma1

  double max() const { return std::max({s_sigma1, s_sigma2, v_sigma1, v_sigma2, product, eigen}); }
};

inline DiagonalizationResiduals identity_residuals(const JointDiagonalization& jd, const Matrix& sigma1,
                                                   const Matrix& sigma2) {
  const Index n = jd.dim();
  auto rel = [](const Matrix& got, const Matrix& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(spectral_norm(want), 1e-300);
  };
  DiagonalizationResiduals r;
  r.s_sigma1 = rel(jd.S * sigma1 * jd.S.transpose(), Matrix::Identity(n, n));
  r.s_sigma2 = rel(jd.S * sigma2 * jd.S.transpose(), Matrix(jd.gamma.asDiagonal()));
  r.v_sigma1 = rel(jd.V * sigma1 * jd.V.transpose(), Matrix(jd.lambda.asDiagonal()));
  r.v_sigma2 = rel(jd.V * sigma2 * jd.V.transpose(), Matrix(jd.lambda_prime.asDiagonal()));
  r.product = (jd.lambda_prime - jd.lambda.cwiseProduct(jd.gamma)).cwiseAbs().maxCoeff() /
              std::max(jd.lambda_prime.cwiseAbs().maxCoeff(), 1e-300);
  r.eigen = rel(jd.U.transpose() * jd.lambda.asDiagonal() * jd.U, sigma1);
  return r;
}

/// A <= B in the Loewner order: min eig(B - A) >= -slack * ||B||.
inline bool loewner_leq(const Matrix& a, const Matrix& b, double slack = tol::pd) {
  require_square(a, "A");
  require_same_dim(a, b, "Loewner comparison");
  return min_eigenvalue(b - a) >= -slack * spectral_norm(symmetrize(b));
}

/// Sorted eigenvalues of q1 dominate those of q2 position by position, with
/// `slack` relative to the larger spectral norm. Inputs are assumed PSD.
inline bool eigen_order_dominates(const Matrix& q1, const Matrix& q2, double slack = tol::rtol) {
  require_square(q1, "Q1");
  require_same_dim(q1, q2, "eigenvalue ordering");
  const Vector a = eigenvalues_desc(q1);
  const Vector b = eigenvalues_desc(q2);
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  for (Index i = 0; i < a.size(); ++i)
    if (a(i) < b(i) - slack * scale) return false;
  return true;
}

}  // namespace rdx
