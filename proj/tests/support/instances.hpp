#pragma once

#include <random>

#include "rdx/model.hpp"
#include "support/oracles.hpp"

namespace fixture {

/// Model with Sigma_{x|z} = 0.5, Sigma_{x|yz} = 0.25.
inline rdx::JointModel scalar_model() {
  const rdx::Matrix one = rdx::Matrix::Constant(1, 1, 1.0);
  return rdx::noisy_observation_instance(rdx::SpdMatrix(one), one, rdx::SpdMatrix(0.5 * one), one,
                                         rdx::SpdMatrix(one));
}

/// Random model with dimensions <= max_dim and n_y >= n_x whose
/// Sigma_{x|z} - Sigma_{x|yz} has condition number <= 1e6; seeds producing
/// nearly degenerate observations are skipped deterministically.
inline rdx::JointModel valid_instance(std::uint64_t k, rdx::Index max_dim, std::uint64_t seed) {
  const rdx::Index nx = 1 + static_cast<rdx::Index>(k % max_dim);
  const rdx::Index ny = nx + static_cast<rdx::Index>((k / max_dim) % (max_dim - nx + 1));
  const rdx::Index nz = 1 + static_cast<rdx::Index>((k / (max_dim * max_dim)) % max_dim);
  for (std::uint64_t attempt = 0;; ++attempt) {
    rdx::JointModel m = rdx::random_instance(nx, ny, nz, seed + 1000003 * attempt);
    const rdx::ConditionalStats s = rdx::derive_stats(m);
    const rdx::Vector ev = rdx::eigenvalues_desc(s.x_given_z.matrix() - s.x_given_yz.matrix());
    if (ev(ev.size() - 1) > 1e-6 * ev(0)) return m;
  }
}

/// D = Sigma_{x|yz} + Sigma1^{1/2} Q diag(g) Q^T Sigma1^{1/2} with g drawn from
/// [g_lo, g_hi]; at least one g_i > 1 when `outside` so D is not below
/// Sigma_{x|z}.
inline rdx::Matrix general_distortion(const rdx::ConditionalStats& s, std::mt19937_64& rng, bool outside,
                                      double g_lo = 0.05, double g_hi = 3.0) {
  const int n = static_cast<int>(s.nx());
  const rdx::Matrix s1 = rdx::symmetrize(s.x_given_z.matrix() - s.x_given_yz.matrix());
  const rdx::Matrix root = rdx::sym_sqrt(s1);
  const rdx::Matrix q = oracle::random_orthogonal(n, rng);
  std::uniform_real_distribution<double> u(g_lo, g_hi);
  rdx::Vector g(n);
  for (int i = 0; i < n; ++i) g(i) = u(rng);
  if (outside && g.maxCoeff() <= 1.0) g(0) = 1.5 + u(rng);
  return rdx::symmetrize(s.x_given_yz.matrix() + root * q * g.asDiagonal() * q.transpose() * root);
}

}  // namespace fixture
