#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "rdx/rdf.hpp"

namespace rdx {

/// Samples are generated in chunks of `chunk` draws; chunk c uses an engine
/// seeded from (seed, c) only, so results do not depend on `threads`.
struct SimConfig {
  std::size_t n_samples = 100000;
  std::uint64_t seed = 1;
  std::size_t chunk = 1000;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SimReport {
  Matrix empirical_error_cov;
  Matrix analytic_error_cov;
  double max_entry_dev = 0;
  double loewner_margin = 0;     // min eig(D - empirical), D = channel target
  std::size_t n_samples = 0;
  double clt_entry_tol = 0;      // 5 sqrt(2 max_i a_ii^2 / n)
  double orthogonality_max = 0;  // max normalized |cov(x - xhat, (u, z))|
  double orthogonality_tol = 0;  // 5 / sqrt(n)
};

namespace detail {

inline void validate(const SimConfig& cfg) {
  if (cfg.n_samples < 1000) throw Error(ErrorKind::InvalidArgument, "n_samples must be >= 1000");
  if (cfg.chunk < 1) throw Error(ErrorKind::InvalidArgument, "chunk must be >= 1");
}

inline std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t chunk_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk_index), static_cast<std::uint32_t>(chunk_index >> 32)};
  return std::mt19937_64(seq);
}

inline Matrix standard_normals(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

inline std::size_t chunk_count(const SimConfig& cfg) { return (cfg.n_samples + cfg.chunk - 1) / cfg.chunk; }

inline Index chunk_size(const SimConfig& cfg, std::size_t c) {
  return static_cast<Index>(std::min(cfg.chunk, cfg.n_samples - c * cfg.chunk));
}

/// Runs fn(c) for every chunk index on a small pool of threads.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, unsigned threads, Fn&& fn) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < n_chunks; c = next++) fn(c);
    });
}

}  // namespace detail

/// Draws of (x, y, z) stacked as columns, dimension n_x + n_y + n_z.
inline Matrix sample_joint(const JointModel& model, const SimConfig& cfg) {
  detail::validate(cfg);
  const Matrix l = cholesky(model.joint(), "joint covariance").matrixL();
  const Index dim = model.dim();
  Matrix out(dim, static_cast<Index>(cfg.n_samples));
  detail::for_each_chunk(detail::chunk_count(cfg), cfg.threads, [&](std::size_t c) {
    auto rng = detail::chunk_engine(cfg.seed, c);
    const Index m = detail::chunk_size(cfg, c);
    out.middleCols(static_cast<Index>(c * cfg.chunk), m) = l * detail::standard_normals(rng, dim, m);
  });
  return out;
}

inline double loewner_slack(const SimReport& report, const Matrix& d) {
  require_same_dim(report.empirical_error_cov, d, "distortion vs empirical error covariance");
  return min_eigenvalue(d - report.empirical_error_cov);
}

/// Monte Carlo run of u = F y + nu and xhat = E[x | u, z] with exact
/// conditioning coefficients. Joint draws of a chunk come first from its
/// engine, coding noise after, so x, y, z match sample_joint.
inline SimReport run_test_channel(const JointModel& model, const TestChannel& ch, const SimConfig& cfg) {
  detail::validate(cfg);
  const ConditionalStats stats = derive_stats(model);
  if (ch.encoder.cols() != model.ny()) throw Error(ErrorKind::DimensionMismatch, "encoder does not match n_y");
  const Index nx = model.nx(), ny = model.ny(), nz = model.nz(), na = ch.n_active();
  const Matrix& f = ch.encoder;

  // Covariances of w = (u, z) and of x with w.
  Matrix sww(na + nz, na + nz), sxw(nx, na + nz);
  sww.topLeftCorner(na, na) = f * model.sigma_y().matrix() * f.transpose() + ch.noise_cov;
  sww.topRightCorner(na, nz) = f * model.sigma_yz();
  sww.bottomLeftCorner(nz, na) = sww.topRightCorner(na, nz).transpose();
  sww.bottomRightCorner(nz, nz) = model.sigma_z().matrix();
  sxw.leftCols(na) = model.sigma_xy() * f.transpose();
  sxw.rightCols(nz) = model.sigma_xz();
  const Matrix coef = spd_solve(sww, sxw.transpose(), "Sigma_(u,z)").transpose();

  const Matrix l = cholesky(model.joint(), "joint covariance").matrixL();
  Vector noise_sd(na);
  for (Index i = 0; i < na; ++i) noise_sd(i) = std::sqrt(ch.noise_cov(i, i));

  const std::size_t n_chunks = detail::chunk_count(cfg);
  std::vector<Matrix> acc_ee(n_chunks), acc_ew(n_chunks);
  detail::for_each_chunk(n_chunks, cfg.threads, [&](std::size_t c) {
    auto rng = detail::chunk_engine(cfg.seed, c);
    const Index m = detail::chunk_size(cfg, c);
    const Matrix draws = l * detail::standard_normals(rng, model.dim(), m);
    const Matrix nu = noise_sd.asDiagonal() * detail::standard_normals(rng, na, m);
    Matrix w(na + nz, m);
    w.topRows(na) = f * draws.middleRows(nx, ny) + nu;
    w.bottomRows(nz) = draws.bottomRows(nz);
    const Matrix e = draws.topRows(nx) - coef * w;
    acc_ee[c] = e * e.transpose();
    acc_ew[c] = e * w.transpose();
  });

  Matrix see = Matrix::Zero(nx, nx), sew = Matrix::Zero(nx, na + nz);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    see += acc_ee[c];
    sew += acc_ew[c];
  }
  const double n = static_cast<double>(cfg.n_samples);

  SimReport r;
  r.n_samples = cfg.n_samples;
  r.empirical_error_cov = symmetrize(see / n);
  r.analytic_error_cov = achieved_distortion(ch, stats).matrix();
  r.max_entry_dev = (r.empirical_error_cov - r.analytic_error_cov).cwiseAbs().maxCoeff();
  const double max_diag = r.analytic_error_cov.diagonal().maxCoeff();
  r.clt_entry_tol = 5.0 * std::sqrt(2.0 * max_diag * max_diag / n);
  r.orthogonality_tol = 5.0 / std::sqrt(n);
  const Matrix cross = sew / n;
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < na + nz; ++j)
      r.orthogonality_max =
          std::max(r.orthogonality_max,
                   std::abs(cross(i, j)) / std::sqrt(r.analytic_error_cov(i, i) * sww(j, j)));
  if (ch.target.size() != 0) r.loewner_margin = loewner_slack(r, ch.target);
  return r;
}

}  // namespace rdx
