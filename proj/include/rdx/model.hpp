#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rdx/linalg.hpp"

namespace rdx {

/// Joint covariance of source x, encoder observation y and decoder side
/// information z, kept in blocks.
class JointModel {
 public:
  JointModel(SpdMatrix sigma_x, SpdMatrix sigma_y, SpdMatrix sigma_z, Matrix sigma_xy, Matrix sigma_xz,
             Matrix sigma_yz)
      : sx_(std::move(sigma_x)),
        sy_(std::move(sigma_y)),
        sz_(std::move(sigma_z)),
        sxy_(std::move(sigma_xy)),
        sxz_(std::move(sigma_xz)),
        syz_(std::move(sigma_yz)) {
    check_block(sxy_, nx(), ny(), "Sigma_xy");
    check_block(sxz_, nx(), nz(), "Sigma_xz");
    check_block(syz_, ny(), nz(), "Sigma_yz");
    SpdMatrix(joint(), "joint covariance of (x, y, z)");
  }

  /// Splits an assembled (n_x + n_y + n_z) square covariance into blocks.
  static JointModel from_joint(const Matrix& joint, Index nx, Index ny, Index nz) {
    if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorKind::InvalidArgument, "dimensions must be >= 1");
    if (joint.rows() != nx + ny + nz || joint.cols() != nx + ny + nz)
      throw Error(ErrorKind::DimensionMismatch, "joint covariance does not match n_x + n_y + n_z");
    const Matrix s = symmetrize(joint);
    return JointModel(SpdMatrix(s.block(0, 0, nx, nx), "Sigma_x"), SpdMatrix(s.block(nx, nx, ny, ny), "Sigma_y"),
                      SpdMatrix(s.block(nx + ny, nx + ny, nz, nz), "Sigma_z"), s.block(0, nx, nx, ny),
                      s.block(0, nx + ny, nx, nz), s.block(nx, nx + ny, ny, nz));
  }

  Index nx() const { return sx_.dim(); }
  Index ny() const { return sy_.dim(); }
  Index nz() const { return sz_.dim(); }
  Index dim() const { return nx() + ny() + nz(); }

  const SpdMatrix& sigma_x() const { return sx_; }
  const SpdMatrix& sigma_y() const { return sy_; }
  const SpdMatrix& sigma_z() const { return sz_; }
  const Matrix& sigma_xy() const { return sxy_; }
  const Matrix& sigma_xz() const { return sxz_; }
  const Matrix& sigma_yz() const { return syz_; }

  /// Order of blocks: x, y, z.
  Matrix joint() const {
    const Index a = nx(), b = ny(), c = nz();
    Matrix j(a + b + c, a + b + c);
    j.block(0, 0, a, a) = sx_.matrix();
    j.block(a, a, b, b) = sy_.matrix();
    j.block(a + b, a + b, c, c) = sz_.matrix();
    j.block(0, a, a, b) = sxy_;
    j.block(a, 0, b, a) = sxy_.transpose();
    j.block(0, a + b, a, c) = sxz_;
    j.block(a + b, 0, c, a) = sxz_.transpose();
    j.block(a, a + b, b, c) = syz_;
    j.block(a + b, a, c, b) = syz_.transpose();
    return j;
  }

  std::vector<Index> x_indices() const { return range(0, nx()); }
  std::vector<Index> y_indices() const { return range(nx(), ny()); }
  std::vector<Index> z_indices() const { return range(nx() + ny(), nz()); }

  bool operator==(const JointModel& o) const {
    return sx_.matrix() == o.sx_.matrix() && sy_.matrix() == o.sy_.matrix() && sz_.matrix() == o.sz_.matrix() &&
           sxy_ == o.sxy_ && sxz_ == o.sxz_ && syz_ == o.syz_;
  }

 private:
  static void check_block(const Matrix& m, Index r, Index c, const std::string& name) {
    if (m.rows() != r || m.cols() != c)
      throw Error(ErrorKind::DimensionMismatch, name + " must be " + std::to_string(r) + "x" + std::to_string(c));
  }
  static std::vector<Index> range(Index start, Index count) {
    std::vector<Index> v(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = start + i;
    return v;
  }

  SpdMatrix sx_, sy_, sz_;
  Matrix sxy_, sxz_, syz_;
};

/// Conditional covariances and linear-estimation coefficients:
///   x = C y + G z + n2,  cov(n2) = Sigma_{x|yz}
///   y = Gamma z + n3,    cov(n3) = Sigma_{y|z}
struct ConditionalStats {
  SpdMatrix x_given_z;
  SpdMatrix x_given_yz;
  SpdMatrix y_given_z;
  Matrix C;
  Matrix G;
  Matrix gamma_yz;

  Index nx() const { return x_given_z.dim(); }
  Index ny() const { return y_given_z.dim(); }
};

namespace detail {
inline Matrix gather(const Matrix& m, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

inline void check_index_set(std::span<const Index> idx, Index n, const char* name) {
  std::set<Index> seen;
  for (Index i : idx) {
    if (i < 0 || i >= n)
      throw Error(ErrorKind::IndexError, std::string(name) + " index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second)
      throw Error(ErrorKind::IndexError, std::string(name) + " index " + std::to_string(i) + " repeated");
  }
}

inline void require_pd_block(const Matrix& m, const std::string& what) {
  if (m.size() == 0) return;
  const Vector ev = eigenvalues_desc(m);
  if (!(ev(m.rows() - 1) > tol::pd * ev(0)))
    throw Error(ErrorKind::SingularBlock, what + " is not positive definite",
                {{"min_eigenvalue", ev(m.rows() - 1)}, {"max_eigenvalue", ev(0)}});
}
}  // namespace detail

/// Covariance of joint[target] given joint[given]:
///   S_tt - S_tg S_gg^{-1} S_gt   (Cholesky solve, no explicit inverse).
inline SpdMatrix schur_conditional(const Matrix& joint, std::span<const Index> target,
                                   std::span<const Index> given) {
  require_square(joint, "joint");
  const Index n = joint.rows();
  if (target.empty()) throw Error(ErrorKind::IndexError, "target index set is empty");
  detail::check_index_set(target, n, "target");
  detail::check_index_set(given, n, "given");
  for (Index t : target)
    for (Index g : given)
      if (t == g) throw Error(ErrorKind::IndexError, "target and given sets overlap at " + std::to_string(t));

  const Matrix s_tt = detail::gather(joint, target, target);
  if (given.empty()) return SpdMatrix(s_tt, "conditional covariance");
  const Matrix s_gg = detail::gather(joint, given, given);
  const Matrix s_tg = detail::gather(joint, target, given);
  detail::require_pd_block(s_gg, "conditioning block");
  const Matrix cond = s_tt - s_tg * spd_solve(s_gg, s_tg.transpose());
  return SpdMatrix(symmetrize(cond), "conditional covariance");
}

inline ConditionalStats derive_stats(const JointModel& model) {
  const Matrix joint = model.joint();
  const auto xi = model.x_indices();
  const auto yi = model.y_indices();
  const auto zi = model.z_indices();
  std::vector<Index> yz = yi;
  yz.insert(yz.end(), zi.begin(), zi.end());

  SpdMatrix x_given_z = schur_conditional(joint, xi, zi);
  SpdMatrix x_given_yz = schur_conditional(joint, xi, yz);
  SpdMatrix y_given_z = schur_conditional(joint, yi, zi);

  // [C G] = Sigma_{x,(y,z)} Sigma_{(y,z)}^{-1}
  const Matrix s_yz_yz = detail::gather(joint, yz, yz);
  const Matrix s_x_yz = detail::gather(joint, xi, yz);
  const Matrix coef = spd_solve(s_yz_yz, s_x_yz.transpose(), "Sigma_(y,z)").transpose();
  const Matrix gamma = spd_solve(model.sigma_z(), model.sigma_yz().transpose(), "Sigma_z").transpose();

  return ConditionalStats{std::move(x_given_z),        std::move(x_given_yz),
                          std::move(y_given_z),        coef.leftCols(model.ny()),
                          coef.rightCols(model.nz()),  gamma};
}

/// Joint covariance A A^T + 0.1 I with A standard normal, deterministic in seed.
inline JointModel random_instance(Index nx, Index ny, Index nz, std::uint64_t seed) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error(ErrorKind::InvalidArgument, "dimensions must be >= 1");
  constexpr double eps = 0.1;
  const Index n = nx + ny + nz;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  const Matrix joint = a * a.transpose() + eps * Matrix::Identity(n, n);
  return JointModel::from_joint(joint, nx, ny, nz);
}

/// y = H x + n1, z = K x + n2 with n1, n2, x mutually independent.
inline JointModel noisy_observation_instance(const SpdMatrix& sigma_x, const Matrix& h, const SpdMatrix& sigma_n1,
                                             const Matrix& k, const SpdMatrix& sigma_n2) {
  const Index nx = sigma_x.dim();
  if (h.cols() != nx || k.cols() != nx)
    throw Error(ErrorKind::DimensionMismatch, "H and K must have n_x columns");
  if (h.rows() != sigma_n1.dim()) throw Error(ErrorKind::DimensionMismatch, "H rows must match Sigma_n1");
  if (k.rows() != sigma_n2.dim()) throw Error(ErrorKind::DimensionMismatch, "K rows must match Sigma_n2");
  const Matrix& sx = sigma_x;
  return JointModel(sigma_x, SpdMatrix(symmetrize(h * sx * h.transpose() + sigma_n1.matrix()), "Sigma_y"),
                    SpdMatrix(symmetrize(k * sx * k.transpose() + sigma_n2.matrix()), "Sigma_z"),
                    sx * h.transpose(), sx * k.transpose(), h * sx * k.transpose());
}

/// Random SPD source observed twice through identity maps with white noise
/// of variances noise_y and noise_z.
inline JointModel white_noise_instance(Index n, double noise_y, double noise_z, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  if (!(noise_y > 0.0) || !(noise_z > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise variances must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  const Matrix id = Matrix::Identity(n, n);
  return noisy_observation_instance(SpdMatrix(a * a.transpose() + 0.1 * id, "Sigma_x"), id,
                                    SpdMatrix(noise_y * id, "Sigma_n1"), id, SpdMatrix(noise_z * id, "Sigma_n2"));
}

}  // namespace rdx
