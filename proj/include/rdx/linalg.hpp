#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rdx/errors.hpp"

namespace rdx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace tol {
/// Symmetry and identity checks, relative to the spectral norm.
inline constexpr double rtol = 1e-9;
/// Definiteness: smallest eigenvalue must exceed pd * largest.
inline constexpr double pd = 1e-10;
/// Absolute tolerance for rate comparisons, in nats.
inline constexpr double rate_atol = 1e-9;
inline constexpr double max_condition = 1e12;
}  // namespace tol

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols()) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym == 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      return es.eigenvalues().cwiseAbs().maxCoeff();
    }
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double asymmetry(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double rtol = tol::rtol) {
  if (m.rows() != m.cols()) return false;
  return asymmetry(m) <= rtol * std::max(spectral_norm(symmetrize(m)), 1e-300);
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// descending. Ties keep the solver's relative order reversed stably.
struct SymEigen {
  Vector values;
  Matrix vectors;  // columns
};

inline SymEigen sym_eigen_desc(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "symmetric eigensolver failed");
  const Index n = m.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline Vector eigenvalues_desc(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  Vector v = es.eigenvalues().reverse();
  return v;
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline void require_square(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::DimensionMismatch,
                name + " must be square, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::DimensionMismatch, what + ": " + std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                                  "x" + std::to_string(b.cols()));
}

/// Symmetric matrix, validated at construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m, const std::string& name = "matrix") {
    require_square(m, name);
    if (!is_symmetric(m))
      throw Error(ErrorKind::InvalidArgument, name + " is not symmetric", {{"asymmetry", asymmetry(m)}});
    m_ = symmetrize(m);
  }

  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }

 protected:
  Matrix m_;
};

/// Symmetric positive-definite matrix: smallest eigenvalue > tol::pd * largest.
class SpdMatrix : public SymMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Matrix m, const std::string& name = "matrix") : SymMatrix(std::move(m), name) {
    if (dim() == 0) throw Error(ErrorKind::InvalidArgument, name + " is empty");
    const Vector ev = eigenvalues_desc(m_);
    if (!(ev(dim() - 1) > tol::pd * ev(0)))
      throw Error(ErrorKind::NotPositiveDefinite, name + " is not positive definite",
                  {{"min_eigenvalue", ev(dim() - 1)}, {"max_eigenvalue", ev(0)}});
  }
};

inline bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0 || !is_symmetric(m)) return false;
  const Vector ev = eigenvalues_desc(m);
  return ev(m.rows() - 1) > tol::pd * ev(0);
}

inline Eigen::LLT<Matrix> cholesky(const Matrix& m, const std::string& name = "matrix") {
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "Cholesky failed for " + name);
  return llt;
}

/// A^{-1} B for SPD A, via Cholesky.
inline Matrix spd_solve(const Matrix& a, const Matrix& b, const std::string& name = "matrix") {
  return cholesky(a, name).solve(b);
}

inline double log_det_spd(const Matrix& m, const std::string& name = "matrix") {
  if (m.size() == 0) return 0.0;
  const auto llt = cholesky(m, name);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline Matrix sym_sqrt(const Matrix& m) {
  const SymEigen es = sym_eigen_desc(m);
  return es.vectors * es.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.vectors.transpose();
}

inline double commutator_norm(const Matrix& a, const Matrix& b) {
  return spectral_norm(a * b - b * a);
}

/// log((x)^+) where (x)^+ = max(x, 1).
inline double log_plus(double ratio) { return std::log(std::max(ratio, 1.0)); }

}  // namespace rdx
