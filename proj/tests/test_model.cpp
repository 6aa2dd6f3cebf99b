#include <gtest/gtest.h>

#include "rdx/model.hpp"
#include "rdx/simdiag.hpp"
#include "support/oracles.hpp"

using namespace rdx;

namespace {

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(spectral_norm(b), 1e-300);
}

JointModel scalar_model() {
  return noisy_observation_instance(SpdMatrix(Matrix::Constant(1, 1, 1.0)), Matrix::Constant(1, 1, 1.0),
                                    SpdMatrix(Matrix::Constant(1, 1, 0.5)), Matrix::Constant(1, 1, 1.0),
                                    SpdMatrix(Matrix::Constant(1, 1, 1.0)));
}

}  // namespace

TEST(SymMatrix, RejectsAsymmetric) {
  Matrix m(2, 2);
  m << 1, 0.5, 0.4, 1;
  EXPECT_THROW(SymMatrix{m}, Error);
  try {
    SymMatrix s(m);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(SpdMatrix, RejectsIndefinite) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  try {
    SpdMatrix s(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}

TEST(SchurConditional, IdentityJoint) {
  const std::vector<Index> t{0}, g{2};
  const SpdMatrix s = schur_conditional(Matrix::Identity(3, 3), t, g);
  EXPECT_DOUBLE_EQ(s.matrix()(0, 0), 1.0);
}

TEST(SchurConditional, Bivariate) {
  Matrix j(2, 2);
  j << 1, 0.5, 0.5, 1;
  const std::vector<Index> t{0}, g{1};
  EXPECT_NEAR(schur_conditional(j, t, g).matrix()(0, 0), 0.75, 1e-15);
}

TEST(SchurConditional, MatchesRegressionResidual) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix joint = oracle::random_spd(5, rng);
    const std::vector<Index> t{0, 3}, g{1, 2, 4};
    const Matrix want = oracle::regression_residual_cov(joint, {0, 3}, {1, 2, 4});
    EXPECT_LE(rel_err(schur_conditional(joint, t, g), want), 1e-10);
  }
}

TEST(SchurConditional, BadIndexSets) {
  const Matrix j = Matrix::Identity(3, 3);
  const std::vector<Index> t{0}, overlap{0}, out{5};
  for (const auto& g : {overlap, out}) {
    try {
      schur_conditional(j, t, g);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::IndexError);
    }
  }
}

TEST(SchurConditional, SingularGivenBlock) {
  Matrix j = Matrix::Identity(3, 3);
  j(1, 2) = j(2, 1) = 1.0;
  const std::vector<Index> t{0}, g{1, 2};
  try {
    schur_conditional(j, t, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularBlock);
  }
}

TEST(DeriveStats, Independence) {
  const JointModel m(SpdMatrix(Matrix::Identity(2, 2) * 2.0), SpdMatrix(Matrix::Identity(3, 3)),
                     SpdMatrix(Matrix::Identity(1, 1)), Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(3, 1));
  const ConditionalStats s = derive_stats(m);
  EXPECT_EQ(s.C.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.G.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(rel_err(s.x_given_yz, m.sigma_x()), 1e-15);
}

TEST(DeriveStats, ScalarPrecisionAddition) {
  const ConditionalStats s = derive_stats(scalar_model());
  EXPECT_NEAR(s.x_given_z.matrix()(0, 0), oracle::posterior_variance(1.0, {1.0}), 1e-14);
  EXPECT_NEAR(s.x_given_yz.matrix()(0, 0), oracle::posterior_variance(1.0, {0.5, 1.0}), 1e-14);
  EXPECT_NEAR(s.x_given_z.matrix()(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(s.x_given_yz.matrix()(0, 0), 0.25, 1e-14);
}

TEST(DeriveStats, ExplainedVarianceIdentity) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Index nx = 1 + seed % 4, ny = 1 + (seed / 4) % 4, nz = 1 + (seed / 16) % 3;
    const ConditionalStats s = derive_stats(random_instance(nx, ny, nz, seed));
    const Matrix lhs = s.C * s.y_given_z.matrix() * s.C.transpose() + s.x_given_yz.matrix();
    ASSERT_LE(rel_err(lhs, s.x_given_z), 1e-10) << "seed " << seed;
  }
}

TEST(DeriveStats, LoewnerChain) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const JointModel m = random_instance(1 + seed % 4, 1 + seed % 3, 1 + seed % 2, seed);
    const ConditionalStats s = derive_stats(m);
    EXPECT_TRUE(loewner_leq(s.x_given_yz, s.x_given_z));
    EXPECT_TRUE(loewner_leq(s.x_given_z, m.sigma_x()));
  }
}

TEST(DeriveStats, RegressionCoefficients) {
  const JointModel m = random_instance(2, 3, 2, 4);
  const ConditionalStats s = derive_stats(m);
  // [C G] solves the normal equations of x on (y, z).
  const Matrix joint = m.joint();
  const Matrix syz_block = joint.bottomRightCorner(5, 5);
  const Matrix sx_yz = joint.topRightCorner(2, 5);
  Matrix cg(2, 5);
  cg << s.C, s.G;
  EXPECT_LE((cg * syz_block - sx_yz).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((s.gamma_yz * m.sigma_z().matrix() - m.sigma_yz()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DeriveStats, InvariantUnderOrthogonalChangeOfZ) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const JointModel m = random_instance(2, 2, 3, seed);
    const Matrix q = oracle::random_orthogonal(3, rng);
    const JointModel mq(m.sigma_x(), m.sigma_y(), SpdMatrix(symmetrize(q * m.sigma_z().matrix() * q.transpose())),
                        m.sigma_xy(), m.sigma_xz() * q.transpose(), m.sigma_yz() * q.transpose());
    const ConditionalStats a = derive_stats(m), b = derive_stats(mq);
    EXPECT_LE(rel_err(b.x_given_z, a.x_given_z), 1e-9);
    EXPECT_LE(rel_err(b.x_given_yz, a.x_given_yz), 1e-9);
  }
}

TEST(RandomInstance, Deterministic) {
  EXPECT_TRUE(random_instance(2, 3, 2, 0) == random_instance(2, 3, 2, 0));
  EXPECT_FALSE(random_instance(2, 3, 2, 0) == random_instance(2, 3, 2, 1));
  const JointModel m = random_instance(1, 1, 1, 7);
  EXPECT_TRUE(is_spd(m.joint()));
  EXPECT_TRUE(is_spd(random_instance(2, 3, 2, 0).joint()));
}

TEST(NoisyObservation, BlockAlgebra) {
  const Matrix id = Matrix::Identity(2, 2);
  const JointModel m = noisy_observation_instance(SpdMatrix(id), id, SpdMatrix(id), id, SpdMatrix(id));
  EXPECT_EQ(m.sigma_y().matrix(), 2.0 * id);
  EXPECT_EQ(m.sigma_yz(), id);
  EXPECT_EQ(m.sigma_xy(), id);
}

TEST(NoisyObservation, WhiteNoiseCommutes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ConditionalStats s = derive_stats(white_noise_instance(3, 0.5, 1.0, seed));
    const Matrix& a = s.x_given_z;
    const Matrix& b = s.x_given_yz;
    // Commutator computed directly.
    const Matrix c = a * b - b * a;
    EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-9 * spectral_norm(a) * spectral_norm(b));
  }
}

TEST(NoisyObservation, ScalarMatchesDirectModel) {
  const JointModel m = scalar_model();
  Matrix joint(3, 3);
  joint << 1, 1, 1, 1, 1.5, 1, 1, 1, 2;
  EXPECT_LE((m.joint() - joint).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NoisyObservation, DimensionMismatch) {
  try {
    noisy_observation_instance(SpdMatrix(Matrix::Identity(2, 2)), Matrix::Identity(3, 3),
                               SpdMatrix(Matrix::Identity(3, 3)), Matrix::Identity(2, 2),
                               SpdMatrix(Matrix::Identity(2, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(JointModel, RejectsNonPdJoint) {
  // Individually PD blocks with too much cross-correlation.
  Matrix j(3, 3);
  j << 1, 0.99, 0.99, 0.99, 1, 0, 0.99, 0, 1;
  EXPECT_THROW(JointModel::from_joint(j, 1, 1, 1), Error);
}
