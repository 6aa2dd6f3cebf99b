#include <gtest/gtest.h>

#include "rdx/sim.hpp"
#include "support/instances.hpp"

using namespace rdx;

TEST(SampleJoint, IdentityCovariance) {
  const Matrix id = Matrix::Identity(3, 3);
  const JointModel m = JointModel::from_joint(id, 1, 1, 1);
  const SimConfig cfg{1000000, 42, 1000, 0};
  const Matrix x = sample_joint(m, cfg);
  const Matrix cov = x * x.transpose() / static_cast<double>(cfg.n_samples);
  EXPECT_LE((cov - id).cwiseAbs().maxCoeff(), 5.0 / std::sqrt(1e6));
}

TEST(SampleJoint, DeterministicAcrossThreads) {
  const JointModel m = random_instance(2, 2, 1, 3);
  const Matrix a = sample_joint(m, {5000, 9, 700, 1});
  const Matrix b = sample_joint(m, {5000, 9, 700, 4});
  const Matrix c = sample_joint(m, {5000, 9, 700, 0});
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  EXPECT_FALSE(a == sample_joint(m, {5000, 10, 700, 1}));
}

TEST(SampleJoint, PrefixStable) {
  // A longer run with the same chunk size extends a shorter one.
  const JointModel m = random_instance(1, 1, 1, 0);
  const Matrix a = sample_joint(m, {3000, 1, 1000, 1});
  const Matrix b = sample_joint(m, {5500, 1, 1000, 1});
  EXPECT_TRUE(a == b.leftCols(3000));
}

TEST(SampleJoint, RejectsTinyRuns) {
  try {
    sample_joint(random_instance(1, 1, 1, 0), {999, 1, 100, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(RunTestChannel, ZeroRate) {
  const JointModel m = random_instance(2, 2, 2, 1);
  const ConditionalStats s = derive_stats(m);
  const TestChannel ch = build_test_channel(s, 2.0 * s.x_given_z.matrix());
  const SimReport r = run_test_channel(m, ch, {1000000, 5, 1000, 0});
  EXPECT_LE((r.empirical_error_cov - s.x_given_z.matrix()).cwiseAbs().maxCoeff(),
            0.02 * spectral_norm(s.x_given_z));
  EXPECT_LE(r.orthogonality_max, r.orthogonality_tol);
}

TEST(RunTestChannel, RegimeMatchesD) {
  const JointModel m = random_instance(3, 3, 2, 2);
  const ConditionalStats s = derive_stats(m);
  const Matrix d = distortion_on_path(s, 0.4);
  const TestChannel ch = build_test_channel(s, d);
  const SimReport r = run_test_channel(m, ch, {1000000, 6, 1000, 0});
  EXPECT_LE(r.max_entry_dev, 0.02 * spectral_norm(d));
  EXPECT_LE(r.max_entry_dev, r.clt_entry_tol);
  EXPECT_GE(r.loewner_margin, -5.0 * spectral_norm(d) / 1000.0);
  EXPECT_LE(r.orthogonality_max, r.orthogonality_tol);
}

TEST(RunTestChannel, ThreadIndependent) {
  const JointModel m = random_instance(2, 3, 2, 7);
  const ConditionalStats s = derive_stats(m);
  const TestChannel ch = build_test_channel(s, distortion_on_path(s, 0.5));
  const SimReport a = run_test_channel(m, ch, {20000, 3, 1000, 1});
  const SimReport b = run_test_channel(m, ch, {20000, 3, 1000, 3});
  EXPECT_TRUE(a.empirical_error_cov == b.empirical_error_cov);
  EXPECT_EQ(a.orthogonality_max, b.orthogonality_max);
}

TEST(LoewnerSlack, GeneralDHasSlack) {
  std::mt19937_64 rng(1);
  const JointModel m = random_instance(3, 3, 2, 11);
  const ConditionalStats s = derive_stats(m);
  const Matrix d = fixture::general_distortion(s, rng, true, 0.2, 2.5);
  const TestChannel ch = build_test_channel(s, d);
  const SimReport r = run_test_channel(m, ch, {100000, 1, 1000, 0});
  const double analytic = min_eigenvalue(d - achieved_distortion(ch, s).matrix());
  EXPECT_GE(r.loewner_margin, analytic - 5.0 * spectral_norm(d) / std::sqrt(1e5));
  // Inflating D raises the slack by at least min eig(D).
  EXPECT_GE(loewner_slack(r, 2.0 * d), min_eigenvalue(d) - 5.0 * spectral_norm(d) / std::sqrt(1e5));
}

TEST(RunTestChannel, CltScaling) {
  const JointModel m = random_instance(2, 2, 1, 4);
  const ConditionalStats s = derive_stats(m);
  const TestChannel ch = build_test_channel(s, distortion_on_path(s, 0.5));
  double small = 0, large = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small += run_test_channel(m, ch, {20000, seed, 1000, 0}).max_entry_dev;
    large += run_test_channel(m, ch, {40000, seed + 1000, 1000, 0}).max_entry_dev;
  }
  const double ratio = large / small;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 0.95);
}
