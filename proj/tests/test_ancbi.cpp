#include "satcert/ancbi.hpp"

#include <gtest/gtest.h>

#include <random>

namespace satcert {
namespace {

Mat jordan_zero(int size) {
  Mat j = Mat::Zero(size, size);
  for (int i = 0; i + 1 < size; ++i) j(i, i + 1) = 1.0;
  return j;
}

Mat rotation_block(double w) {
  Mat r(2, 2);
  r << 0, w, -w, 0;
  return r;
}

Mat sontag_a0() {
  Mat a(4, 4);
  a << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, -1, 0, -2, 0;
  return a;
}

Mat cart_pendulum_a0() {
  Mat a(4, 4);
  a << 0, 0, 1, 0, 0, 0, 0, 1, -330.46, -2.44, 0, 0, -812.61, -30.1, 0, 0;
  return a;
}

Mat blkdiag(const std::vector<Mat>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Mat out = Mat::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

TEST(SpectralStructure, TripleIntegratorChain) {
  const SpectralStructure ss = spectral_structure(jordan_zero(3));
  EXPECT_TRUE(ss.origin_block_gt2);
  EXPECT_FALSE(ss.has_open_rhp);
  EXPECT_FALSE(ss.imaginary_nonsimple);
}

TEST(SpectralStructure, IntegralOscillator) {
  Mat a(3, 3);
  a << 0, 1, 0, -1, 0, 1, 0, 0, 0;
  const SpectralStructure ss = spectral_structure(a);
  EXPECT_FALSE(ss.has_open_rhp);
  EXPECT_FALSE(ss.origin_block_gt2);
  EXPECT_FALSE(ss.imaginary_nonsimple);
  ASSERT_EQ(ss.clusters.size(), 2u);
  const SpectralCluster* zero = ss.zero_cluster();
  ASSERT_NE(zero, nullptr);
  EXPECT_EQ(zero->multiplicity, 1);
  EXPECT_EQ(zero->max_block, 1);
  for (const auto& c : ss.clusters) {
    if (c.im > 0.0) {
      EXPECT_NEAR(c.im, 1.0, 1e-7);
      EXPECT_EQ(c.multiplicity, 2);
      EXPECT_EQ(c.max_block, 1);
    }
  }
}

TEST(SpectralStructure, OpenRightHalfPlane) {
  Mat a(2, 2);
  a << 1, 0, 0, -1;
  EXPECT_TRUE(spectral_structure(a).has_open_rhp);
}

TEST(SpectralStructure, AmbiguousClustersRejected) {
  Mat a = Mat::Zero(2, 2);
  a(1, 1) = 5e-7;
  EXPECT_THROW(spectral_structure(a, 1e-7), std::runtime_error);
}

TEST(CheckProp1, SontagFourthOrderIneligible) {
  EXPECT_FALSE(check_prop1(sontag_a0()));
  EXPECT_TRUE(spectral_structure(sontag_a0()).imaginary_nonsimple);
}

TEST(CheckProp1, CartPendulumEligible) {
  EXPECT_TRUE(check_prop1(cart_pendulum_a0()));
}

TEST(CheckProp1, HurwitzAlwaysEligible) {
  Mat a(3, 3);
  a << -1, 2, 0, 0, -2, 1, 0, 0, -0.5;
  EXPECT_TRUE(check_prop1(a));
}

TEST(SynthesizeP0, ScalarZero) {
  const Condition4Certificate c = synthesize_P0(Mat::Zero(1, 1));
  EXPECT_DOUBLE_EQ(c.P0.mat()(0, 0), 0.0);
  EXPECT_TRUE(c.kernel_ok);
}

TEST(SynthesizeP0, DoubleZeroJordanBlock) {
  const Condition4Certificate c = synthesize_P0(jordan_zero(2));
  Mat expect(2, 2);
  expect << 0, 0, 0, 1;
  EXPECT_LE((c.P0.mat() - expect).norm(), 1e-9);
  EXPECT_LE(c.S0.mat().norm(), 1e-9);
  EXPECT_TRUE(c.kernel_ok);
}

TEST(SynthesizeP0, OscillatorBlock) {
  const Condition4Certificate c = synthesize_P0(rotation_block(2.0));
  EXPECT_LE((c.P0.mat() - Mat::Identity(2, 2)).norm(), 1e-9);
  EXPECT_LE(c.S0.mat().norm(), 1e-9);
  EXPECT_TRUE(c.kernel_ok);
}

TEST(SynthesizeP0, RejectsIneligible) {
  EXPECT_THROW(synthesize_P0(jordan_zero(3)), std::invalid_argument);
  EXPECT_THROW(synthesize_P0(sontag_a0()), std::invalid_argument);
}

TEST(KernelInclusion, Cases) {
  EXPECT_TRUE(kernel_inclusion(SymMatrix::Identity(2), jordan_zero(2)));
  Mat p(2, 2);
  p << 0, 0, 0, 1;
  EXPECT_TRUE(kernel_inclusion(SymMatrix(p), jordan_zero(2)));
  EXPECT_FALSE(kernel_inclusion(SymMatrix::Zero(2), jordan_zero(2)));
  EXPECT_TRUE(kernel_inclusion(SymMatrix::Zero(2), Mat::Zero(2, 2)));
}

TEST(AxisSubspace, Dimensions) {
  Mat hurwitz(2, 2);
  hurwitz << -1, 1, 0, -2;
  EXPECT_EQ(axis_subspace(hurwitz).cols(), 0);
  EXPECT_EQ(axis_subspace(rotation_block(1.5)).cols(), 2);
  const Mat mixed = blkdiag({hurwitz, rotation_block(1.5), jordan_zero(2)});
  const Mat v = axis_subspace(mixed);
  EXPECT_EQ(v.cols(), 4);
  // The subspace is invariant: A * V stays in span(V).
  const Mat av = mixed * v;
  const Mat residual = av - v * (v.transpose() * av);
  EXPECT_LE(residual.norm(), 1e-8 * std::max(1.0, av.norm()));
}

struct StructuredSample {
  Mat a0;
  bool eligible;
};

// Random similarity transforms of known block structures. Eigenvalue gaps
// stay >= 0.1 so the clustering is unambiguous.
StructuredSample random_structured(std::mt19937_64& rng, int kind) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> freq(0.3, 3.0);
  std::vector<Mat> blocks;
  bool eligible = true;
  switch (kind % 4) {
    case 0: {  // eligible: Hurwitz + single zero + double zero + oscillators
      Mat h(2, 2);
      h << -1.2, 0.7, 0, -2.4;
      blocks = {h, jordan_zero(1), jordan_zero(2), rotation_block(freq(rng)),
                rotation_block(freq(rng) + 3.5)};
      break;
    }
    case 1: {  // triple zero chain
      blocks = {jordan_zero(3), rotation_block(freq(rng))};
      eligible = false;
      break;
    }
    case 2: {  // defective repeated oscillator
      const double w = freq(rng);
      Mat defective(4, 4);
      defective.setZero();
      defective.topLeftCorner(2, 2) = rotation_block(w);
      defective.bottomRightCorner(2, 2) = rotation_block(w);
      defective.topRightCorner(2, 2) = Mat::Identity(2, 2);
      Mat h(1, 1);
      h << -1.7;
      blocks = {defective, h};
      eligible = false;
      break;
    }
    default: {  // open right-half-plane eigenvalue
      Mat u(1, 1);
      u << 0.8;
      blocks = {u, rotation_block(freq(rng)), jordan_zero(1)};
      eligible = false;
      break;
    }
  }
  Mat a = blkdiag(blocks);
  // Well-conditioned random similarity: orthogonal Q plus a mild diagonal.
  const Eigen::Index n = a.rows();
  Mat raw(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) raw(i, j) = g(rng);
  const Mat q = Eigen::HouseholderQR<Mat>(raw).householderQ();
  Vec d(n);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = scale(rng);
  const Mat t = q * d.asDiagonal();
  return {t * a * t.inverse(), eligible};
}

TEST(RoundTrip, StructuredFamilies) {
  std::mt19937_64 rng(51);
  int eligible_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const StructuredSample s = random_structured(rng, trial);
    ASSERT_EQ(check_prop1(s.a0), s.eligible) << "trial " << trial;
    if (!s.eligible) continue;
    ++eligible_seen;
    const Condition4Certificate cert = synthesize_P0(s.a0);
    const double scale = std::max(1.0, spectral_norm(s.a0));
    ASSERT_GE(min_eig(cert.P0), -1e-9);
    ASSERT_GE(min_eig(cert.S0), -1e-9 * scale);
    ASSERT_TRUE(cert.kernel_ok);
    const Mat res = cert.S0.mat() + s.a0.transpose() * cert.P0.mat() + cert.P0.mat() * s.a0;
    ASSERT_LE(res.norm(), 1e-11 * scale);
  }
  EXPECT_EQ(eligible_seen, 50);
}

TEST(SynthesizeP0, SemisimpleRepeatedOscillatorIsEligible) {
  // Two independent planes at the same frequency: all Jordan blocks stay
  // simple, so the construction applies.
  const Mat a = blkdiag({rotation_block(1.0), rotation_block(1.0)});
  EXPECT_TRUE(check_prop1(a));
  const Condition4Certificate c = synthesize_P0(a);
  EXPECT_GE(min_eig(c.P0), -1e-9);
  EXPECT_TRUE(c.kernel_ok);
}

}  // namespace
}  // namespace satcert
