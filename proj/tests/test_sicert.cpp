#include "satcert/sicert.hpp"

#include <gtest/gtest.h>

#include <random>

namespace satcert {
namespace {

Vec gains1(double k) {
  Vec g(1);
  g << k;
  return g;
}

Vec gains2(double k1, double k2) {
  Vec g(2);
  g << k1, k2;
  return g;
}

Vec gains3(double k1, double k2, double k3) {
  Vec g(3);
  g << k1, k2, k3;
  return g;
}

// Simpson quadrature of int_0^v sat(s) ds, the independent route for V.
double sat_integral(double v) {
  const int steps = 20000;
  const double hstep = v / steps;
  double acc = 0.0;
  auto f = [](double s) { return std::clamp(s, -1.0, 1.0); };
  for (int i = 0; i < steps; ++i) {
    const double a = i * hstep, b = (i + 1) * hstep;
    acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  return acc;
}

TEST(EvalV, ZeroAtOrigin) {
  const auto pc = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1, 1));
  EXPECT_DOUBLE_EQ(eval_V_si(pc.P0, pc.h, pc.sys, Vec::Zero(2)), 0.0);
}

TEST(EvalV, SingleIntegratorIsSatIntegral) {
  for (double k : {0.7, 2.5}) {
    const auto pc = prototype_certificate(PrototypeKind::kSingleIntegrator, gains1(k));
    for (double x : {0.1 / k, 5.0 / k, -3.2 / k}) {
      Vec xv(1);
      xv << x;
      const double v = eval_V_si(pc.P0, pc.h, pc.sys, xv);
      EXPECT_NEAR(v, sat_integral(k * x), 1e-9 * std::max(1.0, std::abs(v)));
    }
  }
}

TEST(EvalV, DoubleIntegratorHandValue) {
  const auto pc = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1, 1));
  Vec x(2);
  x << 1, 1;
  // (1/2) x2^2 + int_0^2 sat = 0.5 + 1.5.
  EXPECT_NEAR(eval_V_si(pc.P0, pc.h, pc.sys, x), 2.0, 1e-12);
}

TEST(MatchSi, DoubleIntegratorZeroMu) {
  const auto pc = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(3.0, 0.7));
  const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
  EXPECT_NEAR(m.mu, 0.0, 1e-14);
  EXPECT_LE(m.residual, 1e-14);
}

TEST(MatchSi, OscillatorMuFormula) {
  for (double k1 : {-0.5, 0.3, 2.0}) {
    for (double k2 : {0.4, 1.0, 5.0}) {
      const auto pc = prototype_certificate(PrototypeKind::kOscillator, gains2(k1, k2));
      const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
      EXPECT_NEAR(m.mu, k2 / (k1 * k1 + k2 * k2), 1e-12);
      EXPECT_LE(m.residual, 1e-12 * m.scale);
    }
  }
}

TEST(MatchSi, IntegralOscillatorMuFormula) {
  const auto pc = prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1, 1));
  const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
  EXPECT_NEAR(m.mu, 0.4, 1e-12);
  EXPECT_LE(m.residual, 1e-12);
}

TEST(MatchSi, ZeroGainRejected) {
  auto sys = normalized_prototype(PrototypeKind::kDoubleIntegrator, gains2(1, 1));
  sys.K.setZero();
  EXPECT_THROW(match_si(sys, SymMatrix::Identity(2), 1.0), std::invalid_argument);
}

TEST(OmegaSi, Formulas) {
  const auto si = prototype_certificate(PrototypeKind::kSingleIntegrator, gains1(1.5));
  EXPECT_NEAR(omega_si(si.sys, si.h), 3.0, 1e-14);
  const auto di = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(2.0, 3.0));
  EXPECT_NEAR(omega_si(di.sys, di.h), 3.0, 1e-14);  // 2 k2 / k1
  const auto io = prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1, 1));
  EXPECT_NEAR(omega_si(io.sys, io.h), 1.6, 1e-14);  // 2 k2 k3 / (k1^2 + k2^2)
}

TEST(VdotQ, SingleIntegratorClosedForm) {
  const double k = 1.5;
  const auto pc = prototype_certificate(PrototypeKind::kSingleIntegrator, gains1(k));
  const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
  const ExtendedForm f = vdot_Q_si(pc.sys, pc.P0, pc.h, m.mu);
  const Mat q = f.assembled().mat();
  EXPECT_NEAR(q(0, 0), 2.0 * k * k * k, 1e-12);
  EXPECT_NEAR(q(0, 1), -2.0 * k * k, 1e-12);
  EXPECT_NEAR(q(1, 1), 2.0 * k, 1e-12);
}

TEST(VdotQ, OscillatorCombinedMargin) {
  const auto pc = prototype_certificate(PrototypeKind::kOscillator, gains2(1, 1));
  const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
  EXPECT_NEAR(2.0 * m.mu + omega_si(pc.sys, pc.h), 2.0, 1e-12);
}

TEST(VdotQ, FiniteDifferenceConsistency) {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g(0.0, 2.0);
  const std::vector<PrototypeCertificate> certs = {
      prototype_certificate(PrototypeKind::kSingleIntegrator, gains1(1.2)),
      prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1.0, 2.0)),
      prototype_certificate(PrototypeKind::kOscillator, gains2(0.5, 1.5)),
      prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1.0, 1.0)),
  };
  for (const auto& pc : certs) {
    const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
    const ExtendedForm f = vdot_Q_si(pc.sys, pc.P0, pc.h, m.mu);
    int checked = 0;
    while (checked < 250) {
      Vec x(pc.sys.n());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
      const double kx = (pc.sys.K * x)(0);
      if (std::abs(std::abs(kx) - 1.0) < 0.05) continue;  // keep away from the kink
      const Vec flow = closed_loop_rhs(pc.sys, x);
      if (flow.norm() < 1e-8) continue;
      const double eps = 1e-6 * std::max(1.0, x.norm()) / std::max(1.0, flow.norm());
      const double vp = eval_V_si(pc.P0, pc.h, pc.sys, x + eps * flow);
      const double vm = eval_V_si(pc.P0, pc.h, pc.sys, x - eps * flow);
      const double fd = (vp - vm) / (2.0 * eps);
      const Vec xi = form_coordinates(f, x);
      const double analytic = -0.5 * xi.dot(f.assembled().mat() * xi);
      ASSERT_NEAR(fd, analytic, 1e-4 * std::max(1.0, std::abs(analytic)));
      ++checked;
    }
  }
}

TEST(CertifySi, DoubleIntegratorCertified) {
  const auto pc = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(2.0, 0.5));
  EXPECT_TRUE(certify_si(pc.sys, pc.P0, pc.h).certified);
}

TEST(CertifySi, OscillatorNegativeK1Certified) {
  const auto pc = prototype_certificate(PrototypeKind::kOscillator, gains2(-0.5, 1.0));
  EXPECT_TRUE(certify_si(pc.sys, pc.P0, pc.h).certified);
}

TEST(CertifySi, IntegralOscillatorPositiveK1FailsAtMu) {
  const auto pc = prototype_formula(PrototypeKind::kIntegralOscillator, gains3(0.5, 1.0, 1.0));
  const GASVerdict v = certify_si(pc.sys, pc.P0, pc.h);
  EXPECT_FALSE(v.certified);
  const GASCondition* mu_cond = nullptr;
  for (const auto& c : v.conditions) {
    if (c.name == "mu >= 0") mu_cond = &c;
  }
  ASSERT_NE(mu_cond, nullptr);
  EXPECT_FALSE(mu_cond->pass);
  EXPECT_NEAR(mu_cond->value, -0.4, 1e-12);
}

TEST(Prototype, ClosedFormParameters) {
  const auto di = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1, 1));
  EXPECT_NEAR(di.P0(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(di.P0(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(di.h, 1.0, 1e-15);

  const auto osc = prototype_certificate(PrototypeKind::kOscillator, gains2(1, 1));
  EXPECT_LE((osc.P0.mat() - Mat::Identity(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(osc.h, 0.5, 1e-15);

  const auto io = prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1, 1));
  EXPECT_NEAR(io.P0(2, 2), 1.2, 1e-12);
  EXPECT_NEAR(io.h, 0.8, 1e-12);
}

TEST(Prototype, AllReturnedCertificatesPass) {
  EXPECT_TRUE([] {
    const auto pc = prototype_certificate(PrototypeKind::kSingleIntegrator, gains1(0.4));
    return certify_si(pc.sys, pc.P0, pc.h).certified;
  }());
  EXPECT_TRUE([] {
    const auto pc = prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(0.0, 2.0, 1.5));
    return certify_si(pc.sys, pc.P0, pc.h).certified;
  }());
}

TEST(Prototype, DomainErrorsNameTheInequality) {
  try {
    prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(-1.0, 1.0));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("k1 > 0"), std::string::npos);
  }
  try {
    prototype_certificate(PrototypeKind::kOscillator, gains2(-1.5, 1.0));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("k1 > -1"), std::string::npos);
  }
  try {
    prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(0.5, 1.0, 1.0));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("(iv*) k1 <= 0"), std::string::npos);
  }
  try {
    prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1.0, -1.0));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("(i) k3 > 0"), std::string::npos);
  }
}

TEST(Normalize, IdentityCase) {
  const PrototypeTransform t = normalize_prototype(PrototypeKind::kOscillator, 1.0);
  EXPECT_DOUBLE_EQ(t.time_scale, 1.0);
  EXPECT_LE((t.state_T - Mat::Identity(2, 2)).norm(), 0.0);
  const PrototypeTransform ti = normalize_prototype(PrototypeKind::kIntegralOscillator, 1.0, 1.0);
  EXPECT_LE((ti.state_T - Mat::Identity(3, 3)).norm(), 0.0);
}

TEST(Normalize, ConjugationIdentity) {
  for (const auto& [omega, zeta] : std::vector<std::pair<double, double>>{
           {2.0, 1.0}, {0.7, -2.0}, {2.0, 3.0}}) {
    const auto phys =
        physical_prototype(PrototypeKind::kIntegralOscillator, gains3(-0.5, 1, 1), omega, zeta);
    const PrototypeTransform t = normalize_prototype(PrototypeKind::kIntegralOscillator, omega, zeta);
    const Mat a_norm =
        t.state_T * phys.A0 * t.state_T.inverse() / t.time_scale;
    const Mat expect = (Mat(3, 3) << 0, 1, 0, -1, 0, 1, 0, 0, 0).finished();
    ASSERT_LE((a_norm - expect).norm(), 1e-12);
    if (omega == 2.0 && zeta == 3.0) {
      EXPECT_NEAR(t.state_T(2, 2), 1.5, 1e-15);
    }
  }
  const auto osc = physical_prototype(PrototypeKind::kOscillator, gains2(1, 1), 2.0);
  const PrototypeTransform t = normalize_prototype(PrototypeKind::kOscillator, 2.0);
  EXPECT_DOUBLE_EQ(t.time_scale, 2.0);
  const Mat a_norm = t.state_T * osc.A0 * t.state_T.inverse() / t.time_scale;
  EXPECT_LE((a_norm - (Mat(2, 2) << 0, 1, -1, 0).finished()).norm(), 1e-14);
}

TEST(SylvesterMinors, FrozenValuesAndNumericCrossCheck) {
  const Vec k = gains3(-0.5, 1.0, 1.0);
  const SylvesterMinors m = sylvester_minors_integrosc(k);
  EXPECT_NEAR(m.m1, 1.5, 1e-12);
  EXPECT_NEAR(m.m2, 3.125, 1e-12);
  EXPECT_NEAR(m.m3, 1.171875, 1e-12);

  const SylvesterMinors m0 = sylvester_minors_integrosc(gains3(0.0, 1.0, 1.0));
  EXPECT_NEAR(m0.m1, 1.0, 1e-14);

  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double k3 = u(rng);
    const double k1 = -u(rng) * 0.3 * k3;  // keeps k1 + k3 > 0, k1 <= 0
    const double k2 = u(rng);
    const Vec g = gains3(k1, k2, k3);
    const auto pc = prototype_certificate(PrototypeKind::kIntegralOscillator, g);
    const Mat scaled = (k1 * k1 + k2 * k2) *
                       (pc.P0.mat() + pc.h * pc.sys.K.transpose() * pc.sys.K);
    const SylvesterMinors mm = sylvester_minors_integrosc(g);
    ASSERT_NEAR(mm.m1, scaled(0, 0), 1e-8 * std::max(1.0, std::abs(mm.m1)));
    ASSERT_NEAR(mm.m2, scaled.topLeftCorner(2, 2).determinant(),
                1e-8 * std::max(1.0, std::abs(mm.m2)));
    ASSERT_NEAR(mm.m3, scaled.determinant(), 1e-8 * std::max(1.0, std::abs(mm.m3)));
    ASSERT_GT(mm.m1, 0.0);
    ASSERT_GT(mm.m2, 0.0);
    ASSERT_GT(mm.m3, 0.0);
  }
}

TEST(Lemmas, BlockFormCertifiedRadial) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    // Random psd P0 plus h > 0 with P0 + h K^T K pd.
    Mat half(2, 2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) half(i, j) = g(rng);
    const SymMatrix p0(half * half.transpose());
    Mat k(1, 2);
    k << u(rng), u(rng);
    const double h = u(rng);
    const auto sys = make_system((Mat(2, 2) << 0, 1, 0, 0).finished(),
                                 (Mat(2, 1) << 0, 1).finished(), k);
    const ExtendedForm f = popov_block_form(sys, p0, h);
    PositivityCertificate cert;
    cert.kind = FormCertKind::kPdRadial;
    cert.T0 = Vec::Constant(1, h / 2.0);
    ASSERT_TRUE(certify(f, cert).passed);
  }
}

TEST(Lemmas, BlockFormPlainPdWhenHNegative) {
  Mat k(1, 2);
  k << 1.0, 1.0;
  const auto sys = make_system((Mat(2, 2) << 0, 1, -1, 0).finished(),
                               (Mat(2, 1) << 0, 1).finished(), k);
  const double h = -0.4;  // P0 = I keeps P0 + h K^T K pd
  const ExtendedForm f = popov_block_form(sys, SymMatrix::Identity(2), h);
  EXPECT_TRUE(is_pd(f.assembled(), 1e-9));
}

TEST(Lemmas, VdotFormCertifiedLowerBound) {
  const std::vector<PrototypeCertificate> certs = {
      prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1.0, 2.0)),
      prototype_certificate(PrototypeKind::kOscillator, gains2(-0.3, 0.8)),
      prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(-0.4, 1.2, 0.9)),
  };
  for (const auto& pc : certs) {
    const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
    ASSERT_LE(m.residual, 1e-9 * m.scale);
    const double omega = omega_si(pc.sys, pc.h);
    const ExtendedForm f = vdot_Q_si(pc.sys, pc.P0, pc.h, m.mu);
    PositivityCertificate cert;
    cert.kind = FormCertKind::kLowerBound;
    cert.T0 = Vec::Constant(1, std::max(m.mu, 0.0));
    cert.R = SymMatrix(Mat::Constant(1, 1, 2.0 * m.mu + omega));
    ASSERT_TRUE(certify(f, cert).passed);
  }
}

TEST(RankDeficientP0, MuConsistency) {
  // Rank-deficient P0 forces mu = 0 through the matching condition.
  const auto di = prototype_certificate(PrototypeKind::kDoubleIntegrator, gains2(1.7, 0.9));
  EXPECT_EQ(rank_svd(di.P0.mat(), 1e-10), 1);
  EXPECT_NEAR(match_si(di.sys, di.P0, di.h).mu, 0.0, 1e-14);

  const auto io = prototype_certificate(PrototypeKind::kIntegralOscillator, gains3(0.0, 1.0, 1.0));
  EXPECT_EQ(rank_svd(io.P0.mat(), 1e-8), 2);
  EXPECT_NEAR(match_si(io.sys, io.P0, io.h).mu, 0.0, 1e-12);

  // Full-rank case keeps mu K^T inside range(P0) trivially; check the
  // least-squares residual route on the rank-deficient ones.
  for (const auto& pc : {di, io}) {
    const MatchResult m = match_si(pc.sys, pc.P0, pc.h);
    const Vec target = m.mu * pc.sys.K.transpose().col(0);
    const Vec sol = pc.P0.mat().completeOrthogonalDecomposition().solve(target);
    ASSERT_LE((pc.P0.mat() * sol - target).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace satcert
