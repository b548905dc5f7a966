#pragma once

#include <string>
#include <vector>

#include "satcert/forms.hpp"
#include "satcert/system.hpp"

namespace satcert {

/// One checked condition of a GAS certificate, with its numeric slack.
struct GASCondition {
  std::string name;
  double value = 0.0;      // min eigenvalue, residual margin, or scalar value
  double scale = 1.0;      // normalization the threshold refers to
  bool pass = false;
  bool marginal = false;   // |value| within the marginal band around zero
};

struct GASVerdict {
  bool certified = false;
  std::vector<GASCondition> conditions;

  const GASCondition* first_failure() const {
    for (const auto& c : conditions) {
      if (!c.pass) return &c;
    }
    return nullptr;
  }
};

struct CertifyOptions {
  double tol = kDefiniteTol;  // relative tolerance for >=0 / >0 / residual checks
  double mu_floor = 1e-12;    // negative mu within this margin is clamped to 0
};

/// Single-input certificate data realizing the Popov-type construction.
struct SICertificate {
  SymMatrix P0;
  double h = 0.0;
  double mu = 0.0;
  double omega = 0.0;
  SymMatrix S0;
};

namespace detail {

inline void require_si(const SaturatedSystem& sys) {
  if (sys.m() != 1) {
    throw std::invalid_argument("single-input operation called with m != 1");
  }
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument(
        "certificate construction requires symmetric saturation limits");
  }
}

inline GASCondition psd_condition(const std::string& name, const SymMatrix& s, double tol) {
  const Vec ev = eig_sym(s).eigenvalues;
  GASCondition c;
  c.name = name;
  c.value = ev(0);
  c.scale = std::max(1.0, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
  c.pass = c.value >= -tol * c.scale;
  c.marginal = std::abs(c.value) <= 1e-6 * c.scale;
  return c;
}

inline GASCondition pd_condition(const std::string& name, const SymMatrix& s, double tol) {
  GASCondition c = psd_condition(name, s, tol);
  c.pass = c.value >= tol * c.scale;
  return c;
}

inline GASCondition scalar_pos_condition(const std::string& name, double v, double scale,
                                         double tol) {
  GASCondition c;
  c.name = name;
  c.value = v;
  c.scale = std::max(1.0, scale);
  c.pass = v >= tol * c.scale;
  c.marginal = std::abs(v) <= 1e-6 * c.scale;
  return c;
}

}  // namespace detail

/// V(x) = (1/2) (x^T P0 x + h (|Kx|^2 - dz(Kx)^2)). For |Kx| inside the
/// limits this is (1/2) x^T (P0 + h K^T K) x.
inline double eval_V_si(const SymMatrix& p0, double h, const SaturatedSystem& sys, const Vec& x) {
  detail::require_si(sys);
  const double kx = (sys.K * x)(0);
  Vec u(1);
  u << kx;
  const double d = dz(u, sys.limits)(0);
  return 0.5 * (x.dot(p0.mat() * x) + h * (kx * kx - d * d));
}

struct MatchResult {
  double mu = 0.0;
  double residual = 0.0;
  double scale = 1.0;
};

/// Least-squares fit of the scalar mu in P0 B - h A0^T K^T = mu K^T.
inline MatchResult match_si(const SaturatedSystem& sys, const SymMatrix& p0, double h) {
  detail::require_si(sys);
  const Vec kt = sys.K.transpose().col(0);
  if (kt.norm() == 0.0) throw std::invalid_argument("match_si: K = 0");
  const Vec lhs = p0.mat() * sys.B.col(0) - h * (sys.A0.transpose() * kt);
  MatchResult r;
  r.mu = lhs.dot(kt) / kt.squaredNorm();
  r.residual = (lhs - r.mu * kt).norm();
  r.scale = std::max(1.0, (p0.mat() * sys.B).norm() + std::abs(h) * (sys.A0.transpose() * kt).norm());
  return r;
}

/// omega = 2 h K B.
inline double omega_si(const SaturatedSystem& sys, double h) {
  detail::require_si(sys);
  return 2.0 * h * (sys.K * sys.B)(0, 0);
}

inline SymMatrix s0_of(const SaturatedSystem& sys, const SymMatrix& p0) {
  return SymMatrix(-(sys.A0.transpose() * p0.mat() + p0.mat() * sys.A0));
}

/// The quadratic form of -2*Vdot under the matching condition:
/// Q = [[S0 + (2mu+omega) K^T K, -(mu+omega) K^T], [-(mu+omega) K, omega]].
inline ExtendedForm vdot_Q_si(const SaturatedSystem& sys, const SymMatrix& p0, double h,
                              double mu) {
  detail::require_si(sys);
  const double omega = omega_si(sys, h);
  const Mat kt = sys.K.transpose();
  const SymMatrix q11(s0_of(sys, p0).mat() + (2.0 * mu + omega) * kt * sys.K);
  ExtendedForm f{q11, -(mu + omega) * kt, SymMatrix(Mat::Constant(1, 1, omega)), sys.K,
                 sys.limits};
  f.validate();
  return f;
}

/// Checks all conditions of the single-input GAS certificate: Acl Hurwitz,
/// P0 >= 0 with P0 + h K^T K > 0, S0 >= 0, matching with mu >= 0 and
/// 2 mu + omega > 0.
inline GASVerdict certify_si(const SaturatedSystem& sys, const SymMatrix& p0, double h,
                             const CertifyOptions& opt = {}) {
  detail::require_si(sys);
  if (p0.dim() != sys.n()) throw std::invalid_argument("certify_si: P0 dimension mismatch");
  GASVerdict v;
  auto add = [&v](GASCondition c) { v.conditions.push_back(std::move(c)); };

  GASCondition hur;
  hur.name = "Acl is Hurwitz";
  const CVec ev = eigenvalues_general(acl(sys));
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) max_re = std::max(max_re, ev(i).real());
  hur.value = -max_re;
  hur.scale = std::max(1.0, spectral_norm(acl(sys)));
  hur.pass = max_re < -opt.tol * hur.scale;
  hur.marginal = std::abs(max_re) <= 1e-6 * hur.scale;
  add(hur);

  add(detail::psd_condition("P0 >= 0", p0, opt.tol));
  add(detail::pd_condition("P0 + h K^T K > 0",
                           SymMatrix(p0.mat() + h * sys.K.transpose() * sys.K), opt.tol));
  add(detail::psd_condition("S0 >= 0", s0_of(sys, p0), opt.tol));

  const MatchResult m = match_si(sys, p0, h);
  GASCondition match;
  match.name = "matching residual";
  match.value = m.residual;
  match.scale = m.scale;
  match.pass = m.residual <= opt.tol * m.scale;
  add(match);

  double mu = m.mu;
  GASCondition munn;
  munn.name = "mu >= 0";
  munn.value = mu;
  munn.scale = std::max(1.0, std::abs(mu));
  munn.pass = mu >= -opt.mu_floor;
  munn.marginal = std::abs(mu) <= 1e-6;
  add(munn);
  if (mu < 0.0 && mu >= -opt.mu_floor) mu = 0.0;

  const double omega = omega_si(sys, h);
  add(detail::scalar_pos_condition("2 mu + omega > 0", 2.0 * mu + omega,
                                   2.0 * std::abs(mu) + std::abs(omega), opt.tol));

  v.certified = true;
  for (const auto& c : v.conditions) {
    if (!c.pass) v.certified = false;
  }
  return v;
}

inline SICertificate make_si_certificate(const SaturatedSystem& sys, const SymMatrix& p0,
                                         double h) {
  const MatchResult m = match_si(sys, p0, h);
  SICertificate cert;
  cert.P0 = p0;
  cert.h = h;
  cert.mu = m.mu < 0.0 && m.mu >= -1e-12 ? 0.0 : m.mu;
  cert.omega = omega_si(sys, h);
  cert.S0 = s0_of(sys, p0);
  return cert;
}

// ---------------------------------------------------------------------------
// Prototype plants and their closed-form certificates.
// ---------------------------------------------------------------------------

enum class PrototypeKind {
  kSingleIntegrator,
  kDoubleIntegrator,
  kOscillator,
  kIntegralOscillator,
};

inline const char* to_string(PrototypeKind k) {
  switch (k) {
    case PrototypeKind::kSingleIntegrator: return "single-integrator";
    case PrototypeKind::kDoubleIntegrator: return "double-integrator";
    case PrototypeKind::kOscillator: return "oscillator";
    case PrototypeKind::kIntegralOscillator: return "integral-oscillator";
  }
  return "?";
}

/// Normalized prototype dynamics (unit input column, unit limits).
inline SaturatedSystem normalized_prototype(PrototypeKind kind, const Vec& gains) {
  Mat a0, b, k;
  switch (kind) {
    case PrototypeKind::kSingleIntegrator:
      if (gains.size() != 1) throw std::invalid_argument("single integrator needs 1 gain");
      a0 = Mat::Zero(1, 1);
      b = Mat::Ones(1, 1);
      break;
    case PrototypeKind::kDoubleIntegrator:
      if (gains.size() != 2) throw std::invalid_argument("double integrator needs 2 gains");
      a0 = (Mat(2, 2) << 0, 1, 0, 0).finished();
      b = (Mat(2, 1) << 0, 1).finished();
      break;
    case PrototypeKind::kOscillator:
      if (gains.size() != 2) throw std::invalid_argument("oscillator needs 2 gains");
      a0 = (Mat(2, 2) << 0, 1, -1, 0).finished();
      b = (Mat(2, 1) << 0, 1).finished();
      break;
    case PrototypeKind::kIntegralOscillator:
      if (gains.size() != 3) throw std::invalid_argument("integral oscillator needs 3 gains");
      a0 = (Mat(3, 3) << 0, 1, 0, -1, 0, 1, 0, 0, 0).finished();
      b = (Mat(3, 1) << 0, 0, 1).finished();
      break;
  }
  k = gains.transpose();
  return make_system(a0, b, k);
}

struct PrototypeCertificate {
  SaturatedSystem sys;  // normalized dynamics
  SymMatrix P0;
  double h = 0.0;
};

/// Closed-form certificate parameters, without the gain-domain checks.
inline PrototypeCertificate prototype_formula(PrototypeKind kind, const Vec& gains) {
  PrototypeCertificate out{normalized_prototype(kind, gains), SymMatrix::Zero(1), 0.0};
  switch (kind) {
    case PrototypeKind::kSingleIntegrator:
      out.P0 = SymMatrix::Zero(1);
      out.h = 1.0;
      break;
    case PrototypeKind::kDoubleIntegrator:
      out.P0 = SymMatrix((Mat(2, 2) << 0, 0, 0, 1).finished());
      out.h = 1.0 / gains(0);
      break;
    case PrototypeKind::kOscillator:
      out.P0 = SymMatrix::Identity(2);
      out.h = gains(0) / gains.squaredNorm();
      break;
    case PrototypeKind::kIntegralOscillator: {
      const double k1 = gains(0), k2 = gains(1), k3 = gains(2);
      const double denom = k1 * k1 + k2 * k2;
      const double p33 = (k2 * k2 - k1 * k3) / denom;
      out.P0 = SymMatrix((Mat(3, 3) << 1, 0, -1, 0, 1, 0, -1, 0, p33).finished());
      out.h = k2 / denom;
      break;
    }
  }
  return out;
}

/// Closed-form certificate with the gain-domain preconditions enforced; the
/// raised error names the violated inequality.
inline PrototypeCertificate prototype_certificate(PrototypeKind kind, const Vec& gains) {
  auto fail = [kind](const std::string& ineq) {
    throw std::domain_error(std::string("prototype_certificate(") + to_string(kind) +
                            "): gain domain violated: " + ineq);
  };
  switch (kind) {
    case PrototypeKind::kSingleIntegrator:
      if (gains.size() != 1) fail("one gain expected");
      if (!(gains(0) > 0.0)) fail("k > 0");
      break;
    case PrototypeKind::kDoubleIntegrator:
      if (gains.size() != 2) fail("two gains expected");
      if (!(gains(0) > 0.0)) fail("k1 > 0");
      if (!(gains(1) > 0.0)) fail("k2 > 0");
      break;
    case PrototypeKind::kOscillator:
      if (gains.size() != 2) fail("two gains expected");
      if (!(gains(0) > -1.0)) fail("k1 > -1");
      if (!(gains(1) > 0.0)) fail("k2 > 0");
      break;
    case PrototypeKind::kIntegralOscillator:
      if (gains.size() != 3) fail("three gains expected");
      if (!(gains(2) > 0.0)) fail("(i) k3 > 0");
      if (!(gains(1) * gains(2) > gains(0))) fail("(ii) k2 k3 > k1");
      if (!(gains(0) + gains(2) > 0.0)) fail("(iii) k1 + k3 > 0");
      if (!(gains(0) <= 0.0)) fail("(iv*) k1 <= 0");
      break;
  }
  return prototype_formula(kind, gains);
}

/// State/time transformation mapping the physical prototype onto the
/// normalized dynamics: A_norm = (1/time_scale) T A0 T^{-1}. For the
/// integral oscillator the input column additionally picks up the factor
/// input_scale = zeta^2 / omega^4 which is absorbed into the saturation
/// level of the normalized loop.
struct PrototypeTransform {
  Mat state_T;
  double time_scale = 1.0;
  double input_scale = 1.0;
};

inline PrototypeTransform normalize_prototype(PrototypeKind kind, double omega = 1.0,
                                              double zeta = 1.0) {
  PrototypeTransform t;
  switch (kind) {
    case PrototypeKind::kSingleIntegrator:
      t.state_T = Mat::Identity(1, 1);
      break;
    case PrototypeKind::kDoubleIntegrator:
      t.state_T = Mat::Identity(2, 2);
      break;
    case PrototypeKind::kOscillator:
      if (!(omega > 0.0)) throw std::domain_error("normalize_prototype: omega > 0 required");
      t.state_T = Mat::Identity(2, 2);
      t.time_scale = omega;
      break;
    case PrototypeKind::kIntegralOscillator: {
      if (!(omega > 0.0)) throw std::domain_error("normalize_prototype: omega > 0 required");
      if (zeta == 0.0) throw std::domain_error("normalize_prototype: zeta != 0 required");
      t.state_T = Mat::Identity(3, 3);
      t.state_T(2, 2) = zeta / omega;
      t.time_scale = omega;
      t.input_scale = (zeta * zeta) / (omega * omega * omega * omega);
      break;
    }
  }
  return t;
}

/// Physical prototype dynamics before normalization.
inline SaturatedSystem physical_prototype(PrototypeKind kind, const Vec& gains,
                                          double omega = 1.0, double zeta = 1.0) {
  switch (kind) {
    case PrototypeKind::kSingleIntegrator:
    case PrototypeKind::kDoubleIntegrator:
      return normalized_prototype(kind, gains);
    case PrototypeKind::kOscillator: {
      Mat a0(2, 2), b(2, 1);
      a0 << 0, omega, -omega, 0;
      b << 0, omega;
      return make_system(a0, b, gains.transpose());
    }
    case PrototypeKind::kIntegralOscillator: {
      Mat a0(3, 3), b(3, 1);
      a0 << 0, omega, 0, -omega, 0, zeta, 0, 0, 0;
      b << 0, 0, zeta / (omega * omega);
      return make_system(a0, b, gains.transpose());
    }
  }
  throw std::logic_error("physical_prototype: unknown kind");
}

/// The three leading principal minors of (k1^2 + k2^2)(P0 + h K^T K) for the
/// integral oscillator, in closed form.
struct SylvesterMinors {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
};

inline SylvesterMinors sylvester_minors_integrosc(const Vec& gains) {
  if (gains.size() != 3) throw std::invalid_argument("sylvester_minors_integrosc: 3 gains");
  const double k1 = gains(0), k2 = gains(1), k3 = gains(2);
  const double d = k1 * k1 + k2 * k2;
  SylvesterMinors m;
  m.m1 = k2 * k2 + k1 * k1 * (1.0 + k2);
  m.m2 = d * d * (1.0 + k2);
  m.m3 = d * d * (k1 + k3) * (k2 * k3 - k1);
  return m;
}

/// The block form (1/2) [[P0 + h K^T K, 0], [0, -h]] whose positivity is the
/// content of the first certificate lemma.
inline ExtendedForm popov_block_form(const SaturatedSystem& sys, const SymMatrix& p0, double h) {
  detail::require_si(sys);
  const Eigen::Index n = sys.n();
  Mat q = Mat::Zero(n + 1, n + 1);
  q.topLeftCorner(n, n) = 0.5 * (p0.mat() + h * sys.K.transpose() * sys.K);
  q(n, n) = -0.5 * h;
  ExtendedForm f = make_form(SymMatrix(q), sys.K);
  f.limits = sys.limits;
  return f;
}

}  // namespace satcert
