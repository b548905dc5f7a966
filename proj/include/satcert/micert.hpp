#pragma once

#include <memory>
#include <string>
#include <vector>

#include "satcert/ancbi.hpp"
#include "satcert/sdp.hpp"
#include "satcert/sicert.hpp"

namespace satcert {

/// Multi-input certificate data: V(x) = (1/2)(x'P0 x + x'K'HKx - dz'H dz)
/// with diagonal H = Hp - Hn.
struct MICertificate {
  SymMatrix P0;
  Vec Hp;
  Vec Hn;
  Vec M;

  Vec H() const { return Hp - Hn; }
};

inline SymMatrix omega_mi(const SaturatedSystem& sys, const Vec& h) {
  const Mat hkb = h.asDiagonal() * (sys.K * sys.B);
  return SymMatrix(hkb + hkb.transpose());
}

inline double eval_V_mi(const SymMatrix& p0, const Vec& h, const SaturatedSystem& sys,
                        const Vec& x) {
  if (h.size() != sys.m()) throw std::invalid_argument("eval_V_mi: H size mismatch");
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument("eval_V_mi: symmetric saturation limits required");
  }
  const Vec kx = sys.K * x;
  const Vec d = dz(kx, sys.limits);
  return 0.5 * (x.dot(p0.mat() * x) + kx.dot(h.asDiagonal() * kx) - d.dot(h.asDiagonal() * d));
}

struct MatchResultMI {
  Vec M;
  double residual = 0.0;
  double scale = 1.0;
};

/// Per-column least squares for the diagonal M in P0 B - A0^T K^T H = K^T M.
inline MatchResultMI match_mi(const SaturatedSystem& sys, const SymMatrix& p0, const Vec& h) {
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument("match_mi: symmetric saturation limits required");
  }
  const Mat lhs = p0.mat() * sys.B - sys.A0.transpose() * sys.K.transpose() * h.asDiagonal();
  MatchResultMI out;
  out.M = Vec::Zero(sys.m());
  double resid2 = 0.0;
  for (Eigen::Index j = 0; j < sys.m(); ++j) {
    const Vec kj = sys.K.row(j).transpose();
    const Vec col = lhs.col(j);
    if (kj.norm() > 0.0) out.M(j) = col.dot(kj) / kj.squaredNorm();
    resid2 += (col - out.M(j) * kj).squaredNorm();
  }
  out.residual = std::sqrt(resid2);
  out.scale = std::max(1.0, (p0.mat() * sys.B).norm() +
                                (sys.A0.transpose() * sys.K.transpose() * h.asDiagonal()).norm());
  return out;
}

/// H-decomposition feasibility: Hp > 0, Hn >= 0 diagonal with
/// P0 - K^T Hn K >= 0.
inline bool decompose_check(const SymMatrix& p0, const Vec& hp, const Vec& hn, const Mat& k,
                            double tol = kDefiniteTol) {
  if (hp.minCoeff() <= 0.0) return false;
  if (hn.minCoeff() < 0.0) return false;
  const SymMatrix rest(p0.mat() - k.transpose() * hn.asDiagonal() * k);
  const double scale = spectral_norm(p0.mat()) + hn.lpNorm<Eigen::Infinity>() * std::pow(spectral_norm(k), 2);
  return min_eig(rest) >= -tol * std::max(1.0, scale);
}

/// Quadratic form of -2*Vdot under the multi-input matching condition:
/// Q = [[S0 + K'(2M+Omega)K, -K'(M+Omega)], [-(M+Omega)K, Omega]].
inline ExtendedForm vdot_Q_mi(const SaturatedSystem& sys, const SymMatrix& p0, const Vec& h,
                              const Vec& m) {
  const SymMatrix omega = omega_mi(sys, h);
  const Mat mo = Mat(m.asDiagonal()) + omega.mat();
  const Mat two_mo = 2.0 * Mat(m.asDiagonal()) + omega.mat();
  const SymMatrix q11(s0_of(sys, p0).mat() + sys.K.transpose() * two_mo * sys.K);
  ExtendedForm f{q11, -sys.K.transpose() * mo, omega, sys.K, sys.limits};
  f.validate();
  return f;
}

/// Checks the multi-input GAS certificate conditions. Thresholds are relative
/// to the natural scale of each constraint's ingredients, so a coarsely
/// rounded P0 can still be validated at a matching tolerance.
inline GASVerdict certify_mi(const SaturatedSystem& sys, const SymMatrix& p0, const Vec& hp,
                             const Vec& hn, const CertifyOptions& opt = {}) {
  if (p0.dim() != sys.n()) throw std::invalid_argument("certify_mi: P0 dimension mismatch");
  if (hp.size() != sys.m() || hn.size() != sys.m()) {
    throw std::invalid_argument("certify_mi: diagonal size mismatch");
  }
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument("certify_mi: symmetric saturation limits required");
  }
  GASVerdict v;
  auto add = [&v](GASCondition c) { v.conditions.push_back(std::move(c)); };
  auto psd_scaled = [&](const std::string& name, const SymMatrix& s, double scale) {
    GASCondition c;
    c.name = name;
    c.value = min_eig(s);
    c.scale = std::max(1.0, scale);
    c.pass = c.value >= -opt.tol * c.scale;
    c.marginal = std::abs(c.value) <= 1e-6 * c.scale;
    return c;
  };
  auto pd_scaled = [&](const std::string& name, const SymMatrix& s, double scale) {
    GASCondition c = psd_scaled(name, s, scale);
    c.pass = c.value >= opt.tol * c.scale;
    return c;
  };

  GASCondition hur;
  hur.name = "Acl is Hurwitz";
  const CVec ev = eigenvalues_general(acl(sys));
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) max_re = std::max(max_re, ev(i).real());
  hur.value = -max_re;
  hur.scale = std::max(1.0, spectral_norm(acl(sys)));
  hur.pass = max_re < -opt.tol * hur.scale;
  add(hur);

  const double p0n = spectral_norm(p0.mat());
  const double a0n = spectral_norm(sys.A0);
  const double k2 = std::pow(spectral_norm(sys.K), 2);
  const Vec h = hp - hn;

  add(psd_scaled("P0 >= 0", p0, p0n));
  add(psd_scaled("S0 >= 0", s0_of(sys, p0), 2.0 * p0n * a0n));

  GASCondition hpc;
  hpc.name = "Hp > 0";
  hpc.value = hp.minCoeff();
  hpc.scale = std::max(1.0, hp.lpNorm<Eigen::Infinity>());
  hpc.pass = hpc.value >= opt.tol * hpc.scale;
  add(hpc);

  GASCondition hnc;
  hnc.name = "Hn >= 0";
  hnc.value = hn.size() > 0 ? hn.minCoeff() : 0.0;
  hnc.scale = std::max(1.0, hn.lpNorm<Eigen::Infinity>());
  hnc.pass = hnc.value >= -opt.tol * hnc.scale;
  add(hnc);

  add(pd_scaled("P0 + K^T H K > 0",
                SymMatrix(p0.mat() + sys.K.transpose() * h.asDiagonal() * sys.K),
                p0n + k2 * h.lpNorm<Eigen::Infinity>()));
  add(psd_scaled("P0 - K^T Hn K >= 0",
                 SymMatrix(p0.mat() - sys.K.transpose() * hn.asDiagonal() * sys.K),
                 p0n + k2 * hn.lpNorm<Eigen::Infinity>()));

  const MatchResultMI m = match_mi(sys, p0, h);
  GASCondition match;
  match.name = "matching residual";
  match.value = m.residual;
  match.scale = m.scale;
  match.pass = m.residual <= opt.tol * m.scale;
  add(match);

  Vec mm = m.M;
  GASCondition mc;
  mc.name = "M >= 0";
  mc.value = mm.minCoeff();
  mc.scale = std::max(1.0, mm.lpNorm<Eigen::Infinity>());
  mc.pass = mc.value >= -std::max(opt.mu_floor, opt.tol * mc.scale);
  add(mc);
  for (Eigen::Index j = 0; j < mm.size(); ++j) mm(j) = std::max(mm(j), 0.0);

  const SymMatrix omega = omega_mi(sys, h);
  add(pd_scaled("2M + Omega > 0", SymMatrix(2.0 * Mat(mm.asDiagonal()) + omega.mat()),
                2.0 * mm.lpNorm<Eigen::Infinity>() + spectral_norm(omega.mat())));

  v.certified = true;
  for (const auto& c : v.conditions) {
    if (!c.pass) v.certified = false;
  }
  return v;
}

// ---------------------------------------------------------------------------
// LMI analysis program.
// ---------------------------------------------------------------------------

/// Variable layout of the assembled program: [vech(P0), Hp, Hn, M, kappa].
struct LMILayout {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index p0_at(Eigen::Index i, Eigen::Index j) const { return sym_var_index(i, j, n); }
  Eigen::Index hp_at(Eigen::Index j) const { return sym_var_count(n) + j; }
  Eigen::Index hn_at(Eigen::Index j) const { return sym_var_count(n) + m + j; }
  Eigen::Index m_at(Eigen::Index j) const { return sym_var_count(n) + 2 * m + j; }
  Eigen::Index kappa_at() const { return sym_var_count(n) + 3 * m; }
  Eigen::Index total() const { return sym_var_count(n) + 3 * m + 1; }
};

struct LMIVariables {
  SymMatrix P0;
  Vec Hp, Hn, M;
  double kappa = 0.0;
};

inline LMILayout lmi_layout(const LMIProblem& prob) {
  if (!prob.has_system) throw std::invalid_argument("lmi_layout: problem carries no system");
  return LMILayout{prob.system.n(), prob.system.m()};
}

inline LMIVariables lmi_unpack(const LMIProblem& prob, const Vec& z) {
  const LMILayout lay = lmi_layout(prob);
  if (z.size() != lay.total()) throw std::invalid_argument("lmi_unpack: z size mismatch");
  LMIVariables v;
  v.P0 = sym_from_vech(z.head(sym_var_count(lay.n)), lay.n);
  v.Hp = z.segment(lay.hp_at(0), lay.m);
  v.Hn = z.segment(lay.hn_at(0), lay.m);
  v.M = z.segment(lay.m_at(0), lay.m);
  v.kappa = z(lay.kappa_at());
  return v;
}

/// Assembles the min-kappa analysis program for the given loop. A0 and B are
/// time-scaled so |A0| <= 100 (inverted on extraction: M picks up the
/// factor). Strict inequalities carry the eps_strict margin. The forced
/// vanishing of He(P0 A0) on the imaginary-axis subspace is attached as hint
/// equalities; they are implied by feasibility and are not part of the
/// verified constraint set.
inline LMIProblem assemble_lmi(const SaturatedSystem& sys, double eps_strict = 1e-6) {
  sys.validate();
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument("assemble_lmi: symmetric saturation limits required");
  }
  LMIProblem prob;
  prob.eps_strict = eps_strict;
  prob.has_system = true;
  prob.system = sys;
  prob.time_scale = std::max(1.0, spectral_norm(sys.A0) / 100.0);
  prob.scaled_system = sys;
  prob.scaled_system.A0 /= prob.time_scale;
  prob.scaled_system.B /= prob.time_scale;

  const LMILayout lay{sys.n(), sys.m()};
  const Eigen::Index n = lay.n, m = lay.m, nv = lay.total();
  prob.var_names.reserve(nv);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      prob.var_names.push_back("P0(" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) prob.var_names.push_back("Hp(" + std::to_string(j) + ")");
  for (Eigen::Index j = 0; j < m; ++j) prob.var_names.push_back("Hn(" + std::to_string(j) + ")");
  for (Eigen::Index j = 0; j < m; ++j) prob.var_names.push_back("M(" + std::to_string(j) + ")");
  prob.var_names.push_back("kappa");

  const Mat& a = prob.scaled_system.A0;
  const Mat& b = prob.scaled_system.B;
  const Mat& k = sys.K;
  const Mat eye_n = Mat::Identity(n, n);
  const Mat eye_m = Mat::Identity(m, m);

  auto unpack = [&](const Vec& z) {
    struct Vars {
      Mat P0;
      Vec Hp, Hn, M;
      double kappa;
    } v;
    v.P0 = sym_from_vech(z.head(sym_var_count(n)), n).mat();
    v.Hp = z.segment(lay.hp_at(0), m);
    v.Hn = z.segment(lay.hn_at(0), m);
    v.M = z.segment(lay.m_at(0), m);
    v.kappa = z(lay.kappa_at());
    return v;
  };

  auto add_block = [&](const std::string& name, auto&& fn) {
    LMIBlock blk;
    blk.name = name;
    Vec z = Vec::Zero(nv);
    blk.F0 = fn(unpack(z));
    blk.coeff.reserve(nv);
    for (Eigen::Index i = 0; i < nv; ++i) {
      z(i) = 1.0;
      blk.coeff.push_back(fn(unpack(z)) - blk.F0);
      z(i) = 0.0;
    }
    prob.blocks.push_back(std::move(blk));
  };

  add_block("P0 - K^T Hn K >= 0", [&](const auto& v) -> Mat {
    return v.P0 - k.transpose() * v.Hn.asDiagonal() * k;
  });
  add_block("P0 + K^T H K - I >= 0", [&](const auto& v) -> Mat {
    return v.P0 + k.transpose() * Vec(v.Hp - v.Hn).asDiagonal() * k - eye_n;
  });
  add_block("kappa I - P0 - K^T H K >= 0", [&](const auto& v) -> Mat {
    return v.kappa * eye_n - v.P0 - k.transpose() * Vec(v.Hp - v.Hn).asDiagonal() * k;
  });
  add_block("2M + Omega - eps I >= 0", [&](const auto& v) -> Mat {
    const Mat hkb = Vec(v.Hp - v.Hn).asDiagonal() * (k * b);
    return 2.0 * Mat(v.M.asDiagonal()) + hkb + hkb.transpose() - eps_strict * eye_m;
  });
  add_block("-(P0 A0 + A0^T P0) >= 0", [&](const auto& v) -> Mat {
    return -(v.P0 * a + a.transpose() * v.P0);
  });
  add_block("Hp - eps I >= 0", [&](const auto& v) -> Mat {
    return Mat(v.Hp.asDiagonal()) - eps_strict * eye_m;
  });
  add_block("Hn >= 0", [&](const auto& v) -> Mat { return Mat(v.Hn.asDiagonal()); });
  add_block("M >= 0", [&](const auto& v) -> Mat { return Mat(v.M.asDiagonal()); });

  // Matching equalities P0 B - A0^T K^T H - K^T M = 0, entry by entry.
  {
    auto matching = [&](const Vec& z) -> Mat {
      const auto v = unpack(z);
      return v.P0 * b - a.transpose() * k.transpose() * Vec(v.Hp - v.Hn).asDiagonal() -
             k.transpose() * Mat(v.M.asDiagonal());
    };
    const Eigen::Index rows = n * m;
    Mat lhs(rows, nv);
    Vec z = Vec::Zero(nv);
    const Mat base = matching(z);
    for (Eigen::Index i = 0; i < nv; ++i) {
      z(i) = 1.0;
      const Mat di = matching(z) - base;
      z(i) = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) lhs(c * n + r, i) = di(r, c);
      }
    }
    Vec rhs(rows);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) rhs(c * n + r) = -base(r, c);
    }
    prob.equalities.lhs = std::move(lhs);
    prob.equalities.rhs = std::move(rhs);
  }

  // Hints: He(P0 A0) v = 0 for v spanning the imaginary-axis subspace.
  {
    const Mat vax = axis_subspace(a);
    if (vax.cols() > 0) {
      auto lyap = [&](const Vec& z) -> Mat {
        const auto v = unpack(z);
        return (v.P0 * a + a.transpose() * v.P0) * vax;
      };
      const Eigen::Index rows = n * vax.cols();
      Mat lhs(rows, nv);
      Vec z = Vec::Zero(nv);
      const Mat base = lyap(z);
      for (Eigen::Index i = 0; i < nv; ++i) {
        z(i) = 1.0;
        const Mat di = lyap(z) - base;
        z(i) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          for (Eigen::Index c = 0; c < vax.cols(); ++c) lhs(c * n + r, i) = di(r, c);
        }
      }
      Vec rhs(rows);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < vax.cols(); ++c) rhs(c * n + r) = -base(r, c);
      }
      prob.hints.lhs = std::move(lhs);
      prob.hints.rhs = std::move(rhs);
    }
  }

  Vec obj = Vec::Zero(nv);
  obj(lay.kappa_at()) = 1.0;
  prob.objective = std::move(obj);
  prob.validate();
  return prob;
}

/// Abstract conic backend: minimize a linear objective over affine
/// semidefinite blocks plus linear equalities, reporting
/// feasible/infeasible/indeterminate. Conformance is defined solely by
/// verify_solution.
class SDPBackend {
 public:
  virtual ~SDPBackend() = default;
  virtual SDPResult solve(const LMIProblem& problem) const = 0;
  virtual std::string name() const = 0;
};

/// Reference backend: log-det barrier path following on the max-t phase,
/// facial-reduction rounds for boundary-feasible programs, bisection on the
/// objective.
class BuiltinBarrierBackend : public SDPBackend {
 public:
  explicit BuiltinBarrierBackend(const SDPOptions& opt = {}) : opt_(opt) {}
  SDPResult solve(const LMIProblem& problem) const override { return sdp_solve(problem, opt_); }
  std::string name() const override { return "builtin-barrier"; }

 private:
  SDPOptions opt_;
};

struct VerificationEntry {
  std::string name;
  double value = 0.0;  // min eigenvalue (blocks) or residual norm (equalities)
  double scale = 1.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<VerificationEntry> entries;
  bool verified = false;            // every stored constraint re-checked
  bool has_replay = false;
  GASVerdict replay;                // certify_mi on the extracted certificate
  bool kernel_inclusion_ok = false; // informational, not part of `verified`
};

struct LMISolution {
  SDPStatus status = SDPStatus::kIndeterminate;
  Vec z;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double max_t = 0.0;
  int newton_steps = 0;
  int facial_rounds = 0;
  std::string message;
  VerificationReport verification;
};

/// Extracts the multi-input certificate from a solution vector, undoing the
/// time scaling on M.
inline MICertificate extract_certificate(const LMIProblem& prob, const Vec& z) {
  const LMIVariables v = lmi_unpack(prob, z);
  MICertificate cert;
  cert.P0 = v.P0;
  cert.Hp = v.Hp;
  cert.Hn = v.Hn;
  cert.M = prob.time_scale * v.M;
  return cert;
}

/// Independent re-check of every stored constraint (hints excluded) with
/// eigenvalue/residual tolerances, then a certify_mi replay on the extracted
/// certificate when the problem carries its system.
inline VerificationReport verify_solution(const LMIProblem& prob, const Vec& z,
                                          double tol = 1e-7) {
  prob.validate();
  VerificationReport rep;
  bool ok = true;
  for (const auto& b : prob.blocks) {
    VerificationEntry e;
    e.name = b.name;
    const SymMatrix f(b.eval(z));
    e.value = min_eig(f);
    e.scale = std::max(1.0, spectral_norm(f.mat()));
    e.pass = e.value >= -tol * e.scale;
    ok = ok && e.pass;
    rep.entries.push_back(std::move(e));
  }
  if (prob.equalities.rows() > 0) {
    VerificationEntry e;
    e.name = "matching equalities";
    e.value = (prob.equalities.lhs * z - prob.equalities.rhs).norm();
    e.scale = std::max(1.0, prob.equalities.lhs.norm() * z.norm() + prob.equalities.rhs.norm());
    e.pass = e.value <= tol * e.scale;
    ok = ok && e.pass;
    rep.entries.push_back(std::move(e));
  }
  rep.verified = ok;
  if (prob.has_system) {
    const MICertificate cert = extract_certificate(prob, z);
    rep.replay = certify_mi(prob.system, cert.P0, cert.Hp, cert.Hn);
    rep.has_replay = true;
    rep.kernel_inclusion_ok = kernel_inclusion(cert.P0, prob.system.A0, 1e-6);
  }
  return rep;
}

/// Runs a backend and always re-verifies its answer independently.
inline LMISolution solve_lmi(const LMIProblem& prob, const SDPBackend& backend,
                             double verify_tol = 1e-7) {
  const SDPResult res = backend.solve(prob);
  LMISolution sol;
  sol.status = res.status;
  sol.z = res.z;
  sol.max_t = res.max_t;
  sol.newton_steps = res.newton_steps;
  sol.facial_rounds = res.facial_rounds;
  sol.message = res.message;
  if (res.status == SDPStatus::kFeasible) {
    sol.verification = verify_solution(prob, res.z, verify_tol);
    if (prob.has_system) sol.kappa = lmi_unpack(prob, res.z).kappa;
  }
  return sol;
}

}  // namespace satcert
