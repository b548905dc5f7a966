#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "satcert/lmi.hpp"

namespace satcert {

enum class SDPStatus { kFeasible, kInfeasible, kIndeterminate };

inline const char* to_string(SDPStatus s) {
  switch (s) {
    case SDPStatus::kFeasible: return "feasible";
    case SDPStatus::kInfeasible: return "infeasible";
    case SDPStatus::kIndeterminate: return "indeterminate";
  }
  return "?";
}

struct SDPOptions {
  double eps_feasible = 1e-8;    // max-t level accepted as (boundary) feasible
  double eps_infeasible = 1e-6;  // certified-infeasible margin on the t bound
  double facial_tol = 1e-7;      // relative eigenvalue cut for forced kernels
  int max_facial_rounds = 5;
  int max_newton_total = 500;
  double pos_exit = 1e-4;        // stop maximizing t once this level is reached
  double objective_rel_gap = 0.02;
  double barrier_eta_factor = 10.0;
  double newton_tol = 1e-10;
};

struct SDPResult {
  SDPStatus status = SDPStatus::kIndeterminate;
  Vec z;
  double max_t = -std::numeric_limits<double>::infinity();
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  int newton_steps = 0;
  int facial_rounds = 0;
  bool heuristic_cuts = false;  // infeasibility verdicts are downgraded then
  std::string message;
};

namespace sdp_detail {

struct WorkBlock {
  std::string name;
  Mat F0;                  // in full z coordinates
  std::vector<Mat> coeff;  // per z variable
  Mat basis;               // current deflation basis (columns orthonormal)

  Eigen::Index dim() const { return basis.cols(); }

  Mat eval_reduced(const Vec& z) const {
    Mat f = F0;
    for (std::size_t i = 0; i < coeff.size(); ++i) f += z(static_cast<Eigen::Index>(i)) * coeff[i];
    return basis.transpose() * f * basis;
  }
};

struct Reduction {
  Vec z_p;           // particular equality solution
  Mat null_basis;    // z = z_p + N y
  bool consistent = true;
};

inline Reduction eliminate_equalities(Eigen::Index nvars, const Mat& lhs, const Vec& rhs) {
  Reduction r;
  if (lhs.rows() == 0) {
    r.z_p = Vec::Zero(nvars);
    r.null_basis = Mat::Identity(nvars, nvars);
    return r;
  }
  r.z_p = lhs.completeOrthogonalDecomposition().solve(rhs);
  const double resid = (lhs * r.z_p - rhs).norm();
  const double scale = std::max({1.0, rhs.norm(), lhs.norm() * r.z_p.norm()});
  if (resid > 1e-8 * scale) {
    r.consistent = false;
    return r;
  }
  r.null_basis = kernel_basis(lhs, 1e-11);
  return r;
}

// Blocks expressed in the reduced coordinates y (and the extra slack t).
struct ReducedBlock {
  std::string name;
  Mat F0;
  std::vector<Mat> coeff;  // per y variable
  Eigen::Index dim() const { return F0.rows(); }

  Mat eval(const Vec& y) const {
    Mat f = F0;
    for (std::size_t i = 0; i < coeff.size(); ++i) f += y(static_cast<Eigen::Index>(i)) * coeff[i];
    return f;
  }
};

struct MaxTOutcome {
  double t = -std::numeric_limits<double>::infinity();
  Vec y;
  bool infeasible_certified = false;
  bool newton_capped = false;
  int newton_steps = 0;
};

/// Path-following barrier for: maximize t s.t. F_j(y) - t I >= 0.
/// The sup is attained (callers cap runaway directions); iterates stay
/// strictly feasible in the shifted blocks.
inline MaxTOutcome solve_max_t(const std::vector<ReducedBlock>& blocks, Eigen::Index p,
                               const SDPOptions& opt, int newton_budget) {
  MaxTOutcome out;
  out.y = Vec::Zero(p);

  double nu = 0.0;
  for (const auto& b : blocks) nu += static_cast<double>(b.dim());
  if (blocks.empty()) {  // vacuously feasible, any y
    out.t = std::numeric_limits<double>::infinity();
    return out;
  }

  double t = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) t = std::min(t, min_eig(SymMatrix(b.eval(out.y))));
  t -= 1.0;

  const Eigen::Index q = p + 1;  // variables: y then t
  Vec w(q);
  w.head(p) = out.y;
  w(p) = t;

  auto shifted = [&](const Vec& ww, std::size_t j) -> Mat {
    const auto& b = blocks[j];
    Mat f = b.eval(ww.head(p));
    f -= ww(p) * Mat::Identity(b.dim(), b.dim());
    return f;
  };
  auto all_pd = [&](const Vec& ww) -> bool {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      Eigen::LLT<Mat> llt(SymMatrix(shifted(ww, j)).mat());
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  };
  auto barrier_value = [&](const Vec& ww, double eta) -> double {
    double val = -eta * ww(p);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      Eigen::LLT<Mat> llt(SymMatrix(shifted(ww, j)).mat());
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Mat l = llt.matrixL();
      for (Eigen::Index i = 0; i < l.rows(); ++i) val -= 2.0 * std::log(l(i, i));
    }
    return val;
  };

  const double gap_target = 0.1 * opt.eps_feasible;
  const double eta_max = std::max(1.0, nu / gap_target);
  double eta = 1.0;

  while (true) {
    // Center at the current eta.
    for (int it = 0; it < 50; ++it) {
      if (out.newton_steps >= newton_budget) {
        out.newton_capped = true;
        break;
      }
      Vec grad = Vec::Zero(q);
      Mat hess = Mat::Zero(q, q);
      grad(p) = -eta;
      bool recovered = false;
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        const auto& b = blocks[j];
        const Eigen::Index d = b.dim();
        Eigen::LLT<Mat> llt(SymMatrix(shifted(w, j)).mat());
        if (llt.info() != Eigen::Success) {
          // Fallen off the cone (should not happen): restart t below the
          // current minimum eigenvalue.
          double tmin = std::numeric_limits<double>::infinity();
          for (std::size_t jj = 0; jj < blocks.size(); ++jj) {
            tmin = std::min(tmin, min_eig(SymMatrix(blocks[jj].eval(w.head(p)))));
          }
          w(p) = tmin - 1.0;
          recovered = true;
          break;
        }
        const Mat ident = Mat::Identity(d, d);
        const Mat ginv = llt.solve(ident);
        std::vector<Mat> gf(q);
        for (Eigen::Index k = 0; k < p; ++k) gf[k] = ginv * b.coeff[k];
        gf[p] = -ginv;
        for (Eigen::Index k = 0; k < q; ++k) {
          grad(k) -= gf[k].trace();
          for (Eigen::Index l = k; l < q; ++l) {
            const double hkl = (gf[k].array() * gf[l].transpose().array()).sum();
            hess(k, l) += hkl;
            if (l != k) hess(l, k) += hkl;
          }
        }
      }
      if (recovered) continue;

      Eigen::LDLT<Mat> ldlt(hess);
      Vec dir = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !dir.allFinite()) {
        hess += 1e-10 * std::max(1.0, hess.trace()) * Mat::Identity(q, q);
        dir = hess.ldlt().solve(-grad);
        if (!dir.allFinite()) {
          out.newton_capped = true;
          break;
        }
      }
      const double decrement = -grad.dot(dir);
      ++out.newton_steps;
      if (decrement <= 0.0) break;

      double alpha = 1.0;
      while (alpha > 1e-14 && !all_pd(w + alpha * dir)) alpha *= 0.7;
      const double base = barrier_value(w, eta);
      while (alpha > 1e-14 &&
             barrier_value(w + alpha * dir, eta) > base + 0.01 * alpha * grad.dot(dir)) {
        alpha *= 0.5;
      }
      if (alpha <= 1e-14) break;
      w += alpha * dir;
      if (decrement / 2.0 < opt.newton_tol) break;
    }

    t = w(p);
    if (t >= opt.pos_exit) break;  // comfortably strictly feasible
    const double t_upper = t + nu / eta;
    if (t_upper < -opt.eps_infeasible) {
      out.infeasible_certified = true;
      break;
    }
    if (out.newton_capped) break;
    if (eta >= eta_max) break;
    eta = std::min(eta * opt.barrier_eta_factor, eta_max);
  }

  out.t = w(p);
  out.y = w.head(p);
  return out;
}

}  // namespace sdp_detail

/// Feasibility of {blocks(z) >= 0, eq z = rhs} by equality elimination,
/// max-t barrier and facial-reduction rounds. Boundary-feasible instances
/// (empty interior, the normal case for marginally stable plants) terminate
/// with detected forced kernels turned into equalities.
inline SDPResult sdp_solve_feasibility(const LMIProblem& prob, const SDPOptions& opt = {}) {
  prob.validate();
  const Eigen::Index nv = prob.num_vars();

  std::vector<sdp_detail::WorkBlock> work;
  for (const auto& b : prob.blocks) {
    sdp_detail::WorkBlock wb{b.name, b.F0, b.coeff, Mat::Identity(b.dim(), b.dim())};
    work.push_back(std::move(wb));
  }

  Mat eq_lhs(0, nv);
  Vec eq_rhs(0);
  auto append_rows = [&](const Mat& lhs, const Vec& rhs) {
    Mat nl(eq_lhs.rows() + lhs.rows(), nv);
    Vec nr(eq_rhs.size() + rhs.size());
    nl.topRows(eq_lhs.rows()) = eq_lhs;
    nl.bottomRows(lhs.rows()) = lhs;
    nr.head(eq_rhs.size()) = eq_rhs;
    nr.tail(rhs.size()) = rhs;
    eq_lhs = std::move(nl);
    eq_rhs = std::move(nr);
  };
  if (prob.equalities.rows() > 0) append_rows(prob.equalities.lhs, prob.equalities.rhs);
  if (prob.hints.rows() > 0) append_rows(prob.hints.lhs, prob.hints.rhs);

  SDPResult res;
  int newton_budget = opt.max_newton_total;

  for (int round = 0; round <= opt.max_facial_rounds; ++round) {
    res.facial_rounds = round;
    const sdp_detail::Reduction red = sdp_detail::eliminate_equalities(nv, eq_lhs, eq_rhs);
    if (!red.consistent) {
      res.status = res.heuristic_cuts ? SDPStatus::kIndeterminate : SDPStatus::kInfeasible;
      res.message = "equalities inconsistent";
      return res;
    }
    const Eigen::Index p = red.null_basis.cols();

    // Project blocks into the reduced coordinates, dropping deflated-away and
    // constant blocks (a constant block violating psd is a sound refutation).
    std::vector<sdp_detail::ReducedBlock> reduced;
    std::vector<std::size_t> reduced_to_work;
    for (std::size_t j = 0; j < work.size(); ++j) {
      const auto& wb = work[j];
      if (wb.basis.cols() == 0) continue;
      sdp_detail::ReducedBlock rb;
      rb.name = wb.name;
      Mat f = wb.F0;
      for (Eigen::Index i = 0; i < nv; ++i) f += red.z_p(i) * wb.coeff[i];
      rb.F0 = wb.basis.transpose() * f * wb.basis;
      rb.coeff.resize(p);
      double coeff_norm = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        Mat c = Mat::Zero(wb.F0.rows(), wb.F0.cols());
        for (Eigen::Index i = 0; i < nv; ++i) {
          const double nik = red.null_basis(i, k);
          if (nik != 0.0) c += nik * wb.coeff[i];
        }
        rb.coeff[k] = wb.basis.transpose() * c * wb.basis;
        coeff_norm += rb.coeff[k].norm();
      }
      if (coeff_norm <= 1e-13 * std::max(1.0, rb.F0.norm())) {
        const double me = min_eig(SymMatrix(rb.F0));
        if (me < -1e-9 * std::max(1.0, rb.F0.norm())) {
          res.status = res.heuristic_cuts ? SDPStatus::kIndeterminate : SDPStatus::kInfeasible;
          res.message = "constant block '" + rb.name + "' violates psd";
          return res;
        }
        continue;  // constant and satisfied
      }
      reduced.push_back(std::move(rb));
      reduced_to_work.push_back(j);
    }

    const sdp_detail::MaxTOutcome mt = sdp_detail::solve_max_t(reduced, p, opt, newton_budget);
    newton_budget -= mt.newton_steps;
    res.newton_steps += mt.newton_steps;
    res.z = red.z_p + red.null_basis * mt.y;
    res.max_t = mt.t;

    if (mt.t >= opt.eps_feasible) {
      res.status = SDPStatus::kFeasible;
      return res;
    }
    if (mt.infeasible_certified) {
      res.status = res.heuristic_cuts ? SDPStatus::kIndeterminate : SDPStatus::kInfeasible;
      res.message = "max-t bounded below the infeasibility margin";
      return res;
    }
    if (mt.newton_capped || newton_budget <= 0) {
      res.status = mt.t >= -opt.eps_feasible ? SDPStatus::kFeasible : SDPStatus::kIndeterminate;
      res.message = "newton budget exhausted";
      return res;
    }

    // Boundary regime: harvest near-null eigenvectors as forced-kernel cuts.
    Mat cut_lhs(0, nv);
    Vec cut_rhs(0);
    int cuts = 0;
    for (std::size_t r = 0; r < reduced.size(); ++r) {
      auto& wb = work[reduced_to_work[r]];
      const Mat fval = reduced[r].eval(mt.y);
      const EigResult eg = eig_sym(SymMatrix(fval));
      const double scale =
          std::max(1.0, std::max(std::abs(eg.eigenvalues(0)),
                                 std::abs(eg.eigenvalues(eg.eigenvalues.size() - 1))));
      std::vector<Eigen::Index> null_idx;
      for (Eigen::Index i = 0; i < eg.eigenvalues.size(); ++i) {
        if (eg.eigenvalues(i) <= opt.facial_tol * scale) null_idx.push_back(i);
      }
      if (null_idx.empty()) continue;
      Mat vfull(wb.F0.rows(), static_cast<Eigen::Index>(null_idx.size()));
      for (std::size_t c = 0; c < null_idx.size(); ++c) {
        vfull.col(static_cast<Eigen::Index>(c)) = wb.basis * eg.eigenvectors.col(null_idx[c]);
      }
      // Equalities F(z) v = 0 for each detected v.
      for (Eigen::Index c = 0; c < vfull.cols(); ++c) {
        const Vec v = vfull.col(c);
        Mat rows(wb.F0.rows(), nv);
        for (Eigen::Index i = 0; i < nv; ++i) rows.col(i) = wb.coeff[i] * v;
        Mat nl(cut_lhs.rows() + rows.rows(), nv);
        Vec nr(cut_rhs.size() + rows.rows());
        nl.topRows(cut_lhs.rows()) = cut_lhs;
        nl.bottomRows(rows.rows()) = rows;
        nr.head(cut_rhs.size()) = cut_rhs;
        nr.tail(rows.rows()) = -(wb.F0 * v);
        cut_lhs = std::move(nl);
        cut_rhs = std::move(nr);
        ++cuts;
      }
      // Deflate the block onto the orthogonal complement of the cuts.
      const Mat proj = wb.basis - vfull * (vfull.transpose() * wb.basis);
      wb.basis = range_basis(proj, 1e-8);
    }

    if (cuts == 0) {
      res.status = mt.t >= -opt.eps_feasible ? SDPStatus::kFeasible : SDPStatus::kIndeterminate;
      if (res.status == SDPStatus::kFeasible) res.message = "boundary-feasible";
      return res;
    }
    res.heuristic_cuts = true;
    append_rows(cut_lhs, cut_rhs);
  }

  res.status = res.max_t >= -opt.eps_feasible ? SDPStatus::kFeasible : SDPStatus::kIndeterminate;
  res.message = "facial rounds exhausted";
  return res;
}

/// Full solve: feasibility, then linear-objective minimization by bisection
/// on a cap constraint (per the analysis program's kappa minimization).
inline SDPResult sdp_solve(const LMIProblem& prob, const SDPOptions& opt = {}) {
  prob.validate();
  if (prob.objective.size() == 0) return sdp_solve_feasibility(prob, opt);

  const Vec c = prob.objective;
  auto with_cap = [&](double u) -> LMIProblem {
    LMIProblem capped = prob;
    LMIBlock cap;
    cap.name = "objective cap";
    cap.F0 = Mat::Constant(1, 1, u);
    for (Eigen::Index i = 0; i < prob.num_vars(); ++i) {
      cap.coeff.push_back(Mat::Constant(1, 1, -c(i)));
    }
    capped.blocks.push_back(std::move(cap));
    capped.objective = Vec();
    return capped;
  };

  SDPResult best;
  bool have = false;
  for (double cap : {1e4, 1e6, 1e8}) {
    best = sdp_solve_feasibility(with_cap(cap), opt);
    if (best.status == SDPStatus::kFeasible) {
      have = true;
      break;
    }
  }
  if (!have) {
    best.message += " (objective cap ladder exhausted at 1e8)";
    return best;
  }

  double u_hi = c.dot(best.z);
  SDPResult best_z = best;

  // Hunt for an infeasible lower bracket, then bisect.
  double step = std::max(1.0, 0.25 * std::abs(u_hi));
  double u_lo = u_hi;
  while (true) {
    const double u_try = u_hi - step;
    const SDPResult r = sdp_solve_feasibility(with_cap(u_try), opt);
    if (r.status == SDPStatus::kFeasible) {
      u_hi = c.dot(r.z);
      best_z = r;
      step *= 2.0;
    } else {
      u_lo = u_try;
      break;
    }
    if (u_hi < -1e9) break;  // unbounded below guard
  }
  int guard = 0;
  while (u_hi - u_lo > opt.objective_rel_gap * std::max(1.0, std::abs(u_hi)) && guard++ < 60) {
    const double mid = 0.5 * (u_hi + u_lo);
    const SDPResult r = sdp_solve_feasibility(with_cap(mid), opt);
    if (r.status == SDPStatus::kFeasible) {
      u_hi = std::min(mid, c.dot(r.z));
      best_z = r;
    } else {
      u_lo = mid;
    }
  }

  best_z.objective_value = c.dot(best_z.z);
  return best_z;
}

}  // namespace satcert
