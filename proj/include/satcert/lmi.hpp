#pragma once

#include <string>
#include <vector>

#include "satcert/system.hpp"

namespace satcert {

/// One affine-in-variables semidefinite constraint F0 + sum z_i Fi >= 0.
struct LMIBlock {
  std::string name;
  Mat F0;
  std::vector<Mat> coeff;  // one dim x dim matrix per decision variable

  Eigen::Index dim() const { return F0.rows(); }

  Mat eval(const Vec& z) const {
    Mat f = F0;
    for (std::size_t i = 0; i < coeff.size(); ++i) f += z(static_cast<Eigen::Index>(i)) * coeff[i];
    return f;
  }
};

/// Linear equalities lhs * z = rhs.
struct LMIEqualities {
  Mat lhs;  // rows x nvars (0 x nvars when absent)
  Vec rhs;

  Eigen::Index rows() const { return lhs.rows(); }
};

/// Assembled semidefinite feasibility/minimization problem: affine blocks,
/// linear equalities, optional linear objective. `hints` carries implied
/// (redundant) equalities a solver may exploit; verifiers skip them.
struct LMIProblem {
  std::vector<std::string> var_names;
  std::vector<LMIBlock> blocks;
  LMIEqualities equalities;
  LMIEqualities hints;   // implied by feasibility; safe to add, never checked
  Vec objective;         // empty => pure feasibility
  double eps_strict = 1e-6;

  // Metadata linking back to the analyzed loop (absent for generic problems).
  bool has_system = false;
  SaturatedSystem system;         // original data
  SaturatedSystem scaled_system;  // what the constraints are written against
  double time_scale = 1.0;        // A0_scaled = A0 / time_scale

  Eigen::Index num_vars() const { return static_cast<Eigen::Index>(var_names.size()); }

  void validate() const {
    const auto nv = num_vars();
    for (const auto& b : blocks) {
      if (static_cast<Eigen::Index>(b.coeff.size()) != nv) {
        throw std::invalid_argument("LMIProblem: block '" + b.name + "' coefficient count");
      }
      if (b.F0.rows() != b.F0.cols()) {
        throw std::invalid_argument("LMIProblem: block '" + b.name + "' not square");
      }
      for (const auto& c : b.coeff) {
        if (c.rows() != b.F0.rows() || c.cols() != b.F0.cols()) {
          throw std::invalid_argument("LMIProblem: block '" + b.name + "' coefficient shape");
        }
      }
    }
    if (equalities.rows() > 0 && equalities.lhs.cols() != nv) {
      throw std::invalid_argument("LMIProblem: equality column count");
    }
    if (hints.rows() > 0 && hints.lhs.cols() != nv) {
      throw std::invalid_argument("LMIProblem: hint column count");
    }
    if (objective.size() != 0 && objective.size() != nv) {
      throw std::invalid_argument("LMIProblem: objective size");
    }
  }
};

/// Symmetric-matrix variable layout helpers: vech ordering (i <= j), row by row.
inline Eigen::Index sym_var_count(Eigen::Index n) { return n * (n + 1) / 2; }

inline Eigen::Index sym_var_index(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline SymMatrix sym_from_vech(const Vec& v, Eigen::Index n) {
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      m(i, j) = v(sym_var_index(i, j, n));
      m(j, i) = m(i, j);
    }
  }
  return SymMatrix(m);
}

}  // namespace satcert
