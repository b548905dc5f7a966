#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include "satcert/linalg.hpp"

namespace satcert {

/// Per-channel saturation bounds with lower[i] < 0 < upper[i].
struct SatLimits {
  Vec lower;
  Vec upper;

  static SatLimits unit(Eigen::Index m) {
    SatLimits l;
    l.lower = Vec::Constant(m, -1.0);
    l.upper = Vec::Constant(m, 1.0);
    return l;
  }

  static SatLimits symmetric(const Vec& level) {
    SatLimits l;
    l.lower = -level;
    l.upper = level;
    l.validate();
    return l;
  }

  Eigen::Index channels() const { return lower.size(); }

  bool symmetric_limits(double tol = 1e-12) const {
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      const double scale = std::max(1.0, std::abs(upper(i)));
      if (std::abs(upper(i) + lower(i)) > tol * scale) return false;
    }
    return true;
  }

  bool unit_limits(double tol = 1e-12) const {
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (std::abs(upper(i) - 1.0) > tol || std::abs(lower(i) + 1.0) > tol) return false;
    }
    return true;
  }

  void validate() const {
    if (lower.size() != upper.size()) {
      throw std::invalid_argument("SatLimits: lower/upper size mismatch");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(lower(i) < 0.0 && 0.0 < upper(i))) {
        throw std::invalid_argument("SatLimits: channel " + std::to_string(i) +
                                    " must satisfy lower < 0 < upper");
      }
    }
  }
};

/// Componentwise clamp of u to the actuator limits.
inline Vec sat(const Vec& u, const SatLimits& limits) {
  if (u.size() != limits.channels()) throw std::invalid_argument("sat: dimension mismatch");
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    out(i) = std::clamp(u(i), limits.lower(i), limits.upper(i));
  }
  return out;
}

/// Deadzone dz(u) = u - sat(u); exactly zero inside the limits.
inline Vec dz(const Vec& u, const SatLimits& limits) {
  return u - sat(u, limits);
}

/// Saturated linear feedback loop  xdot = A0 x - B sat(K x).
struct SaturatedSystem {
  Mat A0;  // n x n
  Mat B;   // n x m
  Mat K;   // m x n
  SatLimits limits;

  Eigen::Index n() const { return A0.rows(); }
  Eigen::Index m() const { return B.cols(); }

  void validate() const {
    if (A0.rows() != A0.cols()) throw std::invalid_argument("SaturatedSystem: A0 must be square");
    if (B.rows() != A0.rows()) throw std::invalid_argument("SaturatedSystem: B row count != n");
    if (K.cols() != A0.rows() || K.rows() != B.cols()) {
      throw std::invalid_argument("SaturatedSystem: K must be m x n");
    }
    require_finite(A0, "A0");
    require_finite(B, "B");
    require_finite(K, "K");
    if (limits.channels() != B.cols()) {
      throw std::invalid_argument("SaturatedSystem: limits channel count != m");
    }
    limits.validate();
  }
};

inline SaturatedSystem make_system(const Mat& a0, const Mat& b, const Mat& k) {
  SaturatedSystem s{a0, b, k, SatLimits::unit(b.cols())};
  s.validate();
  return s;
}

inline SaturatedSystem make_system(const Mat& a0, const Mat& b, const Mat& k,
                                   const SatLimits& lim) {
  SaturatedSystem s{a0, b, k, lim};
  s.validate();
  return s;
}

/// Right-hand side A0 x - B sat(K x), equal to (A0 - B K) x + B dz(K x).
inline Vec closed_loop_rhs(const SaturatedSystem& sys, const Vec& x) {
  return sys.A0 * x - sys.B * sat(sys.K * x, sys.limits);
}

inline Mat acl(const SaturatedSystem& sys) { return sys.A0 - sys.B * sys.K; }

inline bool is_acl_hurwitz(const SaturatedSystem& sys, double tol = kDefiniteTol) {
  return is_hurwitz(acl(sys), tol);
}

/// Global Lipschitz constant bound |A0| + |B||K| of the closed-loop field.
inline double rhs_lipschitz_bound(const SaturatedSystem& sys) {
  return spectral_norm(sys.A0) + spectral_norm(sys.B) * spectral_norm(sys.K);
}

/// Rescales a symmetric-limit system to unit limits: B' = B diag(L),
/// K' = diag(1/L) K. Trajectories are unchanged. Throws on asymmetric limits.
inline SaturatedSystem to_unit_limits(const SaturatedSystem& sys) {
  if (!sys.limits.symmetric_limits()) {
    throw std::invalid_argument(
        "to_unit_limits: asymmetric saturation limits are not supported by the "
        "certificate constructions");
  }
  const Vec level = sys.limits.upper;
  SaturatedSystem out = sys;
  out.B = sys.B * level.asDiagonal();
  out.K = level.cwiseInverse().asDiagonal() * sys.K;
  out.limits = SatLimits::unit(sys.m());
  return out;
}

}  // namespace satcert
