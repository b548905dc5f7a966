#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace satcert {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// Relative tolerance used by all definiteness tests unless the caller
// overrides it.
inline constexpr double kDefiniteTol = 1e-9;

inline bool all_finite(const Mat& a) { return a.allFinite(); }

inline void require_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

/// Largest singular value. Returns 0 for an empty matrix.
inline double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return a.jacobiSvd().singularValues()(0);
}

/// 2-norm condition number (sigma_max / sigma_min).
inline double cond2(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return s(0) / (s(s.size() - 1));
}

/// Symmetric matrix with exact entrywise symmetry, enforced on construction.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Mat& a) {
    if (a.rows() != a.cols() || a.rows() < 1) {
      throw std::invalid_argument("SymMatrix: matrix must be square, dim >= 1");
    }
    require_finite(a, "SymMatrix");
    m_ = 0.5 * (a + a.transpose());
    // Copy the upper triangle onto the lower one so entries match exactly,
    // not just up to rounding of the two averaged sums.
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < m_.cols(); ++j) {
        m_(j, i) = m_(i, j);
      }
    }
  }

  static SymMatrix Identity(Eigen::Index n) { return SymMatrix(Mat::Identity(n, n)); }
  static SymMatrix Zero(Eigen::Index n) { return SymMatrix(Mat::Zero(n, n)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Mat& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Mat m_;
};

struct EigResult {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // orthonormal columns, matching order
};

/// Symmetric eigendecomposition (tridiagonalization + implicit QL/QR via
/// Eigen's SelfAdjointEigenSolver). Eigenvalues ascending.
inline EigResult eig_sym(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s.mat());
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eig_sym: eigensolver failed to converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eig(const SymMatrix& s) { return eig_sym(s).eigenvalues(0); }
inline double max_eig(const SymMatrix& s) {
  const Vec ev = eig_sym(s).eigenvalues;
  return ev(ev.size() - 1);
}

/// Positive semidefinite within a relative margin: lambda_min >= -tol * max(1, |S|_2).
inline bool is_psd(const SymMatrix& s, double tol = kDefiniteTol) {
  if (tol < 0.0) throw std::invalid_argument("is_psd: negative tolerance");
  const Vec ev = eig_sym(s).eigenvalues;
  const double scale = std::max(1.0, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
  return ev(0) >= -tol * scale;
}

/// Positive definite with a strict relative margin: lambda_min >= +tol * max(1, |S|_2).
inline bool is_pd(const SymMatrix& s, double tol = kDefiniteTol) {
  if (tol < 0.0) throw std::invalid_argument("is_pd: negative tolerance");
  const Vec ev = eig_sym(s).eigenvalues;
  const double scale = std::max(1.0, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
  return ev(0) >= tol * scale;
}

/// Number of singular values exceeding tol * sigma_max.
inline int rank_svd(const Mat& m, double tol = 1e-10) {
  if (tol < 0.0) throw std::invalid_argument("rank_svd: negative tolerance");
  require_finite(m, "rank_svd");
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = tol * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

/// Orthonormal basis of ker(M), columns. Kernel dimension = cols - rank.
inline Mat kernel_basis(const Mat& m, double tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = tol * std::max(smax, 1e-300);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut && smax > 0.0) ++r;
  }
  return svd.matrixV().rightCols(m.cols() - r);
}

/// Orthonormal basis of range(M), columns.
inline Mat range_basis(const Mat& m, double tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (smax > 0.0 && sv(i) > tol * smax) ++r;
  }
  return svd.matrixU().leftCols(r);
}

/// Eigenvalues of a general real square matrix.
inline CVec eigenvalues_general(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues_general: not square");
  require_finite(a, "eigenvalues_general");
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues_general: eigensolver failed");
  }
  return es.eigenvalues();
}

inline bool is_hurwitz(const Mat& a, double tol = kDefiniteTol) {
  const CVec ev = eigenvalues_general(a);
  const double scale = std::max(1.0, spectral_norm(a));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() >= -tol * scale) return false;
  }
  return true;
}

/// Solves A^T P + P A = -I for Hurwitz A via the Kronecker-product linear
/// system; throws if A is not Hurwitz or the residual exceeds 1e-8.
inline SymMatrix lyap_solve_hurwitz(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("lyap_solve_hurwitz: not square");
  require_finite(a, "lyap_solve_hurwitz");
  if (!is_hurwitz(a)) {
    throw std::invalid_argument("lyap_solve_hurwitz: A is not Hurwitz");
  }
  const Eigen::Index n = a.rows();
  Mat big = Mat::Zero(n * n, n * n);
  // vec(A^T P) = (I kron A^T) vec(P), vec(P A) = (A^T kron I) vec(P).
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        big(j * n + i, j * n + k) += a(k, i);  // (I kron A^T)
        big(j * n + i, k * n + i) += a(k, j);  // (A^T kron I)
      }
    }
  }
  Vec rhs = Vec::Zero(n * n);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i * n + i) = -1.0;
  Vec sol = big.fullPivLu().solve(rhs);
  Mat p(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) p(i, j) = sol(j * n + i);
  }
  SymMatrix res(p);
  const double residual = (a.transpose() * res.mat() + res.mat() * a + Mat::Identity(n, n)).norm();
  if (residual > 1e-8 * std::max(1.0, res.mat().norm())) {
    throw std::runtime_error("lyap_solve_hurwitz: residual " + std::to_string(residual));
  }
  return res;
}

}  // namespace satcert
