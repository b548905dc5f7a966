#pragma once

#include <string>
#include <vector>

#include "satcert/linalg.hpp"

namespace satcert {

/// One eigenvalue cluster of a real matrix. Complex pairs are stored once
/// with im > 0 and a multiplicity counting both conjugates.
struct SpectralCluster {
  double re = 0.0;
  double im = 0.0;
  int multiplicity = 0;
  int max_block = 1;  // largest Jordan block size; 3 means ">= 3"
};

struct SpectralStructure {
  std::vector<SpectralCluster> clusters;
  bool has_open_rhp = false;
  bool origin_block_gt2 = false;
  bool imaginary_nonsimple = false;
  double tol_eig = 0.0;

  const SpectralCluster* zero_cluster() const {
    for (const auto& c : clusters) {
      if (std::abs(c.re) <= tol_eig && c.im <= tol_eig) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline int max_block_from_ranks(int n, int r1, int r2, int r3) {
  if (r1 == n) return 0;  // eigenvalue not actually present
  if (r1 == r2) return 1;
  if (r2 == r3) return 2;
  return 3;
}

// Rank with a sigma_max-relative cut plus an absolute floor: powers of the
// normalized annihilator can vanish identically, where a purely relative cut
// would count rounding noise as full rank.
inline int rank_rel_floored(const Mat& m, double rel, double floor_abs) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= floor_abs) return 0;
  const double cut = rel * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

// Rank chain of the annihilating factor for one cluster: (A - re I) for real
// clusters, (A^2 - 2 re A + |lambda|^2 I) for complex pairs. Never forms a
// literal Jordan decomposition.
inline int cluster_max_block(const Mat& a, double re, double im, double rank_tol) {
  const Eigen::Index n = a.rows();
  Mat m;
  if (im == 0.0) {
    m = a - re * Mat::Identity(n, n);
  } else {
    m = a * a - 2.0 * re * a + (re * re + im * im) * Mat::Identity(n, n);
  }
  const double s = std::max(1.0, spectral_norm(m));
  m /= s;
  const double floor_abs = 1e-10;
  const int r1 = rank_rel_floored(m, rank_tol, floor_abs);
  const Mat m2 = m * m;
  const int r2 = rank_rel_floored(m2, rank_tol, floor_abs);
  const int r3 = rank_rel_floored(m2 * m, rank_tol, floor_abs);
  return max_block_from_ranks(static_cast<int>(n), r1, r2, r3);
}

}  // namespace detail

/// Clusters the spectrum of A0 and determines per-cluster Jordan block bounds
/// via rank chains. Throws on clustering ambiguity (distinct clusters closer
/// than 10 * tol_eig).
///
/// The default radius must absorb the eps^(1/k) splitting of computed
/// eigenvalues of a defective block of size k; 1e-5 covers k <= 3 in double
/// precision at desk scale.
inline SpectralStructure spectral_structure(const Mat& a0, double tol_eig = -1.0) {
  if (a0.rows() != a0.cols()) throw std::invalid_argument("spectral_structure: not square");
  require_finite(a0, "spectral_structure");
  if (tol_eig < 0.0) tol_eig = 1e-5 * std::max(1.0, spectral_norm(a0));

  const CVec ev = eigenvalues_general(a0);
  const Eigen::Index n = ev.size();

  // Fold conjugates onto im >= 0 and greedily cluster within tol_eig.
  struct Point {
    double re, im;
    int count;
  };
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = ev(i).real();
    const double im = std::abs(ev(i).imag());
    bool merged = false;
    for (auto& p : pts) {
      if (std::hypot(p.re - re, p.im - im) <= tol_eig) {
        p.re = (p.re * p.count + re) / (p.count + 1);
        p.im = (p.im * p.count + im) / (p.count + 1);
        ++p.count;
        merged = true;
        break;
      }
    }
    if (!merged) pts.push_back({re, im, 1});
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (std::hypot(pts[i].re - pts[j].re, pts[i].im - pts[j].im) < 10.0 * tol_eig) {
        throw std::runtime_error(
            "spectral_structure: clustering ambiguity, two eigenvalue clusters "
            "within 10*tol_eig; refusing to guess");
      }
    }
  }

  SpectralStructure ss;
  ss.tol_eig = tol_eig;
  const double rank_tol = 1e-6;
  for (const auto& p : pts) {
    SpectralCluster c;
    c.re = p.re;
    // Snap near-axis clusters onto the axis; the classification below treats
    // |re| <= tol_eig as imaginary-axis anyway.
    c.im = (p.im <= tol_eig) ? 0.0 : p.im;
    c.multiplicity = p.count;
    c.max_block = detail::cluster_max_block(a0, c.re, c.im, rank_tol);
    if (c.max_block == 0) c.max_block = 1;
    ss.clusters.push_back(c);

    if (c.re > tol_eig) ss.has_open_rhp = true;
    const bool on_axis = std::abs(c.re) <= tol_eig;
    if (on_axis && c.im == 0.0 && c.max_block > 2) ss.origin_block_gt2 = true;
    if (on_axis && c.im > 0.0 && c.max_block > 1) ss.imaginary_nonsimple = true;
  }
  return ss;
}

/// Eligibility test: closed left-half-plane spectrum, origin Jordan blocks of
/// size at most 2, simple blocks elsewhere on the imaginary axis.
inline bool check_prop1(const Mat& a0, double tol_eig = -1.0) {
  const SpectralStructure ss = spectral_structure(a0, tol_eig);
  return !ss.has_open_rhp && !ss.origin_block_gt2 && !ss.imaginary_nonsimple;
}

/// True iff every kernel vector of P0 is killed by A0, tested as
/// rank([P0; A0] stacked) == rank(P0) with per-block normalization.
inline bool kernel_inclusion(const SymMatrix& p0, const Mat& a0, double tol = 1e-8) {
  const Eigen::Index n = a0.rows();
  if (p0.dim() != n) throw std::invalid_argument("kernel_inclusion: dimension mismatch");
  const double np = spectral_norm(p0.mat());
  const double na = spectral_norm(a0);
  Mat pn = np > 0.0 ? Mat(p0.mat() / np) : p0.mat();
  Mat an = na > 0.0 ? Mat(a0 / na) : a0;
  Mat stacked(2 * n, n);
  stacked.topRows(n) = pn;
  stacked.bottomRows(n) = an;
  return rank_svd(stacked, tol) == rank_svd(pn, tol);
}

/// A pair (P0, S0) realizing P0 >= 0, S0 = -(A0^T P0 + P0 A0) >= 0 and
/// ker P0 inside ker A0.
struct Condition4Certificate {
  SymMatrix P0;
  SymMatrix S0;
  bool kernel_ok = false;
  double transform_cond = 1.0;
};

/// Orthonormal basis of the generalized eigenspace of the imaginary-axis
/// spectrum (zero cluster plus oscillator pairs). Empty when A0 is Hurwitz.
inline Mat axis_subspace(const Mat& a0, double tol_eig = -1.0) {
  const SpectralStructure ss = spectral_structure(a0, tol_eig);
  const Eigen::Index n = a0.rows();
  const double scale = std::max(1.0, spectral_norm(a0));
  std::vector<Mat> pieces;
  for (const auto& c : ss.clusters) {
    if (std::abs(c.re) > ss.tol_eig) continue;
    Mat m;
    if (c.im == 0.0) {
      m = a0 * a0 / (scale * scale);
    } else {
      m = (a0 * a0 + c.im * c.im * Mat::Identity(n, n)) / (scale * scale);
    }
    pieces.push_back(kernel_basis(m, 1e-6));
  }
  if (pieces.empty()) return Mat(n, 0);
  Eigen::Index total = 0;
  for (const auto& p : pieces) total += p.cols();
  Mat joined(n, total);
  Eigen::Index at = 0;
  for (const auto& p : pieces) {
    joined.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return range_basis(joined, 1e-10);
}

/// Constructs P0 >= 0 with A0^T P0 + P0 A0 <= 0 and ker P0 inside ker A0,
/// following the invariant-subspace recipe: split the state space into the
/// Hurwitz subspace, the zero-eigenvalue subspace and one plane per
/// oscillator pair, pick the canonical block solution on each, and map back
/// through the (possibly non-orthogonal) transform.
inline Condition4Certificate synthesize_P0(const Mat& a0, double tol_eig = -1.0) {
  const SpectralStructure ss = spectral_structure(a0, tol_eig);
  if (ss.has_open_rhp || ss.origin_block_gt2 || ss.imaginary_nonsimple) {
    throw std::invalid_argument("synthesize_P0: A0 fails the structural eligibility test");
  }
  const Eigen::Index n = a0.rows();
  const double anorm = spectral_norm(a0);
  if (anorm == 0.0) {
    // A0 = 0: every state is an equilibrium and P0 = 0 works.
    Condition4Certificate cert{SymMatrix::Zero(n), SymMatrix::Zero(n), true, 1.0};
    return cert;
  }
  const double scale = std::max(1.0, anorm);

  // Subspace bases per cluster: the zero cluster via the kernel of A0^2
  // (covers the size-2 Jordan defect), each oscillator cluster as one
  // eigenvector plane per simple conjugate pair.
  Eigen::EigenSolver<Mat> es(a0, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("synthesize_P0: eigensolver failed");
  }
  std::vector<Mat> axis_bases;
  std::vector<bool> axis_is_plane;  // oscillator plane vs nilpotent zero block
  Mat annihilator = Mat::Identity(n, n);
  for (const auto& c : ss.clusters) {
    if (std::abs(c.re) > ss.tol_eig) continue;
    if (c.im == 0.0) {
      const Mat m = a0 * a0 / (scale * scale);
      Mat basis = kernel_basis(m, 1e-6);
      if (basis.cols() != c.multiplicity) {
        throw std::runtime_error("synthesize_P0: zero-cluster subspace dimension mismatch");
      }
      axis_bases.push_back(basis);
      axis_is_plane.push_back(false);
      annihilator = annihilator * m;
    } else {
      // One real plane per eigenvector of +i*beta; in the basis (Re v, Im v)
      // the restriction of A0 is the rotation [[0, beta], [-beta, 0]].
      int planes = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        if (lam.imag() <= 0.0) continue;
        if (std::hypot(lam.real() - c.re, lam.imag() - c.im) > 5.0 * ss.tol_eig) continue;
        Mat plane(n, 2);
        plane.col(0) = es.eigenvectors().col(i).real();
        plane.col(1) = es.eigenvectors().col(i).imag();
        axis_bases.push_back(plane);
        axis_is_plane.push_back(true);
        ++planes;
      }
      if (2 * planes != c.multiplicity) {
        throw std::runtime_error("synthesize_P0: oscillator cluster eigenvector count mismatch");
      }
      annihilator =
          annihilator * (a0 * a0 + c.im * c.im * Mat::Identity(n, n)) / (scale * scale);
    }
  }

  Eigen::Index n_axis = 0;
  for (const auto& b : axis_bases) n_axis += b.cols();
  const Eigen::Index n_h = n - n_axis;

  Mat transform(n, n);
  Eigen::Index at = 0;
  if (n_h > 0) {
    const Mat hur = range_basis(annihilator, 1e-8);
    if (hur.cols() != n_h) {
      throw std::runtime_error("synthesize_P0: Hurwitz subspace dimension mismatch");
    }
    transform.leftCols(n_h) = hur;
    at = n_h;
  }
  for (const auto& b : axis_bases) {
    transform.middleCols(at, b.cols()) = b;
    at += b.cols();
  }

  const double tcond = cond2(transform);
  if (!(tcond <= 1e8)) {
    throw std::runtime_error("synthesize_P0: ill-conditioned block transformation, cond = " +
                             std::to_string(tcond));
  }

  Eigen::PartialPivLU<Mat> tlu(transform);
  const Mat a_blk = tlu.solve(a0 * transform);

  Mat p_blk = Mat::Zero(n, n);
  at = 0;
  if (n_h > 0) {
    const Mat ah = a_blk.topLeftCorner(n_h, n_h);
    Mat ph = lyap_solve_hurwitz(ah).mat();
    ph /= spectral_norm(ph);
    p_blk.topLeftCorner(n_h, n_h) = ph;
    at = n_h;
  }
  for (std::size_t j = 0; j < axis_bases.size(); ++j) {
    const Eigen::Index d = axis_bases[j].cols();
    if (axis_is_plane[j]) {
      p_blk.block(at, at, d, d) = Mat::Identity(d, d);
    } else {
      // Nilpotent block with index <= 2: the projector onto range(N^T)
      // satisfies P N = 0 and ker P = ker N exactly.
      const Mat blk = a_blk.block(at, at, d, d);
      const Mat vr = range_basis(blk.transpose(), 1e-6);
      p_blk.block(at, at, d, d) = vr * vr.transpose();
    }
    at += d;
  }

  const Mat tinv = tlu.inverse();
  Mat p0 = tinv.transpose() * p_blk * tinv;
  const double pnorm = spectral_norm(p0);
  if (pnorm > 0.0) p0 /= pnorm;

  Condition4Certificate cert;
  cert.P0 = SymMatrix(p0);
  cert.S0 = SymMatrix(-(a0.transpose() * cert.P0.mat() + cert.P0.mat() * a0));
  cert.kernel_ok = kernel_inclusion(cert.P0, a0, 1e-8);
  cert.transform_cond = tcond;
  return cert;
}

}  // namespace satcert
