#pragma once

// Symmetric tridiagonal eigenvalue engine: Sturm-sequence counting,
// bisection for indexed eigenvalues, inverse iteration for eigenvectors.
//
// Bisection is used instead of QR because callers ask for the k-th
// eigenvalue by index (min-max numbering) and want the Sturm certificate.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "conespec/errors.hpp"

namespace conespec {

template <typename Scalar>
struct SymTridiag {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector diag;
  Vector offdiag;  // length size() - 1

  SymTridiag() = default;
  SymTridiag(Vector d, Vector e) : diag(std::move(d)), offdiag(std::move(e)) {
    if (diag.size() < 1 || offdiag.size() != diag.size() - 1) {
      throw InvalidParameter("SymTridiag: need M >= 1 diagonal and M-1 off-diagonal entries");
    }
    if (!diag.allFinite() || !offdiag.allFinite()) {
      throw InvalidParameter("SymTridiag: entries must be finite");
    }
  }

  Eigen::Index size() const { return diag.size(); }

  /// Max-row-sum norm (an upper bound for the spectral norm).
  Scalar norm_inf() const {
    Scalar best = 0;
    const Eigen::Index m = size();
    for (Eigen::Index i = 0; i < m; ++i) {
      Scalar s = std::abs(diag[i]);
      if (i > 0) s += std::abs(offdiag[i - 1]);
      if (i + 1 < m) s += std::abs(offdiag[i]);
      best = std::max(best, s);
    }
    return best;
  }

  Vector multiply(const Vector& v) const {
    const Eigen::Index m = size();
    Vector out = diag.cwiseProduct(v);
    if (m > 1) {
      out.head(m - 1) += offdiag.cwiseProduct(v.tail(m - 1));
      out.tail(m - 1) += offdiag.cwiseProduct(v.head(m - 1));
    }
    return out;
  }

  /// Leading principal submatrix of order k.
  SymTridiag leading(Eigen::Index k) const {
    return SymTridiag(diag.head(k), offdiag.head(std::max<Eigen::Index>(k - 1, 0)));
  }
};

using SymTridiagd = SymTridiag<double>;

/// Gershgorin interval containing the whole spectrum.
template <typename Scalar>
std::pair<Scalar, Scalar> gershgorin_bounds(const SymTridiag<Scalar>& t) {
  const Eigen::Index m = t.size();
  Scalar lo = std::numeric_limits<Scalar>::max();
  Scalar hi = std::numeric_limits<Scalar>::lowest();
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar r = 0;
    if (i > 0) r += std::abs(t.offdiag[i - 1]);
    if (i + 1 < m) r += std::abs(t.offdiag[i]);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  return {lo, hi};
}

/// Number of eigenvalues strictly below x (negative pivots of the LDL^T
/// factorization of T - x), with the usual pivot guard against underflow.
template <typename Scalar>
Eigen::Index sturm_count(const SymTridiag<Scalar>& t, Scalar x) {
  const Eigen::Index m = t.size();
  Scalar emax2 = 0;
  for (Eigen::Index i = 0; i + 1 < m; ++i) emax2 = std::max(emax2, t.offdiag[i] * t.offdiag[i]);
  const Scalar pivmin = std::numeric_limits<Scalar>::min() * std::max<Scalar>(Scalar(1), emax2);
  Eigen::Index count = 0;
  Scalar q = t.diag[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (Eigen::Index i = 1; i < m; ++i) {
    const Scalar e = t.offdiag[i - 1];
    q = t.diag[i] - x - e * e / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

/// k-th smallest eigenvalue (1-based) by bisection to absolute width abs_tol.
template <typename Scalar>
Scalar eigenvalue(const SymTridiag<Scalar>& t, Eigen::Index k, Scalar abs_tol,
                  int max_iterations = 400) {
  if (k < 1 || k > t.size()) throw InvalidParameter("eigenvalue: index out of range");
  if (!(abs_tol > 0)) throw InvalidParameter("eigenvalue: abs_tol must be positive");
  auto [lo, hi] = gershgorin_bounds(t);
  const Scalar pad = std::numeric_limits<Scalar>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + abs_tol;
  lo -= pad;
  hi += pad;
  for (int it = 0; it < max_iterations; ++it) {
    if (hi - lo <= abs_tol) return Scalar(0.5) * (lo + hi);
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval cannot shrink further
    if (sturm_count(t, mid) >= k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw NumericalFailure("eigenvalue: bisection tolerance unreachable");
}

/// k-th smallest eigenvalue bisected until the bracket is below
/// max(abs_floor, rel_tol * |lambda|). Suited to graded matrices whose norm
/// dwarfs the eigenvalues of interest.
template <typename Scalar>
Scalar eigenvalue_rel(const SymTridiag<Scalar>& t, Eigen::Index k, Scalar rel_tol, Scalar abs_floor,
                      int max_iterations = 400) {
  if (k < 1 || k > t.size()) throw InvalidParameter("eigenvalue_rel: index out of range");
  if (!(rel_tol > 0) || !(abs_floor > 0)) throw InvalidParameter("eigenvalue_rel: tolerances must be positive");
  auto [lo, hi] = gershgorin_bounds(t);
  const Scalar pad = std::numeric_limits<Scalar>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + abs_floor;
  lo -= pad;
  hi += pad;
  for (int it = 0; it < max_iterations; ++it) {
    const Scalar width = std::max(abs_floor, rel_tol * std::max(std::abs(lo), std::abs(hi)));
    if (hi - lo <= width) return Scalar(0.5) * (lo + hi);
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;  // adjacent floating-point numbers
    if (sturm_count(t, mid) >= k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw NumericalFailure("eigenvalue_rel: bisection tolerance unreachable");
}

/// Eigenvalues k_lo..k_hi (1-based, inclusive), sorted.
template <typename Scalar>
typename SymTridiag<Scalar>::Vector eigenvalues(const SymTridiag<Scalar>& t, Eigen::Index k_lo,
                                                Eigen::Index k_hi, Scalar abs_tol) {
  if (k_lo < 1 || k_lo > k_hi || k_hi > t.size()) {
    throw InvalidParameter("eigenvalues: need 1 <= k_lo <= k_hi <= M");
  }
  typename SymTridiag<Scalar>::Vector out(k_hi - k_lo + 1);
  for (Eigen::Index k = k_lo; k <= k_hi; ++k) out[k - k_lo] = eigenvalue(t, k, abs_tol);
  return out;
}

namespace detail {

// Solves (T - shift) x = b by Gaussian elimination with partial pivoting
// (the tridiagonal LU of LAPACK's dgttrf). Returns false on an exactly
// singular pivot.
template <typename Scalar>
bool shifted_solve(const SymTridiag<Scalar>& t, Scalar shift,
                   typename SymTridiag<Scalar>::Vector& x) {
  using Vector = typename SymTridiag<Scalar>::Vector;
  const Eigen::Index m = t.size();
  Vector d = t.diag.array() - shift;
  Vector dl = t.offdiag;  // subdiagonal
  Vector du = t.offdiag;  // superdiagonal
  Vector du2 = Vector::Zero(std::max<Eigen::Index>(m - 2, 0));
  Eigen::Matrix<bool, Eigen::Dynamic, 1> swapped = Eigen::Matrix<bool, Eigen::Dynamic, 1>::Constant(m, false);
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0) return false;
      const Scalar f = dl[i] / d[i];
      dl[i] = f;
      d[i + 1] -= f * du[i];
    } else {
      const Scalar f = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = f;
      const Scalar tmp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = tmp - f * d[i + 1];
      if (i + 2 < m) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du[i + 1];
      }
      swapped[i] = true;
    }
  }
  if (d[m - 1] == 0) return false;
  // forward: L y = P b
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    if (swapped[i]) std::swap(x[i], x[i + 1]);
    x[i + 1] -= dl[i] * x[i];
  }
  // backward: U x = y
  x[m - 1] /= d[m - 1];
  if (m > 1) x[m - 2] = (x[m - 2] - du[m - 2] * x[m - 1]) / d[m - 2];
  for (Eigen::Index i = m - 3; i >= 0; --i) {
    x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
  }
  return x.allFinite();
}

}  // namespace detail

/// Unit eigenvector for an eigenvalue approximation by inverse iteration.
/// Sign convention: first component with |v_i| > 1e-3 max|v| is positive.
/// An exactly singular shift is retried at shift + k*eps*||T||, k = 1, 2, ...
template <typename Scalar>
typename SymTridiag<Scalar>::Vector eigenvector(const SymTridiag<Scalar>& t, Scalar lambda,
                                                Scalar residual_tol = Scalar(1e-8),
                                                int max_iterations = 8) {
  using Vector = typename SymTridiag<Scalar>::Vector;
  const Eigen::Index m = t.size();
  const Scalar tnorm = std::max(t.norm_inf(), std::numeric_limits<Scalar>::min());
  Vector v(m);
  // Deterministic start vector with components of both signs.
  for (Eigen::Index i = 0; i < m; ++i) {
    v[i] = Scalar(1) + Scalar(0.25) * std::sin(Scalar(0.7) * Scalar(i + 1));
  }
  v.normalize();
  Scalar shift = lambda;
  for (int it = 0; it < max_iterations; ++it) {
    Vector x = v;
    int retries = 0;
    while (!detail::shifted_solve(t, shift, x)) {
      if (++retries > 8) throw NumericalFailure("eigenvector: shift repeatedly singular");
      shift = lambda + Scalar(retries) * std::numeric_limits<Scalar>::epsilon() * tnorm;
      x = v;
    }
    const Scalar nx = x.norm();
    if (!(nx > 0) || !std::isfinite(nx)) throw NumericalFailure("eigenvector: iteration broke down");
    v = x / nx;
    const Scalar res = (t.multiply(v) - lambda * v).norm();
    if (res <= residual_tol * tnorm && it >= 1) break;
    if (it + 1 == max_iterations) {
      throw NumericalFailure("eigenvector: residual tolerance not reached (lambda is not an eigenvalue?)");
    }
  }
  const Scalar vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(v[i]) > Scalar(1e-3) * vmax) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace conespec
