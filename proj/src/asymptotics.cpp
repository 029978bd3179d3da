#include "conespec/asymptotics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "conespec/errors.hpp"
#include "conespec/special_fn.hpp"

namespace conespec {

namespace {

constexpr int kMinFitNodes = 20;

double leading_target(const SingularManifold& mfd, int level) {
  const double nu_i = nu(mfd.tip_cross_section(), static_cast<std::size_t>(level), mfd.n());
  return -0.5 * (mfd.n() - 2) + 0.5 * nu_i;
}

std::vector<Eigen::Index> window(const Eigen::VectorXd& r, double r_lo, double r_hi) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < r.size(); ++j)
    if (r[j] >= r_lo && r[j] <= r_hi) idx.push_back(j);
  return idx;
}

void require_depth(const EigenfunctionProfile& u, const SingularManifold& mfd) {
  if (u.r.size() < 3) throw InvalidParameter("asymptotics: profile has too few samples");
  // The fit window starts three decades above the first node and must stay below L/100.
  if (u.r[0] > 1e-5 * mfd.length())
    throw InsufficientResolution("asymptotics: grid does not reach r <= 1e-5 L; refine r_min");
}

}  // namespace

SlopeFit fit_log_slope(const Eigen::VectorXd& r, const Eigen::VectorXd& y, double r_lo, double r_hi) {
  if (r.size() != y.size()) throw InvalidParameter("fit_log_slope: size mismatch");
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) throw InvalidParameter("fit_log_slope: need 0 < r_lo < r_hi");
  const auto idx = window(r, r_lo, r_hi);
  if (static_cast<int>(idx.size()) < kMinFitNodes)
    throw InsufficientResolution("fit_log_slope: fewer than 20 nodes in the fit window");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto j : idx) {
    if (!(std::abs(y[j]) > 0.0)) throw NumericalFailure("fit_log_slope: zero sample inside the fit window");
    const double x = std::log(r[j]), v = std::log(std::abs(y[j]));
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double cnt = static_cast<double>(idx.size());
  SlopeFit fit;
  fit.r_lo = r_lo;
  fit.r_hi = r_hi;
  fit.nodes = static_cast<int>(idx.size());
  fit.fitted_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const double icpt = (sy - fit.fitted_slope * sx) / cnt;
  double ss = 0;
  for (auto j : idx) {
    const double e = std::log(std::abs(y[j])) - icpt - fit.fitted_slope * std::log(r[j]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / cnt);
  return fit;
}

Eigen::VectorXd nonuniform_derivative(const Eigen::VectorXd& r, const Eigen::VectorXd& y) {
  const Eigen::Index n = r.size();
  if (n < 3 || y.size() != n) throw InvalidParameter("nonuniform_derivative: need >= 3 matching samples");
  Eigen::VectorXd d(n);
  auto three = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index at) {
    // Derivative at r[at] of the quadratic through (a, b, c).
    const double xa = r[a], xb = r[b], xc = r[c], x = r[at];
    const double la = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
    const double lb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
    const double lc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
    return la * y[a] + lb * y[b] + lc * y[c];
  };
  d[0] = three(0, 1, 2, 0);
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = three(j - 1, j, j + 1, j);
  d[n - 1] = three(n - 3, n - 2, n - 1, n - 1);
  return d;
}

Eigen::VectorXd nonuniform_second_derivative(const Eigen::VectorXd& r, const Eigen::VectorXd& y) {
  const Eigen::Index n = r.size();
  if (n < 3 || y.size() != n) throw InvalidParameter("nonuniform_second_derivative: need >= 3 matching samples");
  Eigen::VectorXd d(n);
  auto three = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    const double xa = r[a], xb = r[b], xc = r[c];
    return 2.0 * (y[a] / ((xa - xb) * (xa - xc)) + y[b] / ((xb - xa) * (xb - xc)) + y[c] / ((xc - xa) * (xc - xb)));
  };
  for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = three(j - 1, j, j + 1);
  d[0] = three(0, 1, 2);
  d[n - 1] = three(n - 3, n - 2, n - 1);
  return d;
}

SlopeFit leading_exponent(const EigenfunctionProfile& u, const SingularManifold& mfd) {
  require_depth(u, mfd);
  SlopeFit fit = fit_log_slope(u.r, u.u, 1e3 * u.r[0], 1e-2 * mfd.length());
  fit.target = leading_target(mfd, u.mode_index);
  return fit;
}

SlopeFit gradient_exponent(const EigenfunctionProfile& u, const SingularManifold& mfd) {
  require_depth(u, mfd);
  const Eigen::VectorXd du = nonuniform_derivative(u.r, u.u);
  SlopeFit fit = fit_log_slope(u.r, du, 1e3 * u.r[0], 1e-2 * mfd.length());
  fit.target = leading_target(mfd, u.mode_index) - 1.0;
  return fit;
}

ExpansionReport expansion_consistency(const EigenfunctionProfile& u, const SingularManifold& mfd, double lambda,
                                      int depth, double r_lo, double r_hi) {
  if (mfd.profile().kind() != ProfileKind::ExactCone)
    throw UnsupportedOperation("expansion_consistency: exact cones only");
  if (depth < 0 || depth > 3) throw InvalidParameter("expansion_consistency: depth must be in 0..3");
  const double L = mfd.length();
  if (r_lo <= 0.0) r_lo = L / 50.0;
  if (r_hi <= 0.0) r_hi = L / 10.0;
  const double nu_i = nu(mfd.tip_cross_section(), static_cast<std::size_t>(u.mode_index), mfd.n());
  const double s = -0.5 * (mfd.n() - 2) + 0.5 * nu_i;
  const double b = 0.5 * nu_i + 1.0;

  // coef[j] = (-lambda/16)^j / ((b)_j j!)
  std::vector<double> coef(depth + 1);
  coef[0] = 1.0;
  for (int j = 1; j <= depth; ++j) coef[j] = coef[j - 1] * (-lambda / 16.0) / ((b + j - 1) * j);

  const auto idx = window(u.r, r_lo, r_hi);
  if (static_cast<int>(idx.size()) < kMinFitNodes)
    throw InsufficientResolution("expansion_consistency: fewer than 20 nodes in the window");
  // Amplitude by least squares against the full Friedrichs solution.
  double num = 0, den = 0;
  for (auto j : idx) {
    const double r = u.r[j];
    const double model = std::pow(r, s) * hyp0f1(b, -lambda * r * r / 16.0);
    num += model * u.u[j];
    den += model * model;
  }
  ExpansionReport rep;
  rep.amplitude = num / den;

  Eigen::VectorXd rem = u.u;
  for (int d = 0; d <= depth; ++d) {
    if (d > 0) {
      for (Eigen::Index j = 0; j < rem.size(); ++j)
        rem[j] -= rep.amplitude * coef[d - 1] * std::pow(u.r[j], s + 2.0 * (d - 1));
    }
    SlopeFit f = fit_log_slope(u.r, rem, r_lo, r_hi);
    f.target = s + 2.0 * d;
    rep.remainders.push_back(f);
  }
  rep.pass = true;
  for (std::size_t d = 1; d < rep.remainders.size(); ++d)
    if (rep.remainders[d].fitted_slope < rep.remainders[d - 1].fitted_slope + 1.0 - 1e-2) rep.pass = false;
  return rep;
}

LogTermFit log_term_fit(const EigenfunctionProfile& u, const SingularManifold& mfd, double r_lo, double r_hi) {
  const auto idx = window(u.r, r_lo, r_hi);
  if (static_cast<int>(idx.size()) < kMinFitNodes)
    throw InsufficientResolution("log_term_fit: fewer than 20 nodes in the window");
  const double s = leading_target(mfd, u.mode_index);
  Eigen::MatrixXd X(idx.size(), 3);
  Eigen::VectorXd y(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double r = u.r[idx[k]];
    const double rs = std::pow(r, s);
    X(k, 0) = rs;
    X(k, 1) = rs * std::log(r);
    X(k, 2) = rs * r * r;
    y[k] = u.u[idx[k]];
  }
  // Column scaling keeps the normal equations of the QR well balanced.
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (int c = 0; c < 3; ++c) X.col(c) /= scale[c];
  Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  coef.array() /= scale.array();
  LogTermFit fit;
  fit.leading = coef[0];
  fit.log_coeff = coef[1];
  fit.next = coef[2];
  fit.relative_log = std::abs(coef[0]) > 0.0 ? std::abs(coef[1] / coef[0]) : std::abs(coef[1]);
  return fit;
}

TailReport tail_majorant(const SingularManifold& mfd, int truncation, double ratio, double C, double tol,
                         int max_levels) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidParameter("tail_majorant: ratio must lie in (0, 1)");
  if (truncation < 0) throw InvalidParameter("tail_majorant: truncation must be nonnegative");
  const CrossSection tip = mfd.tip_cross_section();
  std::size_t levels = static_cast<std::size_t>(max_levels);
  if (auto cnt = tip.mode_count()) levels = std::min(levels, *cnt);
  TailReport rep;
  const int n = mfd.n();
  for (std::size_t i = 0; i < levels; ++i) {
    const auto m = tip.mode(i);
    const double nu_i = std::sqrt(std::max(0.0, m.mu - (n - 2)));
    rep.level_bounds.push_back(m.multiplicity * C * std::pow(1.0 + std::abs(m.mu), n) * std::pow(ratio, 0.5 * nu_i));
  }
  // Suffix sums; a finite list has no tail past its last level.
  std::vector<double> suffix(rep.level_bounds.size() + 1, 0.0);
  for (std::size_t i = rep.level_bounds.size(); i-- > 0;) suffix[i] = suffix[i + 1] + rep.level_bounds[i];
  rep.tail = static_cast<std::size_t>(truncation) < suffix.size() ? suffix[truncation] : 0.0;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (suffix[i] <= tol) {
      rep.levels_needed = static_cast<int>(i);
      break;
    }
  }
  return rep;
}

}  // namespace conespec
