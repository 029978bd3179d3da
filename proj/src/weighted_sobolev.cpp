#include "conespec/weighted_sobolev.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "conespec/errors.hpp"

namespace conespec {

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw InvalidParameter("gauss_legendre: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b, int panels, int order) {
  if (panels < 1) throw InvalidParameter("integrate: panels must be >= 1");
  const QuadratureRule rule = gauss_legendre(order);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (int q = 0; q < order; ++q) s += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
    total += 0.5 * h * s;
  }
  return total;
}

RadialFunction bump_function(double a, double b, double amp, double ell) {
  if (!(b > a)) throw InvalidParameter("bump_function: need a < b");
  const double c = 0.5 * (a + b);
  const double s = 2.0 / (b - a);  // dx/dr
  // g(x) = exp(p), p = -1/(1-x^2): g' = g p', g'' = g (p'^2 + p'').
  auto parts = [=](double r) {
    const double x = (r - c) * s;
    struct P {
      double g, g1, g2;
    } out{0.0, 0.0, 0.0};
    if (std::abs(x) >= 1.0) return out;
    const double q = 1.0 - x * x;
    const double g = std::exp(-1.0 / q);
    const double p1 = -2.0 * x / (q * q);                        // d/dx of -1/q
    const double p2 = -2.0 / (q * q) - 8.0 * x * x / (q * q * q);  // d2/dx2 of -1/q
    out.g = g;
    out.g1 = g * p1;
    out.g2 = g * (p1 * p1 + p2);
    return out;
  };
  RadialFunction f;
  f.ell = ell;
  f.u = [=](double r) { return amp * parts(r).g; };
  f.du = [=](double r) { return amp * s * parts(r).g1; };
  f.d2u = [=](double r) { return amp * s * s * parts(r).g2; };
  return f;
}

double weight_chi(double r, double eps) {
  if (!(r > 0.0) || !(eps > 0.0)) throw DomainError("weight_chi: r and eps must be positive");
  const double lo = 0.25 * eps;
  if (r <= lo) return 1.0 / r;
  if (r >= eps) return 1.0;
  const double t = (r - lo) / (eps - lo);
  const double s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  return 1.0 / (r + (1.0 - r) * s);
}

namespace {

struct Warp {
  std::function<double(double)> phi, dphi;
  int n;
  double kappa;  // Einstein constant of the link; NaN when unavailable
};

Warp cone_warp(int n) {
  return Warp{[](double r) { return r; }, [](double) { return 1.0; }, n, 1.0};
}

Warp manifold_warp(const SingularManifold& mfd) {
  const Profile p = mfd.profile();
  const double kappa = mfd.fiber().is_round_sphere() ? mfd.fiber().einstein_kappa() : std::nan("");
  return Warp{[p](double r) { return p.phi(r); }, [p](double r) { return p.dphi(r); }, mfd.n(), kappa};
}

// |nabla^i U|^2 integrated over the unit link, for U = u(r) Y.
double grad_sq(const RadialFunction& f, const Warp& w, int i, double r) {
  const double u = f.u(r);
  if (i == 0) return u * u;
  const double phi = w.phi(r);
  const double du = f.du(r);
  const double ell = f.ell;
  if (i == 1) return du * du + ell * u * u / (phi * phi);
  const double m = w.n - 1.0;
  const double dphi = w.dphi(r);
  const double d2u = f.d2u(r);
  double fiber = 0.0;
  if (ell != 0.0) {
    if (std::isnan(w.kappa)) throw UnsupportedOperation("h_norm: k = 2 on non-radial modes needs an Einstein link");
    // int |Hess_{h0} Y|^2 = ell^2 - (m-1) kappa ell by the Bochner identity.
    const double mixed = du - u * dphi / phi;
    fiber = 2.0 * mixed * mixed * ell / (phi * phi) +
            (u * u * (ell * ell - (m - 1.0) * w.kappa * ell) - 2.0 * phi * dphi * u * du * ell) / std::pow(phi, 4);
  }
  return d2u * d2u + fiber + m * dphi * dphi * du * du / (phi * phi);
}

double integrand(const RadialFunction& f, const Warp& w, int k, double delta, double r,
                 const std::function<double(double)>& chi) {
  const double c = chi(r);
  double s = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double g = grad_sq(f, w, i, r);
    if (g != 0.0) s += std::pow(c, 2.0 * (delta - i) + w.n) * g;
  }
  return s * std::pow(w.phi(r), w.n - 1);
}

// Trapezoid rule in t = log r over [r1, r2].
double log_trapezoid(const std::function<double(double)>& g, double r1, double r2, int nodes_per_decade) {
  const double t1 = std::log(r1), t2 = std::log(r2);
  const int n = std::max(2, static_cast<int>(std::ceil(nodes_per_decade * (t2 - t1) / std::log(10.0))));
  const double h = (t2 - t1) / n;
  double s = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double r = std::exp(t1 + h * j);
    const double wgt = (j == 0 || j == n) ? 0.5 : 1.0;
    s += wgt * g(r) * r;
  }
  return s * h;
}

void check_k(int k) {
  if (k < 0) throw InvalidParameter("weighted norm: k must be >= 0");
  if (k > 2) throw UnsupportedOperation("weighted norm: only k <= 2 derivatives are implemented");
}

}  // namespace

NormResult h_norm(const RadialFunction& f, int k, double delta, const SingularManifold& mfd, const NormOptions& opt) {
  check_k(k);
  const double L = mfd.length();
  const double eps = opt.eps > 0.0 ? opt.eps : L;
  const Warp w = manifold_warp(mfd);
  std::function<double(double)> chi;
  if (opt.weight == WeightKind::Cone) {
    chi = [](double r) { return 1.0 / r; };
  } else {
    chi = [eps](double r) { return weight_chi(r, eps); };
  }
  auto g = [&](double r) { return integrand(f, w, k, delta, r, chi); };
  // Spindles have a second tip at L; probe it symmetrically.
  const double top = mfd.profile().two_tips() ? 0.5 * L : L;
  double total = log_trapezoid(g, 1e-2 * L, top, opt.nodes_per_decade);
  if (mfd.profile().two_tips()) {
    auto mirrored = [&](double s) { return g(L - s); };
    total += log_trapezoid(mirrored, 1e-2 * L, 0.5 * L, opt.nodes_per_decade);
  }
  double last_band = 0.0;
  for (double hi = 1e-2 * L; hi > opt.deepest * L * 1.0000001; hi *= 1e-2) {
    double band = log_trapezoid(g, 1e-2 * hi, hi, opt.nodes_per_decade);
    if (mfd.profile().two_tips()) {
      auto mirrored = [&](double s) { return g(L - s); };
      band += log_trapezoid(mirrored, 1e-2 * hi, hi, opt.nodes_per_decade);
    }
    total += band;
    last_band = band;
  }
  // Cauchy test: the deepest two-decade band must be negligible.
  if (!std::isfinite(total) || last_band > 1e-8 * std::abs(total) + 1e-300) return NormResult{INFINITY, false};
  return NormResult{std::sqrt(total), true};
}

double h_norm_annulus(const RadialFunction& f, int k, double delta, const SingularManifold& mfd, double r1, double r2,
                      int nodes_per_decade) {
  check_k(k);
  if (!(r1 > 0.0) || !(r2 > r1)) throw InvalidParameter("h_norm_annulus: need 0 < r1 < r2");
  const Warp w = manifold_warp(mfd);
  auto chi = [](double r) { return 1.0 / r; };
  return std::sqrt(log_trapezoid([&](double r) { return integrand(f, w, k, delta, r, chi); }, r1, r2, nodes_per_decade));
}

namespace {

double cone_h_annulus(const RadialFunction& f, int k, double delta, int n, double r1, double r2, int npd) {
  const Warp w = cone_warp(n);
  auto chi = [](double r) { return 1.0 / r; };
  return std::sqrt(log_trapezoid([&](double r) { return integrand(f, w, k, delta, r, chi); }, r1, r2, npd));
}

}  // namespace

double c_norm(const RadialFunction& f, int l, double delta, double r1, double r2, int nodes_per_decade) {
  if (l < 0 || l > 1) throw UnsupportedOperation("c_norm: l must be 0 or 1");
  if (!(r1 > 0.0) || !(r2 > r1)) throw InvalidParameter("c_norm: need 0 < r1 < r2");
  const double t1 = std::log(r1), t2 = std::log(r2);
  const int n = std::max(2, static_cast<int>(std::ceil(nodes_per_decade * (t2 - t1) / std::log(10.0))));
  const double h = (t2 - t1) / n;
  double best = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double r = std::exp(t1 + h * j);
    const double u = f.u(r);
    double v = std::pow(r, -delta) * std::abs(u);
    if (l == 1) {
      const double du = f.du(r);
      v += std::pow(r, 1.0 - delta) * std::sqrt(du * du + f.ell * u * u / (r * r));
    }
    best = std::max(best, v);
  }
  return best;
}

CylinderReport cone_cylinder_check(const std::vector<RadialFunction>& modes, double eps, int n, int panels) {
  if (!(eps > 0.0)) throw InvalidParameter("cone_cylinder_check: eps must be positive");
  if (n < 3) throw InvalidParameter("cone_cylinder_check: n must be >= 3");
  const double m = n - 1.0;
  for (const auto& f : modes) {
    for (int j = 0; j <= 64; ++j) {
      const double r = eps * (1.0 + j / 64.0);
      if (f.u(r) != 0.0 || f.du(r) != 0.0) {
        throw InvalidParameter("cone_cylinder_check: test function not supported in (0, eps)");
      }
    }
  }
  CylinderReport rep;
  const double shift = 1.0 + m * (m - 2.0) / 4.0;
  double cyl = 0.0;
  for (const auto& f : modes) {
    const double ell = f.ell;
    rep.lhs += integrate(
        [&](double r) {
          const double u = f.u(r), du = f.du(r);
          return (du * du + (1.0 + ell) * u * u / (r * r)) * std::pow(r, m);
        },
        0.0, eps, panels);
    auto tilde = [&](double r) {
      const double a = std::pow(r, 0.5 * m);
      const double u = f.u(r), du = f.du(r);
      return std::pair{a * u, a * (du + 0.5 * m * u / r)};
    };
    rep.identity += integrate(
        [&](double r) {
          const auto [w, dw] = tilde(r);
          return (shift + ell) * w * w / (r * r) + dw * dw;
        },
        0.0, eps, panels);
    cyl += integrate(
        [&](double r) {
          const auto [w, dw] = tilde(r);
          return w * w + dw * dw + ell * w * w;
        },
        0.0, eps, panels);
  }
  rep.rhs = 0.75 * std::min(1.0, 1.0 / (eps * eps)) * cyl;
  rep.pass = rep.lhs >= rep.rhs - 1e-10;
  return rep;
}

std::vector<CylinderReport> cylinder_trials(int n, double eps, int count, std::uint64_t seed) {
  if (count < 0) throw InvalidParameter("cylinder_trials: count must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CylinderReport> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int trial = 0; trial < count; ++trial) {
    std::vector<RadialFunction> parts;
    for (int j = 0; j < 3; ++j) {
      const double a = eps * (0.02 + 0.6 * unit(rng));
      const double b = a + (eps - a) * (0.2 + 0.8 * unit(rng));
      parts.push_back(bump_function(a, b, 2.0 * unit(rng) - 1.0));
    }
    RadialFunction f;
    f.u = [parts](double r) { return parts[0].u(r) + parts[1].u(r) + parts[2].u(r); };
    f.du = [parts](double r) { return parts[0].du(r) + parts[1].du(r) + parts[2].du(r); };
    f.d2u = [parts](double r) { return parts[0].d2u(r) + parts[1].d2u(r) + parts[2].d2u(r); };
    out.push_back(cone_cylinder_check({f}, eps, n));
  }
  return out;
}

ScalingReport scaling_check(const RadialFunction& f, double a, double delta, int n, double r1, double r2, int k, int l) {
  if (!(a > 0.0 && a <= 1.0)) throw InvalidParameter("scaling_check: a must lie in (0, 1]");
  RadialFunction fa;
  fa.ell = f.ell;
  fa.u = [f, a](double r) { return f.u(a * r); };
  fa.du = [f, a](double r) { return a * f.du(a * r); };
  fa.d2u = [f, a](double r) { return a * a * f.d2u(a * r); };
  ScalingReport rep;
  const double fac = std::pow(a, -delta);
  rep.c_lhs = c_norm(f, l, delta, a * r1, a * r2);
  rep.c_rhs = fac * c_norm(fa, l, delta, r1, r2);
  rep.h_lhs = cone_h_annulus(f, k, delta, n, a * r1, a * r2, 1000);
  rep.h_rhs = fac * cone_h_annulus(fa, k, delta, n, r1, r2, 1000);
  rep.c_rel = std::abs(rep.c_lhs - rep.c_rhs) / std::max(1e-300, std::abs(rep.c_rhs));
  rep.h_rel = std::abs(rep.h_lhs - rep.h_rhs) / std::max(1e-300, std::abs(rep.h_rhs));
  return rep;
}

SobolevSpot sobolev_spot_check(int n, double delta, int samples, std::uint64_t seed) {
  const int k = n / 2 + 1;
  check_k(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SobolevSpot spot;
  for (int s = 0; s < samples; ++s) {
    // Support [a, b] placed log-uniformly in (1e-3, 0.9).
    const double a = std::exp(std::log(1e-3) + unit(rng) * (std::log(0.5) - std::log(1e-3)));
    const double b = std::min(0.9, a * (1.5 + 3.0 * unit(rng)));
    const RadialFunction f = bump_function(a, b, 0.5 + 1.5 * unit(rng));
    const double c = c_norm(f, 0, delta, 0.5 * a, b);
    const double h = cone_h_annulus(f, k, delta, n, 0.5 * a, b, 2000);
    spot.ratios.push_back(c / h);
    spot.fitted_c = std::max(spot.fitted_c, c / h);
  }
  return spot;
}

DecayReport annulus_decay(const RadialFunction& f, int k, int l, double delta, int n, double eps, int count) {
  DecayReport rep;
  for (int j = 0; j < count; ++j) {
    const double hi = eps * std::ldexp(1.0, -j);
    const double lo = 0.5 * hi;
    rep.annulus_h.push_back(cone_h_annulus(f, k, delta, n, lo, hi, 400));
    // sup of the single l-th term
    double best = 0.0;
    for (int q = 0; q <= 200; ++q) {
      const double r = lo * std::pow(2.0, q / 200.0);
      const double u = f.u(r);
      const double g = l == 0 ? std::abs(u) : std::sqrt(f.du(r) * f.du(r) + f.ell * u * u / (r * r));
      best = std::max(best, std::pow(r, l - delta) * g);
    }
    rep.annulus_sup.push_back(best);
  }
  return rep;
}

}  // namespace conespec
