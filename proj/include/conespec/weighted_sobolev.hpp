#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "conespec/cross_section.hpp"
#include "conespec/geometry.hpp"

namespace conespec {

/// Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

QuadratureRule gauss_legendre(int order);

/// Composite Gauss-Legendre over [a, b] with equal panels.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64, int order = 16);

/// A separated function U = u(r) Y on the warped product, Y an L^2-unit
/// eigenfunction of -Delta_{h0} with eigenvalue ell.
struct RadialFunction {
  std::function<double(double)> u;
  std::function<double(double)> du;
  std::function<double(double)> d2u;
  double ell = 0.0;
};

/// Smooth bump exp(-1/(1-x^2)) on [a, b] times amp, with exact derivatives.
RadialFunction bump_function(double a, double b, double amp = 1.0, double ell = 0.0);

/// chi = 1/r on (0, eps/4], 1 on [eps, inf); 1/chi is blended by a quintic
/// smoothstep in between. Monotone for eps <= 1.
double weight_chi(double r, double eps);

enum class WeightKind { Manifold, Cone };

struct NormOptions {
  WeightKind weight = WeightKind::Manifold;
  /// Size of the conical part for the Manifold weight; 0 means L.
  double eps = 0.0;
  int nodes_per_decade = 1000;
  /// Deepest cutoff probed when testing convergence at the tip, as a fraction of L.
  double deepest = 1e-12;
};

struct NormResult {
  double value = 0.0;
  bool finite = true;
};

/// sqrt(sum_{i<=k} int chi^{2(delta-i)+n} |nabla^i U|^2 dvol) by the trapezoid
/// rule in log r. The cutoff is pushed toward the tip decade by decade and
/// the result is flagged infinite when the partial sums fail to settle.
NormResult h_norm(const RadialFunction& f, int k, double delta, const SingularManifold& mfd,
                  const NormOptions& opt = {});

/// Same norm over an annulus [r1, r2] with the cone weight, fixed quadrature.
double h_norm_annulus(const RadialFunction& f, int k, double delta, const SingularManifold& mfd, double r1,
                      double r2, int nodes_per_decade = 1000);

/// Grid sup over [r1, r2] of sum_{i<=l} r^{i-delta} |nabla^i U| on an exact cone.
double c_norm(const RadialFunction& f, int l, double delta, double r1, double r2, int nodes_per_decade = 1000);

struct CylinderReport {
  double lhs = 0.0;       // cone H^1 norm squared
  double identity = 0.0;  // mode-wise cylinder form of the same quantity
  double rhs = 0.0;       // (3/4) min(1, 1/eps^2) ||r^{(n-1)/2} u||^2_{W^{1,2}(cylinder)}
  bool pass = false;
};

/// Modes are compactly supported in (0, eps); ell values are taken from the
/// RadialFunctions and must match -Delta eigenvalues of the link.
CylinderReport cone_cylinder_check(const std::vector<RadialFunction>& modes, double eps, int n,
                                   int panels = 256);

/// Seeded mode-0 trials of cone_cylinder_check. Each test function is a sum of
/// three bumps with supports in [eps/50, eps) and amplitudes in [-1, 1].
std::vector<CylinderReport> cylinder_trials(int n, double eps, int count, std::uint64_t seed);

struct ScalingReport {
  double c_lhs = 0.0, c_rhs = 0.0;
  double h_lhs = 0.0, h_rhs = 0.0;
  double c_rel = 0.0, h_rel = 0.0;
};

/// Compares norms of u on (a r1, a r2) with a^{-delta} times norms of u(a .) on (r1, r2).
ScalingReport scaling_check(const RadialFunction& f, double a, double delta, int n, double r1, double r2,
                            int k = 1, int l = 1);

struct SobolevSpot {
  std::vector<double> ratios;  // c_norm / h_norm per sample
  double fitted_c = 0.0;
};

/// Fits sup r^{-delta}|u| <= C ||u||_{H^k_delta}, k = floor(n/2) + 1, over seeded random bumps (n = 3).
SobolevSpot sobolev_spot_check(int n, double delta, int samples, std::uint64_t seed);

struct DecayReport {
  std::vector<double> annulus_h;    // ||u||_{H^k_delta(C_j)}
  std::vector<double> annulus_sup;  // sup_{C_j} r^{l-delta} |nabla^l u|
};

/// Dyadic annuli C_j = [eps 2^{-j-1}, eps 2^{-j}], j = 0..count-1, on an exact cone.
DecayReport annulus_decay(const RadialFunction& f, int k, int l, double delta, int n, double eps, int count);

}  // namespace conespec
