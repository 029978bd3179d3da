#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "conespec/cross_section.hpp"
#include "conespec/geometry.hpp"
#include "conespec/tridiag.hpp"

namespace conespec {

/// Radial equation of one cross-section level after w = phi^{(n-1)/2} u:
/// -4 w'' + Q w = lambda w with Q = mu/phi^2 - (n-1) (phi'/phi)^2.
struct ModeODE {
  int n = 3;
  /// Eigenvalue of -4 Delta + R on (N, h0), not on the tip link c0^2 h0.
  double mu = 0.0;
  /// mu/c0^2 - (n-2); negative for subcritical levels.
  double deficit = 0.0;
  Profile profile = Profile::exact_cone();

  ModeODE(int n_, double mu_, Profile p);

  bool subcritical() const { return deficit < 0.0; }
  /// sqrt(deficit); throws SubcriticalMode when deficit < 0.
  double nu() const;
  double potential(double r) const;
};

ModeODE mode_ode(const SingularManifold& mfd, std::size_t level);

/// Q(r) = mu/phi^2 - (n-1)(phi'/phi)^2 as a callable.
std::function<double(double)> mode_potential(int n, double mu, const Profile& profile);

enum class GridKind { LogUniform, Uniform, MirroredLog };

/// Nodes r_0 < ... < r_{M-1} including both boundary points.
struct RadialGrid {
  GridKind kind = GridKind::LogUniform;
  Eigen::VectorXd r;

  /// Geometric nodes from r_min to L.
  static RadialGrid log_uniform(double r_min, double length, Eigen::Index nodes);
  /// Equispaced nodes from r_min (may be 0) to L.
  static RadialGrid uniform(double r_min, double length, Eigen::Index nodes);
  /// Geometric on [r_min, L/2], mirrored onto [L/2, L - r_min]. The node count
  /// is rounded down to an odd number so that L/2 is a node.
  static RadialGrid mirrored_log(double r_min, double length, Eigen::Index nodes);
  /// Default for a manifold: log (or mirrored log) with r_min = factor * L.
  static RadialGrid standard(const SingularManifold& mfd, Eigen::Index nodes = 2048,
                             double r_min_factor = 1e-6);

  Eigen::Index size() const { return r.size(); }
  double r_min() const { return r[0]; }
  double r_max() const { return r[r.size() - 1]; }
  /// Same node layout stretched by s (exact for log grids).
  RadialGrid scaled(double s) const;
};

enum class InnerBC { Robin, Dirichlet };
enum class BCChoice { Auto, Robin, Dirichlet };

/// Lumped-mass flux-form discretization of -4 w'' + Q w on a RadialGrid.
///
/// Unknowns sit on the nodes first..last of the grid. A = K + diag(Q m) is the
/// stiffness-plus-potential matrix, B = diag(m) the lumped mass, and
/// t = B^{-1/2} A B^{-1/2}. Robin ends carry w' = +-sigma w with
/// sigma = (1+nu)/(2 d), d the distance from the end node to its tip.
struct ModeOperator {
  int n = 3;
  double mu = 0.0;
  double deficit = 0.0;
  InnerBC inner_bc = InnerBC::Dirichlet;
  bool two_tips = false;
  bool diagnostic = false;
  Eigen::Index first = 0;
  Eigen::Index last = 0;
  Eigen::VectorXd nodes;  // r at the unknowns
  Eigen::VectorXd mass;
  Eigen::VectorXd q;      // potential at the unknowns
  Eigen::VectorXd phi;    // warp at the unknowns
  Eigen::VectorXd a_diag;
  Eigen::VectorXd a_off;
  SymTridiagd t;

  Eigen::Index size() const { return nodes.size(); }
  /// Mass-weighted eigenvector of t -> w samples.
  Eigen::VectorXd to_w(const Eigen::VectorXd& v) const;
  /// w samples -> u = w / phi^{(n-1)/2}.
  Eigen::VectorXd to_u(const Eigen::VectorXd& w) const;
  /// u samples -> t-space vector.
  Eigen::VectorXd from_u(const Eigen::VectorXd& u) const;
  /// A with its potential part removed (kinetic plus Robin terms).
  SymTridiagd kinetic() const;
};

ModeOperator discretize(const ModeODE& mode, const RadialGrid& grid, BCChoice bc = BCChoice::Auto);

/// Liouville transform pair on samples: w = phi^{(n-1)/2} u and back.
Eigen::VectorXd liouville_forward(int n, const Eigen::VectorXd& phi, const Eigen::VectorXd& u);
Eigen::VectorXd liouville_inverse(int n, const Eigen::VectorXd& phi, const Eigen::VectorXd& w);

enum class Branch { Friedrichs, Second };

/// Closed-form solution of the exact-cone mode equation
/// -4u'' - 4(n-1)u'/r + (mu - (n-1)(n-2)) u / r^2 = lambda u.
///
/// Friedrichs: r^s 0F1(; nu/2 + 1; -lambda r^2 / 16), s = -(n-2)/2 + nu/2,
/// normalized so u ~ r^s. Second: r^{s-} (lambda = 0), Y_{nu/2} (lambda > 0),
/// the Whittaker M_{0,-nu/2} or, for integer nu, W_{0,nu/2} through the
/// logarithmic U expansion (lambda < 0). The Second branch has no fixed scale.
std::function<double(double)> closed_form_solution(const ModeODE& mode, double lambda, Branch branch);

/// Relative residual of the exact-cone mode equation at r, with derivatives of
/// u from Richardson-extrapolated central differences.
double ode_residual(const ModeODE& mode, double lambda, const std::function<double(double)>& u, double r);

struct HardyReport {
  double coefficient = 0.0;  // mu_tip - (n-2)
  bool semibounded = false;
  bool strictly_positive = false;
};

/// Semibounded iff mu_tip >= n-2 (to rounding); mu is measured on the tip link.
HardyReport hardy_report(int n, double mu_tip);
HardyReport hardy_report(const ModeODE& mode);

/// Half the supremum of admissible delta0 for the semi-boundedness bound.
double compute_delta0(const CrossSection& cs, int n);

/// Ground eigenvalue of the (possibly subcritical) mode under a shrinking
/// cutoff: one entry per r_min factor, at fixed nodes per decade of r.
std::vector<double> hardy_refinement(const ModeODE& mode, const std::vector<double>& r_min_factors,
                                     int nodes_per_decade = 200, BCChoice bc = BCChoice::Auto);

/// Discrete H^1 Gram matrix of the cone norm for one level in the w variable:
/// int w'^2 + c int w^2 / r^2, c = 1 + (n-1)(n-3)/4 + ell, ell the -Delta eigenvalue.
SymTridiagd h1_gram(const ModeOperator& op, double ell);

}  // namespace conespec
