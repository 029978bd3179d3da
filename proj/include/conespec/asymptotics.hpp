#pragma once

#include <vector>

#include <Eigen/Core>

#include "conespec/geometry.hpp"
#include "conespec/spectrum.hpp"

namespace conespec {

struct SlopeFit {
  double r_lo = 0.0;
  double r_hi = 0.0;
  double fitted_slope = 0.0;
  double target = 0.0;
  double residual = 0.0;  // rms of the log-log fit
  int nodes = 0;
};

/// Least squares of log|y| against log r over nodes in [r_lo, r_hi].
/// Needs at least 20 nodes there, else InsufficientResolution.
SlopeFit fit_log_slope(const Eigen::VectorXd& r, const Eigen::VectorXd& y, double r_lo, double r_hi);

/// Default window [1e3 r_min, 1e-2 L] for the tip exponent.
SlopeFit leading_exponent(const EigenfunctionProfile& u, const SingularManifold& mfd);

/// Same window for |du/dr| from three-point nonuniform differences; the target is
/// the leading exponent minus one.
SlopeFit gradient_exponent(const EigenfunctionProfile& u, const SingularManifold& mfd);

/// Three-point first derivative on a nonuniform grid (one-sided at the ends).
Eigen::VectorXd nonuniform_derivative(const Eigen::VectorXd& r, const Eigen::VectorXd& y);
Eigen::VectorXd nonuniform_second_derivative(const Eigen::VectorXd& r, const Eigen::VectorXd& y);

struct ExpansionReport {
  double amplitude = 0.0;            // A in u ~ A r^s 0F1(...)
  std::vector<SlopeFit> remainders;  // slope after subtracting d = 0..depth terms
  bool pass = false;                 // each subtraction steepens by >= 1 - 1e-2
};

/// Subtracts the leading `depth` terms of the Friedrichs series
/// A r^s sum_j (-lambda/16)^j r^{2j} / ((nu/2+1)_j j!) and refits the slope on
/// [r_lo, r_hi] (defaults L/50, L/10). Exact cones only; depth <= 3.
ExpansionReport expansion_consistency(const EigenfunctionProfile& u, const SingularManifold& mfd, double lambda,
                                      int depth, double r_lo = 0.0, double r_hi = 0.0);

struct LogTermFit {
  double leading = 0.0;  // coefficient of r^s
  double log_coeff = 0.0;  // coefficient of r^s ln r
  double next = 0.0;      // coefficient of r^{s+2}
  double relative_log = 0.0;
};

/// Fits u against {r^s, r^s ln r, r^{s+2}} on [r_lo, r_hi].
LogTermFit log_term_fit(const EigenfunctionProfile& u, const SingularManifold& mfd, double r_lo, double r_hi);

struct TailReport {
  std::vector<double> level_bounds;  // per-level majorant at r = ratio * r0
  double tail = 0.0;                 // sum beyond the truncation level
  int levels_needed = -1;            // smallest truncation with tail <= tol, -1 if not reached
};

/// Majorant sum_{i >= truncation} mult_i C (1 + |mu_i|)^n ratio^{nu_i/2} for the
/// mode sum at r = ratio r0, relative to the r0 values (Friedrichs branches decay
/// like r^{nu_i/2} against the leading r^s factor). Scans up to max_levels.
TailReport tail_majorant(const SingularManifold& mfd, int truncation, double ratio = 0.5, double C = 1.0,
                         double tol = 1e-8, int max_levels = 2000);

}  // namespace conespec
