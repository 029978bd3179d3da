#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "conespec/geometry.hpp"

namespace conespec {

/// Rotationally symmetric metric u(x)^2 dx^2 + phi(x)^2 h on a fixed x-grid,
/// h the round unit sphere S^m. x_0 = 0 is a conical tip with phi/s -> c.
struct FlowState {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd phi;
  double t = 0.0;
  int m = 2;
  double c = 1.0;
  /// Second tip at x_N (spindle) instead of a Dirichlet ring held fixed.
  bool two_tips = false;

  /// u = 1, phi sampled from the profile on cells + 1 equispaced nodes of [0, L].
  static FlowState from_profile(const Profile& p, int n, Eigen::Index cells);

  Eigen::Index size() const { return x.size(); }
  int n() const { return m + 1; }
  /// s_j = int_0^{x_j} u dx by the trapezoid rule.
  Eigen::VectorXd arclength() const;
  /// 0.4 min(ds)^2 / 2.
  double stability_bound() const;
  /// phi/s at node 2, the first node the pinning does not overwrite.
  double tip_ratio() const;
  double min_phi() const;  // over interior nodes
};

struct FlowRates {
  Eigen::VectorXd dphi;   // d phi / dt
  Eigen::VectorXd dlogu;  // d log u / dt
};

/// Right-hand side of d phi/dt = phi_ss - (m-1)(1 - phi_s^2)/phi and
/// d log u/dt = m phi_ss/phi at interior nodes; zero at pinned or held nodes.
FlowRates flow_rates(const FlowState& s);

struct StepOptions {
  /// +1 integrates dg/dt = -2 Ric, -1 the time-reversed dg/dt = +2 Ric.
  int direction = 1;
  double drift_limit = 1e-3;
};

/// One explicit Euler step. Throws InvalidParameter above the stability bound
/// and FlowBreakdown on positivity loss or tip-ratio drift beyond the limit.
FlowState step(const FlowState& s, double dt, const StepOptions& opt = {});

/// The metric as a SingularManifold in arclength (tabulated profile).
SingularManifold to_manifold(const FlowState& s);

struct FlowSample {
  double t = 0.0;
  double lambda = 0.0;
  double err = 0.0;  // |lambda_M - lambda_{M/2}| + eigensolver tolerance
  double min_phi = 0.0;
  double tip_ratio = 0.0;
  bool ok = true;
  std::string message;
};

struct FlowOptions {
  StepOptions step;
  Eigen::Index lambda_nodes = 2048;
  double r_min_factor = 1e-6;
};

struct FlowSeries {
  std::vector<FlowSample> samples;
  FlowState final_state;
};

/// Runs round(T/dt) steps and samples lambda every sample_every steps
/// (including t = 0); lambda evaluations on snapshots run in parallel.
FlowSeries run_with_lambda(const FlowState& state0, double T, double dt, int sample_every,
                           const FlowOptions& opt = {});

struct MonotonicityReport {
  int violations = 0;
  double worst = 0.0;  // most negative (lambda_{k+1} - lambda_k + err_k) * direction
  bool pass = true;
};

/// direction +1: lambda_{k+1} >= lambda_k - err_k; -1: lambda_{k+1} <= lambda_k + err_k.
MonotonicityReport check_monotone(const FlowSeries& series, int direction = 1);

/// Max |d phi/dt|, |d u/dt| over the grid for one rate evaluation.
double stationarity_defect(const FlowState& s);

struct CurvatureResidual {
  double rr = 0.0;     // max |d_t g_ss + 2 Ric_ss|
  double fiber = 0.0;  // max |d_t (phi^2) + 2 fiber coefficient|
  /// Discrete L2 norms (sum e_j^2 dx)^{1/2} of the same residuals. Near a tip
  /// whose curvature blows up like r^{alpha-2} only these converge.
  double rr_l2 = 0.0;
  double fiber_l2 = 0.0;
};

/// Compares the discrete rates at t = 0 (u = 1, so s = x) with ricci_warped of
/// the profile the state was sampled from, at nodes 2..N-2.
CurvatureResidual curvature_residual(const FlowState& s, const Profile& p);

void write_csv(const FlowSeries& series, std::ostream& os);

}  // namespace conespec
