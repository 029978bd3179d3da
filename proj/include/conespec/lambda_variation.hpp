#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "conespec/geometry.hpp"
#include "conespec/radial_modes.hpp"
#include "conespec/spectrum.hpp"

namespace conespec {

/// Ground eigenvalue of -4 Delta + R together with u and f = -2 ln u.
struct LambdaValue {
  double lambda1 = 0.0;
  EigenfunctionProfile u;  // vol(N) int u^2 phi^{n-1} dr = 1
  Eigen::VectorXd f;       // -2 ln u on the same nodes
  /// sup |lambda - (2 Delta f - |grad f|^2 + R)| with Delta taken as the
  /// discrete flux operator, over nodes past the innermost 5%.
  double residual = 0.0;
  /// Same identity with three-point differences of f and the exact R, over
  /// 0.05 L <= r <= 0.95 L. Limited by the O(h^2) accuracy of the samples.
  double residual_fd = 0.0;
  /// Lumped int e^{-f} dvol.
  double weight_norm = 0.0;
  bool simple = false;
  ModeOperator op;
  Eigen::VectorXd v;  // unit ground vector of op.t
};

/// Refuses manifolds that fail the cone condition (diagnostic instances).
LambdaValue lambda_value(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt = {});

enum class FamilyKind { Warp, Scaling };

/// phi_t = phi + t delta_phi on a fixed grid, or phi_t(r) = (1+t) phi(r/(1+t))
/// (the metric (1+t)^2 g) on the grid stretched by 1+t.
class MetricFamily {
 public:
  /// Checks that delta_phi / r^{1+beta} stays bounded at the tip(s).
  static MetricFamily warp(const SingularManifold& base, Variation v);
  static MetricFamily scaling(const SingularManifold& base);

  SingularManifold at(double t) const;
  RadialGrid grid_at(const RadialGrid& base_grid, double t) const;

  FamilyKind kind() const { return kind_; }
  const SingularManifold& base() const { return base_; }
  const Variation& variation() const { return variation_; }
  std::string id() const;

 private:
  MetricFamily(SingularManifold base, Variation v, FamilyKind k)
      : base_(std::move(base)), variation_(std::move(v)), kind_(k) {}
  SingularManifold base_;
  Variation variation_;
  FamilyKind kind_;
};

struct VariationOptions {
  double step1 = 1e-3;       // central differences at step1 and step2, then Richardson
  double step2 = 1e-4;
  double second_step = 5e-3;  // five-point stencil for the second derivative
  int pairs = 64;             // radial eigenpairs used in the second-order sum
  Eigen::Index nodes = 2048;
  double r_min_factor = 1e-6;
  SpectrumOptions spectrum;
};

struct VariationReport {
  std::string family_id;
  double lambda0 = 0.0;
  double dlambda_fd = 0.0;     // Richardson combination of the two central differences
  double dlambda_fd1 = 0.0;    // central difference at step1
  double dlambda_fd2 = 0.0;    // central difference at step2
  double dlambda_hf = 0.0;     // v^T (A' - lambda B') v
  double dlambda_geom = 0.0;   // int <-Ric - Hess f, h> e^{-f} dvol, e^{-f} = u^2
  double dlambda_geom_raw = 0.0;  // the same integrand without the e^{-f} weight
  double inner_flux = 0.0;     // share of the geometric integral from [r0, 10 r0]
  double divergence_flux = 0.0;  // |vol phi^{n-1} (u^2)'| at the innermost node
  double weight_norm = 0.0;
  double d2lambda_fd = 0.0;
  double d2lambda_pert = 0.0;
  int pairs_used = 0;
  double fd_hf_residual = 0.0;    // |fd - hf| / max(|hf|, 1e-300)
  double geom_hf_residual = 0.0;
  double d2_residual = 0.0;
};

/// All first-order fields; throws DegenerateGroundState unless the ground
/// state at t = 0 is simple.
VariationReport first_variation(const MetricFamily& family, const VariationOptions& opt = {});

/// Fills d2lambda_fd and d2lambda_pert (and lambda0).
VariationReport second_variation_numeric(const MetricFamily& family, const VariationOptions& opt = {});

/// Both of the above in one report.
VariationReport full_variation(const MetricFamily& family, const VariationOptions& opt = {});

struct CriticalPointReport {
  double lambda1 = 0.0;
  double ricci_hess_rr = 0.0;      // sup |Ric_rr + f''|
  double ricci_hess_fiber = 0.0;   // sup |fiber coefficient + phi phi' f'| / phi^2
  std::vector<double> bump_gradient;  // dlambda/dt for bump variations k = 0..9
  double scaling_derivative = 0.0;    // dlambda/dt along (1+t)^2 g
  std::vector<std::string> flags;
};

/// Round-sphere cross-sections only (uses ricci_warped).
CriticalPointReport critical_point_check(const SingularManifold& mfd, const VariationOptions& opt = {});

}  // namespace conespec
