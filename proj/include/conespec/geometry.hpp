#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "conespec/cross_section.hpp"

namespace conespec {

enum class ProfileKind { ExactCone, PerturbedCone, Spindle, Tabulated, Varied, Scaled };

/// A warp perturbation delta_phi with delta_phi = O(r^{1+beta}) at the tip.
struct Variation {
  std::string id;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  double beta = 1.0;

  static Variation zero();
  /// (r (L - r))^2 / L^3 * cos(k pi r / L); equals r^2 (1-r)^2 for L = 1, k = 0.
  static Variation bump(double length, int k = 0);
};

/// Warping function phi on (0, L] of g = dr^2 + phi(r)^2 h0.
///
/// Conical at r = 0 with phi(r)/r -> tip_ratio(); spindles (two_tips()) are
/// also conical at r = L with the same ratio. Instances are immutable values.
class Profile {
 public:
  static Profile exact_cone(double length = 1.0);
  /// phi = r (1 + eta r^alpha). alpha < 1 violates the decay condition and is
  /// accepted only when diagnostic is set.
  static Profile perturbed_cone(double eta, double alpha, double length = 1.0, bool diagnostic = false);
  /// phi = c (L / pi) sin(pi r / L).
  static Profile spindle(double c, double length);
  /// Natural cubic spline of psi = phi / b on the samples, b = r (one tip) or
  /// r (L - r) / L (two tips). r[0] must be 0 and r.back() = L; phi[0] is ignored.
  static Profile tabulated(const Eigen::VectorXd& r, const Eigen::VectorXd& phi, double tip_ratio,
                           bool two_tips);

  /// phi + t * delta_phi on the same domain.
  Profile varied(const Variation& v, double t) const;
  /// r -> s phi(r / s) on (0, s L]: the metric s^2 g.
  Profile scaled(double s) const;

  double phi(double r) const;
  double dphi(double r) const;
  double d2phi(double r) const;

  ProfileKind kind() const;
  double length() const;
  double tip_ratio() const;
  bool two_tips() const;
  bool diagnostic() const;
  std::string describe() const;

  /// Terms (a, beta) with (phi/r)^2 - c0^2 = sum a r^beta near 0, when known in closed form.
  std::optional<std::vector<std::pair<double, double>>> tip_expansion() const;

  struct Impl;

 private:
  explicit Profile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

enum class OuterBoundary { Dirichlet, SecondConicalTip };

class SingularManifold {
 public:
  /// Requires n = fiber_dim + 1 >= 3 and a spindle profile exactly when the
  /// outer boundary is a second tip. Unless diagnostic, the tip cross-section
  /// must satisfy the cone condition and the profile the decay condition.
  SingularManifold(int n, CrossSection fiber, Profile profile, OuterBoundary outer,
                   bool diagnostic = false);

  int n() const { return n_; }
  const CrossSection& fiber() const { return fiber_; }
  /// The link seen at the tip, c0^2 h0.
  CrossSection tip_cross_section() const { return fiber_.scaled(profile_.tip_ratio()); }
  const Profile& profile() const { return profile_; }
  OuterBoundary outer_bc() const { return outer_; }
  bool diagnostic() const { return diagnostic_; }
  double length() const { return profile_.length(); }

  SingularManifold with_profile(Profile p) const;

 private:
  int n_;
  CrossSection fiber_;
  Profile profile_;
  OuterBoundary outer_;
  bool diagnostic_;
};

/// Scalar curvature of dr^2 + phi^2 h0 for constant R_{h0}.
double scal(const SingularManifold& mfd, double r);

struct WarpedRicci {
  double rr = 0.0;
  /// Ric restricted to the fiber equals fiber_coeff * h0.
  double fiber_coeff = 0.0;
};

/// Requires an Einstein (round-sphere) cross-section.
WarpedRicci ricci_warped(const SingularManifold& mfd, double r);

struct AsymptoticReport {
  /// bounds[i] = sup r^i |d^{i+1}/dr^{i+1} ((phi/r)^2 - c0^2)| over the sampled window.
  std::vector<double> bounds;
  /// False where the derivative order is beyond what the profile exposes.
  std::vector<bool> evaluated;
  bool pass = true;
  int first_failure = -1;
};

AsymptoticReport check_asymptotic_condition(const Profile& p, int n);

}  // namespace conespec
