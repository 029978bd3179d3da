#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace conespec {

/// One eigenvalue level of -4 Delta_h + R_h on the link N.
struct CrossSectionMode {
  double mu = 0.0;
  int multiplicity = 1;
  /// Spherical-harmonic degree for round spheres, -1 for explicit data.
  int degree = -1;
};

/// Spectral data of the cross-section operator -4 Delta_{h0} + R_{h0}.
///
/// Round spheres are generators: mode(i) succeeds for every i. Explicit lists
/// are a truncated spectrum; mode_count() reports how many levels exist and
/// callers certify only below the last listed level.
class CrossSection {
 public:
  static CrossSection round_sphere(int fiber_dim, double radius);
  static CrossSection explicit_list(int fiber_dim, std::vector<CrossSectionMode> modes,
                                    double scal_min, std::string label, double volume = 1.0);
  /// Structured text (JSON) file: {fiber_dim, scal_min, modes: [{mu, multiplicity}], ...}.
  static CrossSection load(const std::string& path);

  int fiber_dim() const { return fiber_dim_; }
  double scal_min() const { return scal_min_; }
  const std::string& label() const { return label_; }
  double volume() const { return volume_; }
  bool is_round_sphere() const { return radius_.has_value(); }
  /// Radius of the round sphere; throws for explicit data.
  double radius() const;
  /// Einstein constant kappa with Ric = (m-1) kappa h0 (round spheres only).
  double einstein_kappa() const;

  /// Number of available levels; nullopt for unbounded generators.
  std::optional<std::size_t> mode_count() const;
  CrossSectionMode mode(std::size_t i) const;
  double mu(std::size_t i) const { return mode(i).mu; }
  /// Eigenvalue of -Delta_{h0} attached to level i, (mu_i - R)/4 for constant R.
  double laplace_eigenvalue(std::size_t i) const;

  /// The cross-section of the rescaled metric s^2 h0.
  CrossSection scaled(double s) const;

 private:
  CrossSection() = default;

  int fiber_dim_ = 0;
  double scal_min_ = 0.0;
  double volume_ = 1.0;
  std::string label_;
  std::optional<double> radius_;
  std::vector<CrossSectionMode> modes_;
};

struct ConditionReport {
  bool admissible = false;
  double margin = 0.0;
};

/// Cone admissibility R_{h0} > n - 2, checked on both min R and mu_1.
ConditionReport check_cone_condition(const CrossSection& cs, int n);

/// nu_i = sqrt(mu_i - (n-2)); throws SubcriticalMode when mu_i < n-2.
double nu(const CrossSection& cs, std::size_t i, int n);

}  // namespace conespec
