#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "conespec/geometry.hpp"
#include "conespec/radial_modes.hpp"

namespace conespec {

struct SpectrumEntry {
  double lambda = 0.0;
  int mode = 0;          // cross-section level
  int radial_index = 1;  // 1-based within the level
  int multiplicity = 1;
};

struct SpectrumOptions {
  /// Bisection stops at max(abs_floor, rel_tol |lambda|).
  double rel_tol = 1e-14;
  double abs_floor = 1e-12;
  bool vectors = false;
  BCChoice bc = BCChoice::Auto;
  /// Hard cap on cross-section levels examined.
  int max_levels = 400;
};

/// Radial eigenpairs of one cross-section level below lambda_max.
struct ModeSpectrum {
  int level = 0;
  CrossSectionMode data;
  ModeOperator op;
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> vectors;  // unit vectors of op.t, when requested
  /// Certified lower bound for every eigenvalue of this and all later levels.
  double floor = 0.0;
};

struct Spectrum {
  std::vector<SpectrumEntry> entries;
  int num_modes_used = 0;
  double lambda_max_certified = 0.0;
  bool semibounded = true;
  double volume = 1.0;  // cross-section volume, for profile normalization
  int n = 3;
  std::vector<ModeSpectrum> modes;

  const ModeSpectrum& level(int i) const;
  /// Global (multiplicity-counted) 1-based index of the first function of entry e.
  int first_index(std::size_t e) const;
};

/// Per-level certified floor: min Q plus the smallest eigenvalue of the
/// kinetic part. Both grow with mu, so it bounds every later level as well.
double mode_floor(const ModeOperator& op, const SpectrumOptions& opt = {});

Spectrum assemble(const SingularManifold& mfd, double lambda_max, const RadialGrid& grid,
                  const SpectrumOptions& opt = {});

/// Radial samples u(r) of a level's eigenfunction on the operator's unknowns.
struct EigenfunctionProfile {
  int mode_index = 0;
  Eigen::VectorXd r;
  Eigen::VectorXd u;
};

/// u = w / phi^{(n-1)/2} normalized so vol(N) * int u^2 phi^{n-1} dr = 1.
EigenfunctionProfile eigenfunction_profile(const ModeOperator& op, const Eigen::VectorXd& v, double volume,
                                           int mode_index);

/// Discrete quotient int (4|grad U|^2 + R U^2) / int U^2 for U = u(r) Y on the
/// operator's unknowns: w^T A w / w^T B w with w = phi^{(n-1)/2} u.
double rayleigh(const ModeOperator& op, const Eigen::VectorXd& u);

struct MinMaxRow {
  int index = 0;  // global, multiplicity-counted
  double lambda = 0.0;
  double minmax = 0.0;
  double rel_err = 0.0;
};

/// Minimizes the quotient over the complement of the first i-1 eigenfunctions
/// (deflated inverse iteration per level) for i = 1..count.
std::vector<MinMaxRow> minmax_check(const Spectrum& spec, int count);

struct CourantRow {
  int entry = 0;
  int first_index = 0;
  int radial_domains = 0;
  /// Radial domains times the domains of a zonal harmonic of the level's degree.
  int nodal_domains = 0;
  bool pass = false;
};

struct CourantReport {
  std::vector<CourantRow> rows;
  bool pass = true;
};

int radial_sign_changes(const Eigen::VectorXd& u);

/// Needs spec assembled with vectors.
CourantReport courant_radial_check(const Spectrum& spec, std::size_t count);

struct GroundState {
  double lambda1 = 0.0;
  EigenfunctionProfile u;
  bool simple = false;
  double gap = 0.0;
  bool positive = false;
};

GroundState ground_state(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt = {});

struct WeylFit {
  double c_lower = 0.0;   // min_k lambda_k / k^{2/n}
  double exponent = 0.0;  // least-squares slope of log lambda_k against log k
};

WeylFit weyl_fit(const Spectrum& spec);

void write_csv(const Spectrum& spec, std::ostream& os);

}  // namespace conespec
