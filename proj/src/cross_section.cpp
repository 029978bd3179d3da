#include "conespec/cross_section.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "conespec/errors.hpp"
#include "json.hpp"

namespace conespec {
namespace {

// Dimension of degree-k spherical harmonics on S^m: C(k+m, m) - C(k+m-2, m).
int harmonic_multiplicity(int m, int k) {
  auto binom = [](int a, int b) -> double {
    if (b < 0 || a < b) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  return static_cast<int>(std::llround(binom(k + m, m) - binom(k + m - 2, m)));
}

double unit_sphere_volume(int m) {
  // |S^m| = 2 pi^{(m+1)/2} / Gamma((m+1)/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

}  // namespace

CrossSection CrossSection::round_sphere(int fiber_dim, double radius) {
  if (fiber_dim < 2) throw InvalidParameter("round_sphere: fiber dimension must be >= 2");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidParameter("round_sphere: radius must be positive");
  }
  CrossSection cs;
  cs.fiber_dim_ = fiber_dim;
  cs.radius_ = radius;
  cs.scal_min_ = fiber_dim * (fiber_dim - 1.0) / (radius * radius);
  cs.volume_ = unit_sphere_volume(fiber_dim) * std::pow(radius, fiber_dim);
  std::ostringstream label;
  label << "S^" << fiber_dim << "(" << radius << ")";
  cs.label_ = label.str();
  return cs;
}

CrossSection CrossSection::explicit_list(int fiber_dim, std::vector<CrossSectionMode> modes,
                                         double scal_min, std::string label, double volume) {
  if (fiber_dim < 2) throw InvalidParameter("explicit cross-section: fiber_dim must be >= 2");
  if (modes.empty()) throw InvalidParameter("explicit cross-section: at least one mode required");
  if (!(volume > 0.0)) throw InvalidParameter("explicit cross-section: volume must be positive");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i].multiplicity < 1) {
      throw InvalidParameter("explicit cross-section: multiplicities must be >= 1");
    }
    if (i > 0 && modes[i].mu < modes[i - 1].mu) {
      throw InvalidParameter("explicit cross-section: modes must be sorted nondecreasing in mu");
    }
    modes[i].degree = -1;
  }
  if (modes.front().mu < scal_min) {
    throw InvalidParameter("explicit cross-section: mu_1 must dominate min R (mu_1 >= scal_min)");
  }
  CrossSection cs;
  cs.fiber_dim_ = fiber_dim;
  cs.modes_ = std::move(modes);
  cs.scal_min_ = scal_min;
  cs.label_ = std::move(label);
  cs.volume_ = volume;
  return cs;
}

CrossSection CrossSection::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cross-section file not readable: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("cross-section file " + path + ": " + e.what());
  }
  try {
    std::vector<CrossSectionMode> modes;
    for (const auto& m : j.at("modes")) {
      modes.push_back({m.at("mu").get<double>(), m.value("multiplicity", 1), -1});
    }
    return explicit_list(j.at("fiber_dim").get<int>(), std::move(modes), j.at("scal_min").get<double>(),
                         j.value("label", path), j.value("volume", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter("cross-section file " + path + ": " + e.what());
  }
}

double CrossSection::radius() const {
  if (!radius_) throw UnsupportedOperation("radius: cross-section is not a round sphere");
  return *radius_;
}

double CrossSection::einstein_kappa() const {
  if (!radius_) throw UnsupportedOperation("einstein_kappa: cross-section is not Einstein (round sphere)");
  return 1.0 / (*radius_ * *radius_);
}

std::optional<std::size_t> CrossSection::mode_count() const {
  if (radius_) return std::nullopt;
  return modes_.size();
}

CrossSectionMode CrossSection::mode(std::size_t i) const {
  if (radius_) {
    const double m = fiber_dim_;
    const double k = static_cast<double>(i);
    const double c2 = *radius_ * *radius_;
    return {(4.0 * k * (k + m - 1.0) + m * (m - 1.0)) / c2,
            harmonic_multiplicity(fiber_dim_, static_cast<int>(i)), static_cast<int>(i)};
  }
  if (i >= modes_.size()) {
    throw std::out_of_range("CrossSection::mode: explicit list has no level " + std::to_string(i));
  }
  return modes_[i];
}

double CrossSection::laplace_eigenvalue(std::size_t i) const {
  return 0.25 * (mode(i).mu - scal_min_);
}

CrossSection CrossSection::scaled(double s) const {
  if (!(s > 0.0)) throw InvalidParameter("CrossSection::scaled: factor must be positive");
  if (radius_) return round_sphere(fiber_dim_, *radius_ * s);
  CrossSection cs = *this;
  const double inv2 = 1.0 / (s * s);
  for (auto& m : cs.modes_) m.mu *= inv2;
  cs.scal_min_ *= inv2;
  cs.volume_ *= std::pow(s, fiber_dim_);
  return cs;
}

ConditionReport check_cone_condition(const CrossSection& cs, int n) {
  if (n < 3 || n != cs.fiber_dim() + 1) {
    throw InvalidParameter("check_cone_condition: n must equal fiber_dim + 1 and be >= 3");
  }
  const double margin = std::min(cs.scal_min(), cs.mu(0)) - (n - 2);
  return {margin > 0.0, margin};
}

double nu(const CrossSection& cs, std::size_t i, int n) {
  const double deficit = cs.mu(i) - (n - 2);
  if (deficit < 0.0) {
    std::ostringstream msg;
    msg << "mode " << i << " is subcritical: mu - (n-2) = " << deficit;
    throw SubcriticalMode(msg.str(), deficit);
  }
  return std::sqrt(deficit);
}

}  // namespace conespec
