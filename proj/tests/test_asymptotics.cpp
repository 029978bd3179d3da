#include <cmath>

#include "conespec/asymptotics.hpp"
#include "conespec/cross_section.hpp"
#include "conespec/errors.hpp"
#include "conespec/geometry.hpp"
#include "conespec/radial_modes.hpp"
#include "conespec/spectrum.hpp"
#include "doctest.h"

using namespace conespec;

namespace {

SingularManifold cone(int n, double c2, const Profile& p = Profile::exact_cone()) {
  return SingularManifold(n, CrossSection::round_sphere(n - 1, std::sqrt(c2)), p, OuterBoundary::Dirichlet);
}

// Closed-form Friedrichs samples of a level on a log grid.
EigenfunctionProfile closed_form_profile(const SingularManifold& m, int level, double lambda, double r_min, int nodes) {
  const ModeODE mode(m.n(), m.fiber().mu(level), m.profile());
  const auto u = closed_form_solution(mode, lambda, Branch::Friedrichs);
  EigenfunctionProfile p;
  p.mode_index = level;
  p.r = RadialGrid::log_uniform(r_min, m.length(), nodes).r;
  p.u = p.r.unaryExpr([&](double r) { return u(r); });
  return p;
}

}  // namespace

TEST_CASE("flat cone ground state has slope zero") {
  const SingularManifold m = cone(3, 1.0);
  const GroundState g = ground_state(m, RadialGrid::standard(m));
  const SlopeFit f = leading_exponent(g.u, m);
  CHECK(f.target == 0.0);
  CHECK(std::abs(f.fitted_slope) <= 1e-2);
  CHECK(f.nodes >= 20);
  CHECK(f.r_lo >= g.u.r[0]);
  CHECK(f.r_hi <= m.length() / 10);
  CHECK(f.fitted_slope > -0.5 + 0.01);
}

TEST_CASE("n = 4 cone over S^3(1): slope zero and no log term") {
  const SingularManifold m = cone(4, 1.0);
  const GroundState coarse = ground_state(m, RadialGrid::standard(m));
  CHECK(std::abs(leading_exponent(coarse.u, m).fitted_slope) <= 1e-2);
  const GroundState g = ground_state(m, RadialGrid::standard(m, 8192));
  const LogTermFit lf = log_term_fit(g.u, m, 1e-5, 1e-2);
  CHECK(std::abs(lf.relative_log) <= 1e-6);
  // Closed-form oracle: 0F1 carries no log, and the fit recovers -lambda/(16 * 2) r^2 next.
  const EigenfunctionProfile cf = closed_form_profile(m, 0, g.lambda1, 1e-6, 4000);
  const LogTermFit lc = log_term_fit(cf, m, 1e-5, 1e-2);
  CHECK(std::abs(lc.relative_log) <= 1e-9);
  CHECK(lc.next / lc.leading == doctest::Approx(-g.lambda1 / 32).epsilon(1e-4));
}

TEST_CASE("leading exponents on admissible tips with s != 0") {
  for (auto [n, c2] : {std::pair{3, 1.5}, std::pair{4, 2.0}, std::pair{5, 2.5}}) {
    for (const Profile& p : {Profile::exact_cone(), Profile::perturbed_cone(0.1, 1.5)}) {
      const SingularManifold m = cone(n, c2, p);
      const GroundState g = ground_state(m, RadialGrid::standard(m));
      const double nu0 = std::sqrt((n - 1.0) * (n - 2.0) / c2 - (n - 2.0));
      const double s = -(n - 2) / 2.0 + nu0 / 2;
      const SlopeFit lead = leading_exponent(g.u, m);
      INFO("n=" << n << " c2=" << c2 << " " << p.describe());
      CHECK(lead.target == doctest::Approx(s).epsilon(1e-14));
      CHECK(std::abs(lead.fitted_slope - s) <= 1e-2);
      CHECK(lead.fitted_slope > -(n - 2) / 2.0 + 0.01);
      const SlopeFit grad = gradient_exponent(g.u, m);
      CHECK(grad.target == doctest::Approx(s - 1).epsilon(1e-14));
      CHECK(grad.fitted_slope >= lead.fitted_slope - 1 - 1e-2);
    }
  }
}

TEST_CASE("perturbed cone n = 3 keeps the exact-cone order") {
  const SingularManifold m = cone(3, 1.0, Profile::perturbed_cone(0.1, 1.5));
  const GroundState g = ground_state(m, RadialGrid::standard(m));
  const SlopeFit f = leading_exponent(g.u, m);
  CHECK(std::abs(f.fitted_slope) <= 1e-2);
  CHECK(f.fitted_slope > -0.5 + 0.01);
}

TEST_CASE("shallow grids raise insufficient resolution") {
  const SingularManifold m = cone(3, 1.0);
  const GroundState g = ground_state(m, RadialGrid::standard(m, 512, 1e-3));
  CHECK_THROWS_AS(leading_exponent(g.u, m), InsufficientResolution);
  CHECK_THROWS_AS(gradient_exponent(g.u, m), InsufficientResolution);
  const GroundState sparse = ground_state(m, RadialGrid::standard(m, 64));
  CHECK_THROWS_AS(leading_exponent(sparse.u, m), InsufficientResolution);
}

TEST_CASE("expansion depth 1 on the flat cone steepens to slope 2") {
  const SingularManifold m = cone(3, 1.0);
  const GroundState g = ground_state(m, RadialGrid::standard(m));
  const ExpansionReport e = expansion_consistency(g.u, m, g.lambda1, 1);
  REQUIRE(e.remainders.size() == 2);
  CHECK(e.remainders[1].fitted_slope >= 2.0 - 1e-2);
  CHECK(e.pass);
  // sin(pi r)/r = pi - pi^3 r^2 / 6 + ...; the amplitude of the normalized u relative to u(0).
  CHECK(e.amplitude == doctest::Approx(g.u.u[0]).epsilon(1e-6));
}

TEST_CASE("depth 0 reproduces the leading fit") {
  const SingularManifold m = cone(3, 1.5);
  const GroundState g = ground_state(m, RadialGrid::standard(m));
  const SlopeFit lead = leading_exponent(g.u, m);
  const ExpansionReport e = expansion_consistency(g.u, m, g.lambda1, 0, lead.r_lo, lead.r_hi);
  REQUIRE(e.remainders.size() == 1);
  CHECK(e.remainders[0].fitted_slope == lead.fitted_slope);
  CHECK(e.remainders[0].nodes == lead.nodes);
}

TEST_CASE("deeper expansions on closed-form samples") {
  for (auto [n, c2, level] : {std::tuple{3, 1.0, 0}, std::tuple{3, 1.5, 1}, std::tuple{4, 1.0, 0}}) {
    const SingularManifold m = cone(n, c2);
    const EigenfunctionProfile p = closed_form_profile(m, level, 60.0, 1e-6, 6000);
    const ExpansionReport e = expansion_consistency(p, m, 60.0, 3);
    REQUIRE(e.remainders.size() == 4);
    INFO("n=" << n << " c2=" << c2 << " level=" << level);
    CHECK(e.pass);
    CHECK(e.amplitude == doctest::Approx(1.0).epsilon(1e-10));
    for (int d = 1; d <= 3; ++d) {
      CHECK(e.remainders[d].fitted_slope >= e.remainders[d - 1].fitted_slope + 1.0 - 1e-2);
      CHECK(e.remainders[d].fitted_slope == doctest::Approx(e.remainders[d].target).epsilon(2e-2));
    }
  }
}

TEST_CASE("expansion requires an exact cone and depth <= 3") {
  const SingularManifold p = cone(3, 1.0, Profile::perturbed_cone(0.1, 1.5));
  const GroundState g = ground_state(p, RadialGrid::standard(p, 1024));
  CHECK_THROWS_AS(expansion_consistency(g.u, p, g.lambda1, 1), UnsupportedOperation);
  const SingularManifold m = cone(3, 1.0);
  const GroundState h = ground_state(m, RadialGrid::standard(m, 1024));
  CHECK_THROWS_AS(expansion_consistency(h.u, m, h.lambda1, 4), InvalidParameter);
}

TEST_CASE("fit_log_slope recovers exact powers") {
  const Eigen::VectorXd r = RadialGrid::log_uniform(1e-4, 1.0, 200).r;
  for (double p : {-1.3, 0.0, 0.25, 3.0}) {
    const Eigen::VectorXd y = r.unaryExpr([p](double x) { return 2.5 * std::pow(x, p); });
    const SlopeFit f = fit_log_slope(r, y, 1e-3, 1e-1);
    CHECK(f.fitted_slope == doctest::Approx(p).epsilon(1e-12).scale(1.0));
    CHECK(f.residual <= 1e-12);
  }
}

TEST_CASE("nonuniform derivatives are exact on quadratics") {
  const Eigen::VectorXd r = RadialGrid::log_uniform(1e-3, 1.0, 50).r;
  const Eigen::VectorXd y = r.unaryExpr([](double x) { return 3 * x * x - 2 * x + 1; });
  const Eigen::VectorXd d1 = nonuniform_derivative(r, y);
  const Eigen::VectorXd d2 = nonuniform_second_derivative(r, y);
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    CHECK(d1[j] == doctest::Approx(6 * r[j] - 2).epsilon(1e-9).scale(1.0));
    CHECK(d2[j] == doctest::Approx(6.0).epsilon(1e-6));
  }
}

TEST_CASE("tail majorant") {
  const SingularManifold m = cone(3, 1.0);
  const TailReport t = tail_majorant(m, 7);
  // Test-side sum for S^2(1): mult 2k+1, mu = 4k(k+1)+2, nu = sqrt(mu - 1).
  double oracle = 0.0;
  for (int k = 7; k < 2000; ++k) {
    const double mu = 4.0 * k * (k + 1) + 2;
    oracle += (2 * k + 1) * std::pow(1 + mu, 3) * std::pow(0.5, 0.5 * std::sqrt(mu - 1));
  }
  CHECK(t.tail == doctest::Approx(oracle).epsilon(1e-10));
  REQUIRE(t.levels_needed > 0);
  const TailReport at = tail_majorant(m, t.levels_needed);
  CHECK(at.tail <= 1e-8);
  CHECK(tail_majorant(m, t.levels_needed - 1).tail > 1e-8);
  for (std::size_t i = 1; i + 1 < t.level_bounds.size(); ++i) {
    // Past the polynomial hump the bounds decay geometrically until they underflow.
    if (i > 30 && t.level_bounds[i] > 1e-250) CHECK(t.level_bounds[i + 1] < t.level_bounds[i]);
  }
  // A finite explicit list has nothing beyond its last level.
  const CrossSection listed = CrossSection::explicit_list(2, {{2.0, 1}, {10.0, 3}}, 2.0, "short");
  const SingularManifold e(3, listed, Profile::exact_cone(), OuterBoundary::Dirichlet);
  CHECK(tail_majorant(e, 2).tail == 0.0);
  CHECK_THROWS_AS(tail_majorant(m, 1, 1.5), InvalidParameter);
}
