#include <algorithm>
#include <cmath>
#include <numbers>

#include "conespec/errors.hpp"
#include "conespec/geometry.hpp"
#include "conespec/lambda_variation.hpp"
#include "doctest.h"

using namespace conespec;

namespace {

constexpr double kPi = std::numbers::pi;

SingularManifold flat_cone(int n = 3) {
  return SingularManifold(n, CrossSection::round_sphere(n - 1, 1.0), Profile::exact_cone(), OuterBoundary::Dirichlet);
}

SingularManifold round_s4() {
  return SingularManifold(4, CrossSection::round_sphere(3, 1.0), Profile::spindle(1.0, kPi),
                          OuterBoundary::SecondConicalTip);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Continuum first variation on the unit flat cone, ground state u = A sin(pi r)/r
// with vol(S^2) A^2 / 2 = 1. For h = 2 r dphi h0 the integrand
// -<Hess f, h> u^2 dvol reduces to 16 s s' dphi with s = sin(pi r)/r.
double flat_bump_oracle(const Variation& v) {
  const int intervals = 20000;
  const double h = 1.0 / intervals;
  double sum = 0.0;
  for (int j = 0; j <= intervals; ++j) {
    const double r = j * h;
    double s, ds;
    if (r == 0.0) {
      s = kPi;
      ds = 0.0;
    } else {
      s = std::sin(kPi * r) / r;
      ds = (kPi * std::cos(kPi * r) * r - std::sin(kPi * r)) / (r * r);
    }
    const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    sum += w * 16.0 * s * ds * v.f(r);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("lambda on the flat cone is 4 pi^2") {
  const SingularManifold m = flat_cone();
  const LambdaValue lv = lambda_value(m, RadialGrid::standard(m));
  CHECK(rel(lv.lambda1, 4 * kPi * kPi) <= 1e-4);
  CHECK(lv.simple);
  CHECK(lv.weight_norm == doctest::Approx(1.0).epsilon(1e-10));
  for (Eigen::Index j = 0; j < lv.f.size(); ++j) {
    CHECK(lv.f[j] == doctest::Approx(-2 * std::log(lv.u.u[j])).epsilon(1e-14));
  }
}

TEST_CASE("eigen-identity residual on a uniform grid") {
  const SingularManifold m = flat_cone();
  const LambdaValue lv = lambda_value(m, RadialGrid::uniform(1e-6, 1.0, 2048));
  CHECK(lv.residual <= 1e-5);
  CHECK(lv.residual_fd <= 5e-2);
}

TEST_CASE("round S^4 has lambda = R = 12 with constant u") {
  const SingularManifold m = round_s4();
  const LambdaValue lv = lambda_value(m, RadialGrid::standard(m));
  CHECK(rel(lv.lambda1, 12.0) <= 1e-4);
  const auto [lo, hi] = std::minmax_element(lv.u.u.begin(), lv.u.u.end());
  CHECK(*hi / *lo - 1.0 <= 1e-3);
  // vol(S^4) = 8 pi^2 / 3, so the normalized constant is its inverse square root.
  CHECK(lv.u.u[lv.u.u.size() / 2] == doctest::Approx(std::sqrt(3.0 / (8 * kPi * kPi))).epsilon(1e-3));
}

TEST_CASE("scaling law lambda(2 g) = lambda(g) / 2") {
  for (const SingularManifold& m : {flat_cone(), flat_cone(4)}) {
    const double l = lambda_value(m, RadialGrid::standard(m)).lambda1;
    const SingularManifold s(m.n(), m.fiber(), m.profile().scaled(std::sqrt(2.0)), m.outer_bc());
    const double ls = lambda_value(s, RadialGrid::standard(s)).lambda1;
    CHECK(rel(ls, l / 2) <= 1e-10);
  }
}

TEST_CASE("constant family has vanishing derivatives") {
  const MetricFamily fam = MetricFamily::warp(flat_cone(), Variation::zero());
  const VariationReport r = full_variation(fam);
  CHECK(r.dlambda_fd == 0.0);
  CHECK(r.dlambda_hf == 0.0);
  CHECK(r.dlambda_geom == 0.0);
  CHECK(r.d2lambda_fd == 0.0);
  CHECK(r.d2lambda_pert == 0.0);
  CHECK(r.lambda0 > 0.0);
}

TEST_CASE("bump family on the flat cone: three first derivatives agree") {
  const Variation bump = Variation::bump(1.0);
  CHECK(bump.f(0.5) == doctest::Approx(0.0625));
  const MetricFamily fam = MetricFamily::warp(flat_cone(), bump);
  const VariationReport r = first_variation(fam);
  CHECK(r.fd_hf_residual <= 1e-6);
  CHECK(rel(r.dlambda_fd, r.dlambda_hf) <= 1e-6);
  CHECK(r.geom_hf_residual <= 1e-3);
  CHECK(rel(r.dlambda_geom, r.dlambda_hf) <= 1e-3);
  // Richardson consistency of the two central differences.
  CHECK(rel(r.dlambda_fd1, r.dlambda_fd2) <= 1e-5);
  const double oracle = flat_bump_oracle(bump);
  CHECK(rel(r.dlambda_hf, oracle) <= 1e-3);
  CHECK(rel(r.dlambda_geom, oracle) <= 1e-3);
  CHECK(r.weight_norm == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.inner_flux <= 1e-6);
  CHECK(r.divergence_flux <= 1e-6);
}

TEST_CASE("Hellmann-Feynman matches the extrapolated difference to 1e-8") {
  VariationOptions opt;
  opt.nodes = 512;
  opt.r_min_factor = 1e-3;
  const VariationReport k0 = first_variation(MetricFamily::warp(flat_cone(), Variation::bump(1.0)), opt);
  CHECK(k0.fd_hf_residual <= 1e-8);
  const VariationReport n4 = first_variation(MetricFamily::warp(flat_cone(4), Variation::bump(1.0)), opt);
  CHECK(n4.fd_hf_residual <= 1e-8);
  // Oscillating bumps have smaller derivatives, so the 1e-4 difference is
  // rounding-limited; Richardson on steps 2e-2 and 1e-2 is not.
  opt.step1 = 2e-2;
  opt.step2 = 1e-2;
  for (int k : {0, 1, 2, 3, 5}) {
    const VariationReport r = first_variation(MetricFamily::warp(flat_cone(), Variation::bump(1.0, k)), opt);
    INFO("k=" << k);
    CHECK(r.fd_hf_residual <= 1e-8);
  }
}

TEST_CASE("weight stays normalized along the family") {
  const MetricFamily fam = MetricFamily::warp(flat_cone(), Variation::bump(1.0, 2));
  const RadialGrid g = RadialGrid::standard(fam.base());
  for (double t : {-1e-2, -1e-3, 0.0, 1e-3, 1e-2}) {
    const LambdaValue lv = lambda_value(fam.at(t), fam.grid_at(g, t));
    CHECK(lv.weight_norm == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("inner flux shrinks with the cutoff") {
  const MetricFamily fam = MetricFamily::warp(flat_cone(), Variation::bump(1.0));
  double prev = 1.0;
  for (double f : {1e-2, 1e-4, 1e-6}) {
    VariationOptions opt;
    opt.r_min_factor = f;
    const VariationReport r = first_variation(fam, opt);
    CHECK(r.divergence_flux < prev);
    prev = r.divergence_flux;
  }
  CHECK(prev <= 1e-6);
}

TEST_CASE("pure scaling: first derivative -2 lambda, second 6 lambda") {
  for (const SingularManifold& m : {flat_cone(), flat_cone(4), round_s4()}) {
    const VariationReport r = full_variation(MetricFamily::scaling(m));
    INFO(m.profile().describe());
    CHECK(rel(r.dlambda_hf, -2 * r.lambda0) <= 1e-6);
    CHECK(rel(r.dlambda_fd, -2 * r.lambda0) <= 1e-6);
    CHECK(rel(r.d2lambda_fd, 6 * r.lambda0) <= 1e-6);
  }
}

TEST_CASE("second variation: stencil against perturbation sum") {
  const VariationReport r = second_variation_numeric(MetricFamily::warp(flat_cone(), Variation::bump(1.0)));
  CHECK(r.pairs_used == 64);
  CHECK(r.d2_residual <= 1e-3);
  CHECK(rel(r.d2lambda_pert, r.d2lambda_fd) <= 1e-3);
  VariationOptions more;
  more.pairs = 256;
  const VariationReport r2 = second_variation_numeric(MetricFamily::warp(flat_cone(), Variation::bump(1.0)), more);
  // More pairs tighten the truncated sum.
  CHECK(r2.d2_residual < r.d2_residual);
}

TEST_CASE("variations must vanish faster than r at the tip") {
  Variation linear;
  linear.id = "linear";
  linear.f = [](double r) { return r; };
  linear.df = [](double) { return 1.0; };
  linear.d2f = [](double) { return 0.0; };
  CHECK_THROWS_AS(MetricFamily::warp(flat_cone(), linear), InvalidParameter);
}

TEST_CASE("critical point report") {
  const CriticalPointReport flat = critical_point_check(flat_cone());
  CHECK(flat.ricci_hess_rr > 1e-2);
  REQUIRE(!flat.flags.empty());
  CHECK(flat.flags.front() == "Dirichlet boundary breaks criticality");
  CHECK(rel(flat.scaling_derivative, -2 * flat.lambda1) <= 1e-6);
  REQUIRE(flat.bump_gradient.size() == 10);

  // Round S^4: u is constant, so Ric + Hess f = Ric = 3 g; bumps move lambda.
  const CriticalPointReport s4 = critical_point_check(round_s4());
  CHECK(s4.ricci_hess_rr == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(std::any_of(s4.bump_gradient.begin(), s4.bump_gradient.end(),
                    [](double d) { return std::abs(d) > 1e-3; }));
  CHECK(rel(s4.scaling_derivative, -2 * s4.lambda1) <= 1e-6);
}

TEST_CASE("explicit-zero family gives a zero gradient") {
  const VariationReport r = first_variation(MetricFamily::warp(round_s4(), Variation::zero()));
  CHECK(r.dlambda_hf == 0.0);
  CHECK(r.dlambda_fd == 0.0);
}
