#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "conespec/errors.hpp"
#include "conespec/geometry.hpp"
#include "conespec/ricci_flow.hpp"
#include "doctest.h"

using namespace conespec;

namespace {

constexpr double kPi = std::numbers::pi;

FlowState round_s3(Eigen::Index cells) { return FlowState::from_profile(Profile::spindle(1.0, kPi), 3, cells); }

FlowState flat_state(Eigen::Index cells) { return FlowState::from_profile(Profile::exact_cone(), 3, cells); }

FlowOptions quick() {
  FlowOptions o;
  o.lambda_nodes = 512;
  return o;
}

}  // namespace

TEST_CASE("state construction") {
  const FlowState s = round_s3(100);
  CHECK(s.size() == 101);
  CHECK(s.m == 2);
  CHECK(s.n() == 3);
  CHECK(s.two_tips);
  CHECK(s.c == 1.0);
  CHECK((s.u.array() == 1.0).all());
  CHECK((s.arclength() - s.x).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(s.phi[50] == doctest::Approx(1.0).epsilon(1e-14));
  const double dx = kPi / 100;
  CHECK(s.stability_bound() == doctest::Approx(0.2 * dx * dx).epsilon(1e-12));
  CHECK(!flat_state(50).two_tips);
}

TEST_CASE("flat cone is stationary") {
  FlowState s = flat_state(200);
  CHECK(stationarity_defect(s) <= 1e-10);
  const Eigen::VectorXd phi0 = s.phi;
  const double dt = 0.9 * s.stability_bound();
  for (int k = 0; k < 50; ++k) {
    s = step(s, dt);
    CHECK(stationarity_defect(s) <= 1e-10);
  }
  CHECK((s.phi - phi0).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((s.u.array() - 1.0).abs().maxCoeff() <= 1e-10);
  CHECK(s.t == doctest::Approx(50 * dt).epsilon(1e-12));
}

TEST_CASE("round S^3 shrinks as g(t) = (1 - 4t) g(0)") {
  FlowState s = round_s3(200);
  // ds shrinks with the sphere, so stay well inside the initial bound.
  const double dt = 0.5 * s.stability_bound();
  for (int k = 0; k < 20; ++k) s = step(s, dt);
  const double scale = std::sqrt(1.0 - 4.0 * s.t);
  for (Eigen::Index j = 2; j + 2 < s.size(); ++j) {
    CHECK(s.phi[j] / std::sin(s.x[j]) == doctest::Approx(scale).epsilon(1e-2));
    CHECK(s.u[j] == doctest::Approx(scale).epsilon(1e-2));
  }
  // A longer horizon where the radius has visibly shrunk.
  FlowState l = round_s3(200);
  const double dl = 0.5 * l.stability_bound();
  const int steps = static_cast<int>(0.05 / dl);
  for (int k = 0; k < steps; ++k) l = step(l, dl);
  const double sl = std::sqrt(1.0 - 4.0 * l.t);
  CHECK(sl < 0.92);
  CHECK(l.phi[100] == doctest::Approx(sl).epsilon(1e-2));
  CHECK(l.u[100] == doctest::Approx(sl).epsilon(1e-2));
}

TEST_CASE("discrete rates match -2 Ric at t = 0") {
  // Ric_rr ~ r^{alpha-3} at the tip is square integrable only for alpha > 5/2.
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> eta(-0.3, 0.3), alpha(3.0, 5.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Profile p = Profile::perturbed_cone(eta(gen), alpha(gen));
    const FlowState s = FlowState::from_profile(p, 3, 2000);
    const CurvatureResidual r = curvature_residual(s, p);
    INFO(p.describe());
    CHECK(r.rr_l2 <= 1e-4);
    CHECK(r.fiber_l2 <= 1e-4);
    CHECK(r.fiber <= 1e-4);
  }
  // A cubic phi is differentiated exactly by central differences.
  const Profile cubic = Profile::perturbed_cone(0.3, 2.0);
  CHECK(curvature_residual(FlowState::from_profile(cubic, 3, 1000), cubic).rr <= 1e-8);
  const Profile sp = Profile::spindle(1.0, kPi);
  const CurvatureResidual r = curvature_residual(FlowState::from_profile(sp, 4, 2000), sp);
  CHECK(r.rr <= 1e-4);
  CHECK(r.fiber <= 1e-4);
  // Refinement: the L2 residual falls by about 4 per halving of dx.
  const Profile q = Profile::perturbed_cone(0.2, 4.0);
  const double coarse = curvature_residual(FlowState::from_profile(q, 3, 500), q).rr_l2;
  const double fine = curvature_residual(FlowState::from_profile(q, 3, 1000), q).rr_l2;
  CHECK(coarse / fine > 2.5);
}

TEST_CASE("steps above the stability bound are refused") {
  const FlowState s = round_s3(50);
  CHECK_THROWS_AS(step(s, 1.01 * s.stability_bound()), InvalidParameter);
}

TEST_CASE("flat cone lambda series is constant") {
  const FlowState s = flat_state(100);
  const FlowSeries f = run_with_lambda(s, 50 * 0.9 * s.stability_bound(), 0.9 * s.stability_bound(), 10, quick());
  REQUIRE(f.samples.size() == 6);
  for (const auto& x : f.samples) {
    CHECK(x.ok);
    CHECK(x.lambda == doctest::Approx(f.samples.front().lambda).epsilon(1e-8));
  }
  CHECK(check_monotone(f).pass);
}

TEST_CASE("round S^3: lambda = 6 / (1 - 4t) increases, reversed flow decreases") {
  // Node 2 sits at sin(x)/x = 1 - 1.7e-4 on 200 cells, inside the drift limit.
  const FlowState s = round_s3(200);
  const double dt = 0.5 * s.stability_bound();
  const int steps = static_cast<int>(0.02 / dt);
  const FlowSeries fwd = run_with_lambda(s, steps * dt, dt, steps / 5, quick());
  REQUIRE(fwd.samples.size() >= 6);
  for (const auto& x : fwd.samples) {
    REQUIRE(x.ok);
    CHECK(x.lambda == doctest::Approx(6.0 / (1.0 - 4.0 * x.t)).epsilon(1e-3));
    CHECK(x.err >= 0.0);
  }
  const MonotonicityReport up = check_monotone(fwd, 1);
  CHECK(up.pass);
  CHECK(up.violations == 0);

  // The reversed flow is backward parabolic and only survives briefly
  // (about t = 3e-4 on 200 cells), so it gets ten steps.
  FlowOptions back;
  back.step.direction = -1;
  const FlowSeries rev = run_with_lambda(s, 10 * dt, dt, 2, back);
  REQUIRE(rev.samples.size() == 6);
  for (const auto& x : rev.samples) {
    REQUIRE(x.ok);
    CHECK(x.lambda == doctest::Approx(6.0 / (1.0 + 4.0 * x.t)).epsilon(1e-3));
  }
  CHECK(check_monotone(rev, -1).pass);
  // The monitor is sign sensitive: each run fails the opposite test.
  CHECK(!check_monotone(fwd, -1).pass);
  CHECK(!check_monotone(rev, 1).pass);
}

TEST_CASE("pinned tip with c != 1 breaks down") {
  FlowState s = FlowState::from_profile(Profile::spindle(0.9, kPi), 3, 100);
  CHECK(s.c == doctest::Approx(0.9));
  CHECK(s.tip_ratio() == doctest::Approx(0.9).epsilon(1e-3));
  const double dt = 0.9 * s.stability_bound();
  CHECK_THROWS_AS(
      [&] {
        for (int k = 0; k < 100000; ++k) s = step(s, dt);
      }(),
      FlowBreakdown);
}

TEST_CASE("to_manifold reproduces the sampled profile") {
  const FlowState s = round_s3(400);
  const SingularManifold m = to_manifold(s);
  CHECK(m.n() == 3);
  CHECK(m.length() == doctest::Approx(kPi).epsilon(1e-12));
  for (double r : {0.3, 1.0, 2.0, 3.0}) CHECK(m.profile().phi(r) == doctest::Approx(std::sin(r)).epsilon(1e-6));
}

TEST_CASE("csv output") {
  const FlowState s = flat_state(50);
  const FlowSeries f = run_with_lambda(s, 4 * 0.5 * s.stability_bound(), 0.5 * s.stability_bound(), 2, quick());
  std::ostringstream os;
  write_csv(f, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,lambda,err,min_phi,tip_ratio");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
}
