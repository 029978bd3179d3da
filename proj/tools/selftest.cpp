#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "conespec/asymptotics.hpp"
#include "conespec/cross_section.hpp"
#include "conespec/errors.hpp"
#include "conespec/geometry.hpp"
#include "conespec/lambda_variation.hpp"
#include "conespec/radial_modes.hpp"
#include "conespec/ricci_flow.hpp"
#include "conespec/special_fn.hpp"
#include "conespec/spectrum.hpp"
#include "conespec/tridiag.hpp"
#include "conespec/weighted_sobolev.hpp"

namespace conespec::cli {

namespace {

struct Check {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

Check near(std::string name, double value, double expected, double tol) {
  return {std::move(name), value, expected, tol, std::abs(value - expected) <= tol};
}

// value 1 when the expected error type was raised, 0 otherwise.
template <typename E>
Check raises(std::string name, const std::function<void()>& body) {
  double hit = 0.0;
  try {
    body();
  } catch (const E&) {
    hit = 1.0;
  }
  return {std::move(name), hit, 1.0, 0.0, hit == 1.0};
}

SingularManifold flat_cone() {
  return SingularManifold(3, CrossSection::round_sphere(2, 1.0), Profile::exact_cone(), OuterBoundary::Dirichlet);
}

std::vector<Check> checks() {
  std::vector<Check> out;
  out.push_back(near("bessel_j(0,0)", bessel_j(0.0, 0.0), 1.0, 0.0));
  out.push_back(near("kummer_m(a,b,0)", kummer_m(0.7, 1.3, 0.0), 1.0, 0.0));
  out.push_back(near("kummer_m(1,1,1)", kummer_m(1.0, 1.0, 1.0), 2.718281828459045, 1e-14));
  out.push_back(near("digamma(2)-digamma(1)", digamma(2.0) - digamma(1.0), 1.0, 1e-14));
  out.push_back(near("ln_gamma(5)", ln_gamma(5.0), std::log(24.0), 1e-14));

  out.push_back(near("scal_min S2(c) at c=1e6", CrossSection::round_sphere(2, 1e6).scal_min(), 0.0, 1e-11));
  out.push_back(near("cone margin S2(1) n=3", check_cone_condition(CrossSection::round_sphere(2, 1.0), 3).margin,
                     1.0, 1e-14));
  out.push_back(near("cone margin S3(1) n=4", check_cone_condition(CrossSection::round_sphere(3, 1.0), 4).margin,
                     4.0, 1e-14));

  const SingularManifold flat = flat_cone();
  {
    const AsymptoticReport a = check_asymptotic_condition(Profile::exact_cone(), 3);
    double worst = 0.0;
    for (double b : a.bounds) worst = std::max(worst, std::abs(b));
    out.push_back(near("exact cone asymptotic bounds", worst, 0.0, 0.0));
    double ric = 0.0, r_scal = 0.0;
    for (double r : {1e-6, 1e-3, 0.1, 0.5, 0.99}) {
      const WarpedRicci w = ricci_warped(flat, r);
      ric = std::max({ric, std::abs(w.rr), std::abs(w.fiber_coeff)});
      r_scal = std::max(r_scal, std::abs(scal(flat, r)));
    }
    out.push_back(near("flat cone Ricci", ric, 0.0, 1e-12));
    out.push_back(near("flat cone scalar curvature", r_scal, 0.0, 1e-12));
  }
  {
    const auto u = closed_form_solution(ModeODE(3, 2.0, Profile::exact_cone()), 0.0, Branch::Friedrichs);
    out.push_back(near("harmonic Friedrichs solution constant", u(0.37) - u(1e-5), 0.0, 1e-12));
  }
  {
    const ModeOperator op = discretize(ModeODE(3, 2.0, Profile::exact_cone()), RadialGrid::uniform(0.0, 1.0, 4),
                                       BCChoice::Dirichlet);
    out.push_back(near("toy grid smallest eigenvalue", eigenvalue_rel(op.t, 1, 1e-15, 1e-13), 36.0, 1e-10));
  }
  out.push_back(near("hardy coefficient n=3 mu=2", hardy_report(3, 2.0).coefficient, 1.0, 0.0));
  out.push_back({"hardy borderline n=3 mu=1 semibounded", hardy_report(3, 1.0).semibounded ? 1.0 : 0.0, 1.0, 0.0,
                 hardy_report(3, 1.0).semibounded && hardy_report(3, 1.0).coefficient == 0.0});

  const SymTridiagd two(Eigen::Vector2d(2.0, 2.0), Eigen::VectorXd::Constant(1, -1.0));
  out.push_back(near("sturm count 2x2 below 1.5", static_cast<double>(sturm_count(two, 1.5)), 1.0, 0.0));
  out.push_back(near("sturm count 1x1 below 1",
                     static_cast<double>(sturm_count(SymTridiagd(Eigen::VectorXd::Zero(1), Eigen::VectorXd()), 1.0)),
                     1.0, 0.0));
  {
    const Eigen::VectorXd ev = eigenvalues(two, 1, 2, 1e-14);
    out.push_back(near("2x2 eigenvalues", std::max(std::abs(ev[0] - 1.0), std::abs(ev[1] - 3.0)), 0.0, 1e-13));
    const Eigen::VectorXd v = eigenvector(two, 1.0);
    out.push_back(near("2x2 eigenvector", std::abs(v[0] - v[1]) + std::abs(v[0] - std::sqrt(0.5)), 0.0, 1e-12));
  }
  out.push_back(raises<NumericalFailure>("defective tolerance raises", [&] { eigenvector(two, 1.7, 1e-14, 2); }));

  const RadialGrid grid = RadialGrid::standard(flat, 1024);
  {
    const Spectrum spec = assemble(flat, 30.0, grid);
    out.push_back({"empty certified spectrum below 4 pi^2", static_cast<double>(spec.entries.size()), 0.0, 0.0,
                   spec.entries.empty() && spec.lambda_max_certified >= 30.0});
  }
  {
    SpectrumOptions opt;
    opt.vectors = true;
    const Spectrum spec = assemble(flat, 50.0, grid, opt);
    const ModeSpectrum& lev = spec.level(0);
    const EigenfunctionProfile u = eigenfunction_profile(lev.op, lev.vectors[0], spec.volume, 0);
    const double q = rayleigh(lev.op, u.u);
    out.push_back(near("ground state saturates the quotient", std::abs(q - lev.lambdas[0]) / lev.lambdas[0], 0.0,
                       1e-8));
    out.push_back(near("ground state nodal domains", radial_sign_changes(u.u) + 1.0, 1.0, 0.0));
  }
  out.push_back(raises<NonSemibounded>("subcritical diagnostic cone raises", [] {
    const SingularManifold bad(3, CrossSection::round_sphere(2, std::sqrt(2.5)), Profile::exact_cone(),
                               OuterBoundary::Dirichlet, true);
    ground_state(bad, RadialGrid::standard(bad, 512));
  }));

  {
    RadialFunction zero;
    zero.u = zero.du = zero.d2u = [](double) { return 0.0; };
    out.push_back(near("h_norm of zero", h_norm(zero, 1, 0.5, flat).value, 0.0, 0.0));
    const CylinderReport c = cone_cylinder_check({zero}, 1.0, 3);
    out.push_back({"cylinder check of zero", c.lhs + c.rhs, 0.0, 0.0, c.lhs == 0.0 && c.rhs == 0.0 && c.pass});
    const double delta = 0.7;
    RadialFunction power;
    power.u = [delta](double r) { return std::pow(r, delta); };
    power.du = [delta](double r) { return delta * std::pow(r, delta - 1.0); };
    power.d2u = [delta](double r) { return delta * (delta - 1.0) * std::pow(r, delta - 2.0); };
    out.push_back(near("c_norm of r^delta", c_norm(power, 0, delta, 1e-3, 1.0), 1.0, 1e-14));
  }
  {
    const GroundState gs = ground_state(flat, RadialGrid::standard(flat, 2048));
    const SlopeFit lead = leading_exponent(gs.u, flat);
    const ExpansionReport e0 = expansion_consistency(gs.u, flat, gs.lambda1, 0, lead.r_lo, lead.r_hi);
    out.push_back(near("depth 0 expansion equals leading fit", e0.remainders[0].fitted_slope, lead.fitted_slope, 0.0));

    const double s = std::sqrt(2.0);
    const SingularManifold big = flat.with_profile(flat.profile().scaled(s));
    const GroundState gb = ground_state(big, RadialGrid::standard(flat, 2048).scaled(s));
    out.push_back(near("lambda scales as 1/c^2", gb.lambda1 * 2.0 / gs.lambda1, 1.0, 1e-12));
  }
  {
    VariationOptions opt;
    opt.nodes = 512;
    const VariationReport z = first_variation(MetricFamily::warp(flat, Variation::zero()), opt);
    out.push_back(near("zero family derivative", std::abs(z.dlambda_fd) + std::abs(z.dlambda_hf), 0.0, 0.0));
    const CriticalPointReport cp = critical_point_check(flat, opt);
    bool flagged = false;
    for (const auto& f : cp.flags) flagged = flagged || f == "Dirichlet boundary breaks criticality";
    out.push_back({"Dirichlet boundary flagged", flagged ? 1.0 : 0.0, 1.0, 0.0, flagged});
  }
  {
    const FlowState s0 = FlowState::from_profile(Profile::exact_cone(), 3, 100);
    out.push_back(near("flat cone stationary", stationarity_defect(s0), 0.0, 1e-10));
    FlowOptions opt;
    opt.lambda_nodes = 512;
    const double dt = 0.5 * s0.stability_bound();
    const FlowSeries series = run_with_lambda(s0, 20 * dt, dt, 5, opt);
    double spread = 0.0;
    for (const auto& smp : series.samples) spread = std::max(spread, std::abs(smp.lambda - series.samples[0].lambda));
    out.push_back(near("flat cone lambda series constant", spread, 0.0, 1e-8));
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

CommandResult run_selftest() {
  CommandResult res;
  std::ostringstream os;
  os << "check,value,expected,tolerance,pass\n";
  int failed = 0;
  const auto list = checks();
  for (const auto& c : list) {
    os << c.name << ',' << num(c.value) << ',' << num(c.expected) << ',' << num(c.tolerance) << ','
       << (c.pass ? 1 : 0) << '\n';
    if (!c.pass) ++failed;
  }
  res.csv = os.str();
  res.headline = {{"checks", list.size()}, {"failed", failed}};
  res.checks_passed = failed == 0;
  return res;
}

}  // namespace conespec::cli
