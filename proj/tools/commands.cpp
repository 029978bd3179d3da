#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <sstream>
#include <vector>

#include "conespec/asymptotics.hpp"
#include "conespec/cross_section.hpp"
#include "conespec/errors.hpp"
#include "conespec/geometry.hpp"
#include "conespec/lambda_variation.hpp"
#include "conespec/radial_modes.hpp"
#include "conespec/ricci_flow.hpp"
#include "conespec/spectrum.hpp"
#include "conespec/weighted_sobolev.hpp"

namespace conespec::cli {

using nlohmann::json;

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// NaN has no JSON spelling; it becomes null.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

CrossSection build_cross_section(const RunConfig& cfg) {
  const json& cs = cfg.at("manifold.cross_section");
  const int n = cfg.at("manifold.n").get<int>();
  const std::string kind = cs.at("kind").get<std::string>();
  try {
    if (kind == "round_sphere") return CrossSection::round_sphere(n - 1, cs.value("radius", 1.0));
    if (kind == "file") {
      if (!cs.contains("path")) cfg.fail("manifold.cross_section", "kind \"file\" needs \"path\"");
      std::filesystem::path p = cs["path"].get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(cfg.base_dir) / p;
      const CrossSection out = CrossSection::load(p.string());
      if (out.fiber_dim() != n - 1) cfg.fail("manifold.cross_section.path", "fiber_dim must equal n - 1");
      return out;
    }
    if (!cs.contains("modes") || !cs.contains("scal_min"))
      cfg.fail("manifold.cross_section", "kind \"explicit\" needs \"modes\" and \"scal_min\"");
    std::vector<CrossSectionMode> modes;
    for (const auto& m : cs["modes"]) modes.push_back({m.at("mu").get<double>(), m.at("multiplicity").get<int>(), -1});
    return CrossSection::explicit_list(n - 1, std::move(modes), cs["scal_min"].get<double>(),
                                       cs.value("label", std::string("explicit")), cs.value("volume", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    cfg.fail("manifold.cross_section", e.what());
  }
}

Profile build_profile(const RunConfig& cfg) {
  const json& p = cfg.at("manifold.profile");
  const std::string kind = p.at("kind").get<std::string>();
  const double L = p.at("length").get<double>();
  const bool diagnostic = cfg.at("manifold.diagnostic").get<bool>();
  try {
    if (kind == "exact_cone") return Profile::exact_cone(L);
    if (kind == "perturbed_cone") {
      if (!p.contains("eta") || !p.contains("alpha"))
        cfg.fail("manifold.profile", "kind \"perturbed_cone\" needs \"eta\" and \"alpha\"");
      return Profile::perturbed_cone(p["eta"].get<double>(), p["alpha"].get<double>(), L, diagnostic);
    }
    if (!p.contains("c")) cfg.fail("manifold.profile", "kind \"spindle\" needs \"c\"");
    return Profile::spindle(p["c"].get<double>(), L);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    cfg.fail("manifold.profile", e.what());
  }
}

SingularManifold build_manifold(const RunConfig& cfg) {
  CrossSection cs = build_cross_section(cfg);
  Profile profile = build_profile(cfg);
  const std::string outer = cfg.at("manifold.outer").get<std::string>();
  OuterBoundary bc = profile.two_tips() ? OuterBoundary::SecondConicalTip : OuterBoundary::Dirichlet;
  if (outer == "dirichlet") bc = OuterBoundary::Dirichlet;
  if (outer == "second_tip") bc = OuterBoundary::SecondConicalTip;
  try {
    return SingularManifold(cfg.at("manifold.n").get<int>(), std::move(cs), std::move(profile), bc,
                            cfg.at("manifold.diagnostic").get<bool>());
  } catch (const Error& e) {
    cfg.fail("manifold", e.what());
  }
}

RadialGrid build_grid(const RunConfig& cfg, const SingularManifold& mfd) {
  const auto nodes = cfg.at("grid.nodes").get<Eigen::Index>();
  const double f = cfg.at("grid.r_min_factor").get<double>();
  const std::string grading = cfg.at("grid.grading").get<std::string>();
  const double L = mfd.length();
  try {
    if (grading == "log") return RadialGrid::log_uniform(f * L, L, nodes);
    if (grading == "uniform") return RadialGrid::uniform(f * L, L, nodes);
    if (grading == "mirrored_log") return RadialGrid::mirrored_log(f * L, L, nodes);
    return RadialGrid::standard(mfd, nodes, f);
  } catch (const Error& e) {
    cfg.fail("grid", e.what());
  }
}

SpectrumOptions build_solver(const RunConfig& cfg) {
  SpectrumOptions opt;
  opt.rel_tol = cfg.at("solver.rel_tol").get<double>();
  opt.abs_floor = cfg.at("solver.abs_floor").get<double>();
  opt.max_levels = cfg.at("solver.max_levels").get<int>();
  const std::string bc = cfg.at("solver.bc").get<std::string>();
  opt.bc = bc == "robin" ? BCChoice::Robin : bc == "dirichlet" ? BCChoice::Dirichlet : BCChoice::Auto;
  return opt;
}

CommandResult cmd_spectrum(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  const RadialGrid grid = build_grid(cfg, mfd);
  const Spectrum spec = assemble(mfd, cfg.at("lambda_max").get<double>(), grid, build_solver(cfg));
  CommandResult res;
  std::ostringstream os;
  write_csv(spec, os);
  res.csv = os.str();
  res.headline = {{"lambda_1", spec.entries.empty() ? json(nullptr) : json(spec.entries.front().lambda)},
                  {"entries", spec.entries.size()},
                  {"modes_used", spec.num_modes_used},
                  {"lambda_max_certified", spec.lambda_max_certified},
                  {"semibounded", spec.semibounded}};
  return res;
}

CommandResult cmd_modes(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  const RadialGrid grid = build_grid(cfg, mfd);
  const SpectrumOptions opt = build_solver(cfg);
  std::size_t levels = cfg.at("modes.levels").get<std::size_t>();
  if (auto cnt = mfd.fiber().mode_count()) levels = std::min(levels, *cnt);

  struct Row {
    CrossSectionMode data;
    double deficit, nu, lambda1;
    InnerBC bc;
  };
  // One radial problem per level, solved concurrently; rows are written in level order.
  std::vector<std::future<Row>> jobs;
  for (std::size_t i = 0; i < levels; ++i) {
    jobs.push_back(std::async(std::launch::async, [&mfd, &grid, &opt, i] {
      const ModeODE mode = mode_ode(mfd, i);
      const ModeOperator op = discretize(mode, grid, opt.bc);
      Row row{mfd.fiber().mode(i), mode.deficit, mode.subcritical() ? std::nan("") : mode.nu(),
              eigenvalue_rel(op.t, 1, opt.rel_tol, opt.abs_floor), op.inner_bc};
      return row;
    }));
  }
  CommandResult res;
  std::ostringstream os;
  os << "level,mu,multiplicity,deficit,nu,inner_bc,lambda_1\n";
  json lambdas = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Row row = jobs[i].get();
    os << i << ',' << num(row.data.mu) << ',' << row.data.multiplicity << ',' << num(row.deficit) << ','
       << num(row.nu) << ',' << (row.bc == InnerBC::Robin ? "robin" : "dirichlet") << ',' << num(row.lambda1)
       << '\n';
    lambdas.push_back(row.lambda1);
  }
  res.csv = os.str();
  res.headline = {{"levels", levels}, {"lambda_1_per_level", lambdas}};
  return res;
}

CommandResult cmd_hardy(const RunConfig& cfg) {
  // Works on the tip data alone, so inadmissible links are reported rather than refused.
  const int n = cfg.at("manifold.n").get<int>();
  const CrossSection fiber = build_cross_section(cfg);
  const Profile profile = build_profile(cfg);
  const CrossSection tip = fiber.scaled(profile.tip_ratio());
  const ConditionReport cond = check_cone_condition(tip, n);
  // Margins within rounding of the threshold are the threshold itself.
  const double margin = std::abs(cond.margin) < 1e-12 ? 0.0 : cond.margin;
  std::size_t levels = cfg.at("hardy.levels").get<std::size_t>();
  if (auto cnt = tip.mode_count()) levels = std::min(levels, *cnt);

  CommandResult res;
  std::ostringstream os;
  os << "level,mu_tip,coefficient,semibounded,strictly_positive\n";
  for (std::size_t i = 0; i < levels; ++i) {
    const double mu = tip.mu(i);
    const HardyReport h = hardy_report(n, mu);
    os << i << ',' << num(mu) << ',' << num(h.coefficient) << ',' << (h.semibounded ? 1 : 0) << ','
       << (h.strictly_positive ? 1 : 0) << '\n';
  }
  res.csv = os.str();

  std::ostringstream verdict;
  verdict << "margin " << num(margin) << ", " << (cond.admissible ? "admissible" : "not admissible");
  res.headline = {{"admissible", cond.admissible}, {"margin", margin}, {"verdict", verdict.str()}};
  try {
    res.headline["delta0"] = compute_delta0(tip, n);
  } catch (const NoAdmissibleDelta&) {
    res.headline["delta0"] = nullptr;
  }
  const json& factors = cfg.at("hardy.r_min_factors");
  if (!factors.empty()) {
    const ModeODE mode(n, fiber.mu(0), profile);
    const std::vector<double> vals = hardy_refinement(mode, factors.get<std::vector<double>>(),
                                                      cfg.at("hardy.nodes_per_decade").get<int>());
    res.headline["refinement"] = vals;
    res.headline["detector_fired"] = vals.back() < -1e6;
  }
  return res;
}

CommandResult cmd_sobolev(const RunConfig& cfg) {
  const int n = cfg.at("manifold.n").get<int>();
  const int samples = cfg.at("sobolev.samples").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const auto eps_list = cfg.at("sobolev.eps").get<std::vector<double>>();
  CommandResult res;
  std::ostringstream os;
  os << "eps,trial,lhs,identity,rhs,margin,pass\n";
  double min_margin = INFINITY, max_identity = 0.0;
  bool all_pass = true;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const auto trials = cylinder_trials(n, eps_list[e], samples, seed + e);
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const CylinderReport& r = trials[t];
      const double margin = r.lhs - r.rhs;
      min_margin = std::min(min_margin, margin);
      max_identity = std::max(max_identity, std::abs(r.lhs - r.identity) / std::max(r.lhs, 1e-300));
      all_pass = all_pass && r.pass;
      os << num(eps_list[e]) << ',' << t << ',' << num(r.lhs) << ',' << num(r.identity) << ',' << num(r.rhs)
         << ',' << num(margin) << ',' << (r.pass ? 1 : 0) << '\n';
    }
  }
  res.csv = os.str();
  res.headline = {{"min_margin", min_margin}, {"max_identity_rel", max_identity}, {"all_pass", all_pass}};
  if (n == 3) {
    const SobolevSpot spot = sobolev_spot_check(n, cfg.at("sobolev.delta").get<double>(), samples, seed);
    res.headline["sobolev_fitted_c"] = spot.fitted_c;
  }
  return res;
}

CommandResult cmd_asymptotics(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  const RadialGrid grid = build_grid(cfg, mfd);
  const GroundState gs = ground_state(mfd, grid, build_solver(cfg));
  std::vector<std::pair<std::string, SlopeFit>> rows{{"leading", leading_exponent(gs.u, mfd)},
                                                     {"gradient", gradient_exponent(gs.u, mfd)}};
  CommandResult res;
  json headline = {{"lambda_1", gs.lambda1},
                   {"leading_slope", rows[0].second.fitted_slope},
                   {"leading_target", rows[0].second.target},
                   {"gradient_slope", rows[1].second.fitted_slope},
                   {"gradient_target", rows[1].second.target}};
  if (mfd.profile().kind() == ProfileKind::ExactCone) {
    const ExpansionReport exp =
        expansion_consistency(gs.u, mfd, gs.lambda1, cfg.at("asymptotics.depth").get<int>());
    for (std::size_t d = 0; d < exp.remainders.size(); ++d)
      rows.emplace_back("remainder_" + std::to_string(d), exp.remainders[d]);
    headline["expansion_pass"] = exp.pass;
    headline["amplitude"] = exp.amplitude;
  }
  std::ostringstream os;
  os << "quantity,fitted_slope,target,r_lo,r_hi,nodes,residual\n";
  for (const auto& [name, f] : rows)
    os << name << ',' << num(f.fitted_slope) << ',' << num(f.target) << ',' << num(f.r_lo) << ',' << num(f.r_hi)
       << ',' << f.nodes << ',' << num(f.residual) << '\n';
  res.csv = os.str();
  res.headline = headline;
  return res;
}

CommandResult cmd_lambda(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  const RadialGrid grid = build_grid(cfg, mfd);
  const LambdaValue lv = lambda_value(mfd, grid, build_solver(cfg));
  CommandResult res;
  std::ostringstream os;
  os << "r,u,f\n";
  for (Eigen::Index j = 0; j < lv.u.r.size(); ++j)
    os << num(lv.u.r[j]) << ',' << num(lv.u.u[j]) << ',' << num(lv.f[j]) << '\n';
  res.csv = os.str();
  res.headline = {{"lambda_1", lv.lambda1},
                  {"residual", lv.residual},
                  {"residual_fd", lv.residual_fd},
                  {"weight_norm", lv.weight_norm},
                  {"simple", lv.simple}};
  return res;
}

CommandResult cmd_variation(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  const json& fam = cfg.at("family");
  VariationOptions opt;
  opt.step1 = fam.at("step1").get<double>();
  opt.step2 = fam.at("step2").get<double>();
  opt.second_step = fam.at("second_step").get<double>();
  opt.pairs = fam.at("pairs").get<int>();
  opt.nodes = cfg.at("grid.nodes").get<Eigen::Index>();
  opt.r_min_factor = cfg.at("grid.r_min_factor").get<double>();
  opt.spectrum = build_solver(cfg);

  auto family = [&]() {
    if (fam.at("kind") == "scaling") return MetricFamily::scaling(mfd);
    const Variation v = fam.at("variation") == "zero" ? Variation::zero()
                                                      : Variation::bump(mfd.length(), fam.at("bump_k").get<int>());
    try {
      return MetricFamily::warp(mfd, v);
    } catch (const InvalidParameter& e) {
      cfg.fail("family", e.what());
    }
  }();
  const VariationReport r = fam.at("second_order").get<bool>() ? full_variation(family, opt)
                                                               : first_variation(family, opt);
  CommandResult res;
  std::ostringstream os;
  os << "family,lambda0,dlambda_fd,dlambda_hf,dlambda_geom,d2lambda_fd,d2lambda_pert,fd_hf_residual,"
        "geom_hf_residual,d2_residual\n";
  os << r.family_id << ',' << num(r.lambda0) << ',' << num(r.dlambda_fd) << ',' << num(r.dlambda_hf) << ','
     << num(r.dlambda_geom) << ',' << num(r.d2lambda_fd) << ',' << num(r.d2lambda_pert) << ','
     << num(r.fd_hf_residual) << ',' << num(r.geom_hf_residual) << ',' << num(r.d2_residual) << '\n';
  res.csv = os.str();
  res.headline = {{"family", r.family_id},         {"lambda0", jnum(r.lambda0)},
                  {"dlambda_fd", jnum(r.dlambda_fd)}, {"dlambda_hf", jnum(r.dlambda_hf)},
                  {"dlambda_geom", jnum(r.dlambda_geom)}, {"d2lambda_fd", jnum(r.d2lambda_fd)},
                  {"d2lambda_pert", jnum(r.d2lambda_pert)}, {"fd_hf_residual", jnum(r.fd_hf_residual)},
                  {"geom_hf_residual", jnum(r.geom_hf_residual)}, {"d2_residual", jnum(r.d2_residual)}};
  return res;
}

CommandResult cmd_flow(const RunConfig& cfg) {
  const SingularManifold mfd = build_manifold(cfg);
  if (!mfd.fiber().is_round_sphere() || std::abs(mfd.fiber().radius() - 1.0) > 1e-15)
    cfg.fail("manifold.cross_section", "flow needs the round unit sphere as fiber");
  const json& fl = cfg.at("flow");
  FlowOptions opt;
  opt.step.direction = fl.at("direction").get<int>();
  opt.step.drift_limit = fl.at("drift_limit").get<double>();
  opt.lambda_nodes = fl.at("lambda_nodes").get<Eigen::Index>();
  opt.r_min_factor = cfg.at("grid.r_min_factor").get<double>();
  const FlowState s0 = FlowState::from_profile(mfd.profile(), mfd.n(), fl.at("cells").get<Eigen::Index>());
  const double dt = fl.at("dt").get<double>();
  if (dt > s0.stability_bound()) cfg.fail("flow.dt", "exceeds the stability bound " + num(s0.stability_bound()));
  const FlowSeries series =
      run_with_lambda(s0, fl.at("T").get<double>(), dt, fl.at("sample_every").get<int>(), opt);
  const MonotonicityReport mono = check_monotone(series, opt.step.direction);
  CommandResult res;
  std::ostringstream os;
  write_csv(series, os);
  res.csv = os.str();
  res.headline = {{"samples", series.samples.size()},
                  {"lambda_first", jnum(series.samples.front().lambda)},
                  {"lambda_last", jnum(series.samples.back().lambda)},
                  {"monotone", mono.pass},
                  {"violations", mono.violations},
                  {"worst_margin", mono.worst}};
  return res;
}

}  // namespace

CommandResult run_command(const RunConfig& cfg) {
  const std::string& c = cfg.command;
  if (c == "spectrum") return cmd_spectrum(cfg);
  if (c == "modes") return cmd_modes(cfg);
  if (c == "hardy") return cmd_hardy(cfg);
  if (c == "sobolev-check") return cmd_sobolev(cfg);
  if (c == "asymptotics") return cmd_asymptotics(cfg);
  if (c == "lambda") return cmd_lambda(cfg);
  if (c == "variation") return cmd_variation(cfg);
  if (c == "flow") return cmd_flow(cfg);
  if (c == "selftest") return run_selftest();
  throw ConfigError(cfg.anchor("command") + ": command: unknown command \"" + c + "\"");
}

}  // namespace conespec::cli
