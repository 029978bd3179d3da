#include "conespec/ricci_flow.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "conespec/errors.hpp"
#include "conespec/radial_modes.hpp"
#include "conespec/tridiag.hpp"

namespace conespec {

FlowState FlowState::from_profile(const Profile& p, int n, Eigen::Index cells) {
  if (n < 3) throw InvalidParameter("FlowState: n must be >= 3");
  if (cells < 8) throw InvalidParameter("FlowState: need at least 8 cells");
  FlowState s;
  s.m = n - 1;
  s.c = p.tip_ratio();
  s.two_tips = p.two_tips();
  const double L = p.length();
  s.x = Eigen::VectorXd::LinSpaced(cells + 1, 0.0, L);
  s.u = Eigen::VectorXd::Ones(cells + 1);
  s.phi.resize(cells + 1);
  for (Eigen::Index j = 0; j <= cells; ++j) s.phi[j] = (j == 0 || (s.two_tips && j == cells)) ? 0.0 : p.phi(s.x[j]);
  return s;
}

Eigen::VectorXd FlowState::arclength() const {
  Eigen::VectorXd s(size());
  s[0] = 0.0;
  for (Eigen::Index j = 1; j < size(); ++j) s[j] = s[j - 1] + 0.5 * (u[j - 1] + u[j]) * (x[j] - x[j - 1]);
  return s;
}

double FlowState::stability_bound() const {
  double ds = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 1; j < size(); ++j) ds = std::min(ds, 0.5 * (u[j - 1] + u[j]) * (x[j] - x[j - 1]));
  return 0.4 * ds * ds / 2.0;
}

double FlowState::tip_ratio() const {
  const Eigen::VectorXd s = arclength();
  return phi[2] / s[2];
}

double FlowState::min_phi() const {
  const Eigen::Index N = size() - 1;
  return phi.segment(1, two_tips ? N - 1 : N).minCoeff();
}

FlowRates flow_rates(const FlowState& st) {
  const Eigen::Index N = st.size() - 1;
  FlowRates r{Eigen::VectorXd::Zero(N + 1), Eigen::VectorXd::Zero(N + 1)};
  const Eigen::VectorXd s = st.arclength();
  const int m = st.m;
  for (Eigen::Index j = 1; j < N; ++j) {
    const double hl = s[j] - s[j - 1], hr = s[j + 1] - s[j];
    const double sl = (st.phi[j] - st.phi[j - 1]) / hl;
    const double sr = (st.phi[j + 1] - st.phi[j]) / hr;
    const double phi_ss = 2.0 * (sr - sl) / (hl + hr);
    const double phi_s = (st.phi[j + 1] - st.phi[j - 1]) / (hl + hr);
    const double phi = st.phi[j];
    r.dlogu[j] = m * phi_ss / phi;
    r.dphi[j] = phi_ss - (m - 1) * (1.0 - phi_s * phi_s) / phi;
  }
  // Pinned nodes follow the pin, not the PDE.
  r.dphi[1] = 0.0;
  if (st.two_tips) r.dphi[N - 1] = 0.0;
  // u at a tip (phi = 0, no rate of its own) follows its neighbour; a held ring keeps u.
  r.dlogu[0] = r.dlogu[1];
  r.dlogu[N] = st.two_tips ? r.dlogu[N - 1] : 0.0;
  return r;
}

FlowState step(const FlowState& st, double dt, const StepOptions& opt) {
  if (!(dt > 0.0)) throw InvalidParameter("step: dt must be positive");
  if (dt > st.stability_bound() * (1.0 + 1e-12))
    throw InvalidParameter("step: dt exceeds the explicit stability bound 0.4 min(ds)^2 / 2");
  if (opt.direction != 1 && opt.direction != -1) throw InvalidParameter("step: direction must be +1 or -1");
  const Eigen::Index N = st.size() - 1;
  const FlowRates r = flow_rates(st);
  FlowState next = st;
  const double k = opt.direction * dt;
  next.phi += k * r.dphi;
  next.u.array() *= (k * r.dlogu.array()).exp();
  next.t = st.t + dt;

  const Eigen::VectorXd s = next.arclength();
  next.phi[0] = 0.0;
  next.phi[1] = next.c * s[1];
  if (next.two_tips) {
    next.phi[N] = 0.0;
    next.phi[N - 1] = next.c * (s[N] - s[N - 1]);
  }
  if (!next.u.allFinite() || !next.phi.allFinite() || next.u.minCoeff() <= 0.0 || next.min_phi() <= 0.0) {
    std::ostringstream msg;
    msg << "step: positivity lost at t = " << next.t << " (min u " << next.u.minCoeff() << ", min phi "
        << next.min_phi() << ")";
    throw FlowBreakdown(msg.str());
  }
  const double drift = std::abs(next.tip_ratio() - next.c);
  if (drift > opt.drift_limit) {
    std::ostringstream msg;
    msg << "step: tip ratio drift " << drift << " exceeds " << opt.drift_limit << " at t = " << next.t;
    throw FlowBreakdown(msg.str());
  }
  return next;
}

SingularManifold to_manifold(const FlowState& st) {
  const Eigen::VectorXd s = st.arclength();
  const Profile p = Profile::tabulated(s, st.phi, st.c, st.two_tips);
  return SingularManifold(st.n(), CrossSection::round_sphere(st.m, 1.0), p,
                          st.two_tips ? OuterBoundary::SecondConicalTip : OuterBoundary::Dirichlet);
}

namespace {

double ground_eigenvalue(const SingularManifold& mfd, Eigen::Index nodes, double r_min_factor) {
  const RadialGrid grid = RadialGrid::standard(mfd, nodes, r_min_factor);
  const ModeOperator op = discretize(ModeODE(mfd.n(), mfd.fiber().mu(0), mfd.profile()), grid);
  return eigenvalue_rel(op.t, 1, 1e-14, 1e-12);
}

FlowSample evaluate(const FlowState& st, const FlowOptions& opt) {
  FlowSample out;
  out.t = st.t;
  out.min_phi = st.min_phi();
  out.tip_ratio = st.tip_ratio();
  try {
    const SingularManifold mfd = to_manifold(st);
    out.lambda = ground_eigenvalue(mfd, opt.lambda_nodes, opt.r_min_factor);
    const double coarse = ground_eigenvalue(mfd, opt.lambda_nodes / 2, opt.r_min_factor);
    out.err = std::abs(out.lambda - coarse) + std::max(1e-12, 1e-14 * std::abs(out.lambda));
  } catch (const Error& e) {
    out.ok = false;
    out.message = e.what();
  }
  return out;
}

}  // namespace

FlowSeries run_with_lambda(const FlowState& state0, double T, double dt, int sample_every, const FlowOptions& opt) {
  if (!(T >= 0.0) || !(dt > 0.0) || sample_every < 1) throw InvalidParameter("run_with_lambda: bad T, dt or sampling");
  const long steps = std::lround(T / dt);
  std::vector<FlowState> snaps{state0};
  FlowState cur = state0;
  for (long k = 1; k <= steps; ++k) {
    if (dt > cur.stability_bound() * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "run_with_lambda: stability bound fell to " << cur.stability_bound() << " < dt at t = " << cur.t;
      throw FlowBreakdown(msg.str());
    }
    cur = step(cur, dt, opt.step);
    if (k % sample_every == 0) snaps.push_back(cur);
  }
  FlowSeries series;
  series.final_state = cur;
  series.samples.resize(snaps.size());
  const std::size_t batch = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t b = 0; b < snaps.size(); b += batch) {
    std::vector<std::future<FlowSample>> jobs;
    for (std::size_t i = b; i < std::min(snaps.size(), b + batch); ++i)
      jobs.push_back(std::async(std::launch::async, [&snaps, &opt, i] { return evaluate(snaps[i], opt); }));
    for (std::size_t i = 0; i < jobs.size(); ++i) series.samples[b + i] = jobs[i].get();
  }
  return series;
}

MonotonicityReport check_monotone(const FlowSeries& series, int direction) {
  MonotonicityReport rep;
  const auto& s = series.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    if (!s[k].ok || !s[k + 1].ok) {
      ++rep.violations;
      rep.pass = false;
      continue;
    }
    const double margin = direction * (s[k + 1].lambda - s[k].lambda) + s[k].err;
    rep.worst = k == 0 ? margin : std::min(rep.worst, margin);
    if (margin < 0.0) {
      ++rep.violations;
      rep.pass = false;
    }
  }
  return rep;
}

double stationarity_defect(const FlowState& st) {
  const FlowRates r = flow_rates(st);
  return std::max(r.dphi.cwiseAbs().maxCoeff(), (r.dlogu.cwiseProduct(st.u)).cwiseAbs().maxCoeff());
}

CurvatureResidual curvature_residual(const FlowState& st, const Profile& p) {
  const FlowRates r = flow_rates(st);
  const SingularManifold mfd(st.n(), CrossSection::round_sphere(st.m, 1.0), p,
                             st.two_tips ? OuterBoundary::SecondConicalTip : OuterBoundary::Dirichlet);
  CurvatureResidual out;
  const Eigen::Index N = st.size() - 1;
  for (Eigen::Index j = 2; j <= N - 2; ++j) {
    const WarpedRicci ric = ricci_warped(mfd, st.x[j]);
    // g_ss = u^2 with u = 1 at t = 0, so d_t g_ss = 2 d_t log u.
    const double err = std::abs(2.0 * r.dlogu[j] + 2.0 * ric.rr);
    const double ef = std::abs(2.0 * st.phi[j] * r.dphi[j] + 2.0 * ric.fiber_coeff);
    const double dx = 0.5 * (st.x[j + 1] - st.x[j - 1]);
    out.rr = std::max(out.rr, err);
    out.fiber = std::max(out.fiber, ef);
    out.rr_l2 += err * err * dx;
    out.fiber_l2 += ef * ef * dx;
  }
  out.rr_l2 = std::sqrt(out.rr_l2);
  out.fiber_l2 = std::sqrt(out.fiber_l2);
  return out;
}

void write_csv(const FlowSeries& series, std::ostream& os) {
  os << "t,lambda,err,min_phi,tip_ratio\n";
  os << std::setprecision(12);
  for (const auto& s : series.samples) {
    os << s.t << ',';
    if (s.ok) os << s.lambda; else os << "nan";
    os << ',' << s.err << ',' << s.min_phi << ',' << s.tip_ratio << '\n';
  }
}

}  // namespace conespec
