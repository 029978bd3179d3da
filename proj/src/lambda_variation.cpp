#include "conespec/lambda_variation.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "conespec/asymptotics.hpp"
#include "conespec/errors.hpp"

namespace conespec {

namespace {

struct Ground {
  ModeOperator op;
  double lambda = 0.0;
  Eigen::VectorXd v;
};

ModeODE ground_mode(const SingularManifold& mfd) {
  return ModeODE(mfd.n(), mfd.fiber().mu(0), mfd.profile());
}

double ground_lambda(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt) {
  const ModeOperator op = discretize(ground_mode(mfd), grid, opt.bc);
  return eigenvalue_rel(op.t, 1, opt.rel_tol, opt.abs_floor);
}

Ground ground(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt) {
  Ground g{discretize(ground_mode(mfd), grid, opt.bc), 0.0, {}};
  g.lambda = eigenvalue_rel(g.op.t, 1, opt.rel_tol, opt.abs_floor);
  g.v = eigenvector(g.op.t, g.lambda);
  return g;
}

bool round_fiber(const SingularManifold& mfd) { return mfd.fiber().is_round_sphere(); }

// dQ/dt and d2Q/dt2 at t = 0 for phi + t dphi, Q = mu/phi^2 - m (phi'/phi)^2.
struct PotentialDerivatives {
  Eigen::VectorXd d1, d2;
};

PotentialDerivatives potential_derivatives(const ModeOperator& op, const SingularManifold& mfd,
                                           const Variation& var) {
  const int m = mfd.n() - 1;
  const double mu = op.mu;
  const Profile& p = mfd.profile();
  PotentialDerivatives out{Eigen::VectorXd(op.size()), Eigen::VectorXd(op.size())};
  for (Eigen::Index j = 0; j < op.size(); ++j) {
    const double r = op.nodes[j];
    const double a = p.dphi(r), b = var.df(r), c = p.phi(r), d = var.f(r);
    const double g = a / c;
    const double g1 = (b * c - a * d) / (c * c);
    const double g2 = -2.0 * d * (b * c - a * d) / (c * c * c);
    out.d1[j] = -2.0 * mu * d / (c * c * c) - 2.0 * m * g * g1;
    out.d2[j] = 6.0 * mu * d * d / (c * c * c * c) - m * (2.0 * g1 * g1 + 2.0 * g * g2);
  }
  return out;
}

// Samples on the full grid: the operator's unknowns plus Dirichlet ends where u = 0.
struct FullSamples {
  Eigen::VectorXd r, u;
  Eigen::Index offset = 0;  // index of the first unknown
};

FullSamples full_samples(const ModeOperator& op, const RadialGrid& grid, const Eigen::VectorXd& u) {
  FullSamples s;
  const Eigen::Index N = grid.size();
  const Eigen::Index lo = op.first, hi = op.last;
  const Eigen::Index count = (lo > 0 ? 1 : 0) + op.size() + (hi + 1 < N ? 1 : 0);
  s.r.resize(count);
  s.u.resize(count);
  Eigen::Index k = 0;
  if (lo > 0) {
    s.r[k] = grid.r[lo - 1];
    s.u[k++] = 0.0;
  }
  s.offset = k;
  for (Eigen::Index j = 0; j < op.size(); ++j, ++k) {
    s.r[k] = op.nodes[j];
    s.u[k] = u[j];
  }
  if (hi + 1 < N) {
    s.r[k] = grid.r[hi + 1];
    s.u[k] = 0.0;
  }
  return s;
}

double trapezoid(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index from = 0, Eigen::Index to = -1) {
  if (to < 0) to = x.size() - 1;
  double s = 0.0;
  for (Eigen::Index j = from; j < to; ++j) s += 0.5 * (x[j + 1] - x[j]) * (y[j] + y[j + 1]);
  return s;
}

struct GeometricIntegral {
  double weighted = 0.0;
  double raw = 0.0;
  double inner_share = 0.0;
  double divergence_flux = 0.0;
};

// int <-Ric - Hess f, a dr^2 + b h0> e^{-f} dvol with e^{-f} = u^2; b is passed as b(r).
GeometricIntegral geometric_integral(const SingularManifold& mfd, const RadialGrid& grid, const Ground& g,
                                     double a, const std::function<double(double)>& b) {
  const int m = mfd.n() - 1;
  const double vol = mfd.fiber().volume();
  const EigenfunctionProfile prof = eigenfunction_profile(g.op, g.v, vol, 0);
  const FullSamples s = full_samples(g.op, grid, prof.u);
  const Eigen::VectorXd du = nonuniform_derivative(s.r, s.u);
  const Eigen::VectorXd d2u = nonuniform_second_derivative(s.r, s.u);
  const Profile& p = mfd.profile();
  const Eigen::Index N = s.r.size();
  Eigen::VectorXd w(N), raw = Eigen::VectorXd::Zero(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double r = s.r[j], u = s.u[j];
    const double phi = p.phi(r), dphi = p.dphi(r);
    const double fiber_scale = b(r) * m / (phi * phi * phi * phi);
    const double pm = std::pow(phi, m);
    double rr = 0.0, fc = 0.0;
    if (u != 0.0) {
      const WarpedRicci ric = ricci_warped(mfd, r);
      rr = ric.rr;
      fc = ric.fiber_coeff;
    }
    // u^2 Hess f = (-2 u u'' + 2 u'^2) dr^2 + (-2 phi phi' u u') h0
    const double trr = -rr * u * u + 2.0 * u * d2u[j] - 2.0 * du[j] * du[j];
    const double tf = -fc * u * u + 2.0 * phi * dphi * u * du[j];
    w[j] = vol * (trr * a + tf * fiber_scale) * pm;
    if (u > 0.0) {
      const double fp = -2.0 * du[j] / u;
      const double fpp = -2.0 * d2u[j] / u + 2.0 * du[j] * du[j] / (u * u);
      raw[j] = vol * ((-rr - fpp) * a + (-fc - phi * dphi * fp) * fiber_scale) * pm;
    }
  }
  GeometricIntegral out;
  out.weighted = trapezoid(s.r, w);
  const Eigen::Index skip = N / 20;
  out.raw = trapezoid(s.r, raw, skip, N - 1 - skip);
  Eigen::Index inner_end = 0;
  while (inner_end + 1 < N && s.r[inner_end + 1] <= 10.0 * s.r[0]) ++inner_end;
  const double inner = trapezoid(s.r, w, 0, inner_end);
  out.inner_share = out.weighted != 0.0 ? std::abs(inner / out.weighted) : std::abs(inner);
  const Eigen::Index j0 = s.offset;
  out.divergence_flux = std::abs(vol * std::pow(p.phi(s.r[j0]), m) * 2.0 * s.u[j0] * du[j0]);
  return out;
}

double hf_warp(const Ground& g, const SingularManifold& mfd, const Variation& var) {
  const PotentialDerivatives q = potential_derivatives(g.op, mfd, var);
  return g.v.cwiseAbs2().dot(q.d1);
}

double relative(double a, double ref) {
  return std::abs(a - ref) / std::max(std::abs(ref), std::numeric_limits<double>::min());
}

// Every stencil point, t = 0 included, goes through the varied (or scaled)
// profile so that rounding is identical across the stencil.
SingularManifold stencil_point(const MetricFamily& family, double t) {
  const SingularManifold& b = family.base();
  if (family.kind() == FamilyKind::Warp) return b.with_profile(b.profile().varied(family.variation(), t));
  return family.at(t);
}

std::vector<double> lambdas_at(const MetricFamily& family, const RadialGrid& grid, const std::vector<double>& ts,
                               const SpectrumOptions& opt) {
  std::vector<std::future<double>> jobs;
  jobs.reserve(ts.size());
  for (double t : ts) {
    jobs.push_back(std::async(std::launch::async, [&family, &grid, &opt, t] {
      return ground_lambda(stencil_point(family, t), family.grid_at(grid, t), opt);
    }));
  }
  std::vector<double> out;
  out.reserve(ts.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

RadialGrid base_grid(const MetricFamily& family, const VariationOptions& opt) {
  return RadialGrid::standard(family.base(), opt.nodes, opt.r_min_factor);
}

void require_simple(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt) {
  const GroundState gs = ground_state(mfd, grid, opt);
  if (!gs.simple) throw DegenerateGroundState("variation: ground eigenvalue is not simple at t = 0");
}

}  // namespace

LambdaValue lambda_value(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt) {
  if (mfd.diagnostic() && !check_cone_condition(mfd.tip_cross_section(), mfd.n()).admissible)
    throw InvalidParameter("lambda_value: manifold violates the cone condition");
  const GroundState gs = ground_state(mfd, grid, opt);
  Ground g = ground(mfd, grid, opt);
  LambdaValue lv;
  lv.lambda1 = g.lambda;
  lv.simple = gs.simple;
  lv.u = eigenfunction_profile(g.op, g.v, mfd.fiber().volume(), 0);
  if (!(lv.u.u.array() > 0.0).all()) throw NumericalFailure("lambda_value: ground state changes sign");
  lv.f = -2.0 * lv.u.u.array().log();

  const Eigen::Index M = g.op.size();
  const Eigen::Index skip = M / 20;
  // (A w)_j / (m_j w_j) = (T v)_j / v_j is 2 Delta f - |grad f|^2 + R at node j.
  const Eigen::VectorXd tv = g.op.t.multiply(g.v);
  lv.residual = 0.0;
  for (Eigen::Index j = skip; j < M; ++j) lv.residual = std::max(lv.residual, std::abs(tv[j] / g.v[j] - lv.lambda1));

  const int m = mfd.n() - 1;
  const Eigen::VectorXd df = nonuniform_derivative(lv.u.r, lv.f);
  const Eigen::VectorXd d2f = nonuniform_second_derivative(lv.u.r, lv.f);
  lv.residual_fd = 0.0;
  const Profile& p = mfd.profile();
  const double L = mfd.length();
  for (Eigen::Index j = 1; j + 1 < M; ++j) {
    const double r = lv.u.r[j];
    if (r < 0.05 * L || r > 0.95 * L) continue;
    const double lap = d2f[j] + m * p.dphi(r) / p.phi(r) * df[j];
    const double val = 2.0 * lap - df[j] * df[j] + scal(mfd, r);
    lv.residual_fd = std::max(lv.residual_fd, std::abs(val - lv.lambda1));
  }
  lv.weight_norm = g.v.squaredNorm();
  lv.op = std::move(g.op);
  lv.v = std::move(g.v);
  return lv;
}

MetricFamily MetricFamily::warp(const SingularManifold& base, Variation v) {
  const double L = base.length();
  auto ratio = [&](double d) { return std::abs(v.f(d)) / std::pow(d, 1.0 + v.beta); };
  auto ratio_far = [&](double d) { return std::abs(v.f(L - d)) / std::pow(d, 1.0 + v.beta); };
  // Over three decades a bounded ratio may wobble but must not grow like a power.
  const double deep = ratio(1e-6 * L), shallow = ratio(1e-3 * L);
  if (!std::isfinite(deep) || deep > 10.0 * std::max(shallow, 1e-300) + 1e-300)
    throw InvalidParameter("MetricFamily::warp: delta_phi is not O(r^{1+beta}) at the tip");
  if (base.profile().two_tips()) {
    const double deep2 = ratio_far(1e-6 * L), shallow2 = ratio_far(1e-3 * L);
    if (!std::isfinite(deep2) || deep2 > 10.0 * std::max(shallow2, 1e-300) + 1e-300)
      throw InvalidParameter("MetricFamily::warp: delta_phi is not O((L-r)^{1+beta}) at the second tip");
  }
  return MetricFamily(base, std::move(v), FamilyKind::Warp);
}

MetricFamily MetricFamily::scaling(const SingularManifold& base) {
  return MetricFamily(base, Variation::zero(), FamilyKind::Scaling);
}

SingularManifold MetricFamily::at(double t) const {
  if (t == 0.0) return base_;
  if (kind_ == FamilyKind::Warp) return base_.with_profile(base_.profile().varied(variation_, t));
  if (!(1.0 + t > 0.0)) throw InvalidParameter("MetricFamily::at: scaling needs t > -1");
  return base_.with_profile(base_.profile().scaled(1.0 + t));
}

RadialGrid MetricFamily::grid_at(const RadialGrid& base_grid, double t) const {
  return kind_ == FamilyKind::Scaling ? base_grid.scaled(1.0 + t) : base_grid;
}

std::string MetricFamily::id() const {
  return kind_ == FamilyKind::Scaling ? std::string("scaling") : "warp:" + variation_.id;
}

VariationReport first_variation(const MetricFamily& family, const VariationOptions& opt) {
  const SingularManifold& mfd = family.base();
  const RadialGrid grid = base_grid(family, opt);
  require_simple(mfd, grid, opt.spectrum);
  const Ground g = ground(mfd, grid, opt.spectrum);

  VariationReport rep;
  rep.family_id = family.id();
  rep.lambda0 = g.lambda;
  rep.weight_norm = g.v.squaredNorm();

  const double h1 = opt.step1, h2 = opt.step2;
  const auto lam = lambdas_at(family, grid, {h1, -h1, h2, -h2}, opt.spectrum);
  rep.dlambda_fd1 = (lam[0] - lam[1]) / (2.0 * h1);
  rep.dlambda_fd2 = (lam[2] - lam[3]) / (2.0 * h2);
  // Central differences carry an h^2 error term; eliminate it.
  const double q = (h1 / h2) * (h1 / h2);
  rep.dlambda_fd = (q * rep.dlambda_fd2 - rep.dlambda_fd1) / (q - 1.0);

  if (family.kind() == FamilyKind::Warp) {
    rep.dlambda_hf = hf_warp(g, mfd, family.variation());
  } else {
    // A(t) = A/(1+t), B(t) = (1+t) B on the stretched grid: A' - lambda B' -> -T - lambda.
    rep.dlambda_hf = -g.v.dot(g.op.t.multiply(g.v)) - g.lambda;
  }

  if (round_fiber(mfd)) {
    GeometricIntegral gi;
    if (family.kind() == FamilyKind::Warp) {
      const Profile& p = mfd.profile();
      const Variation& var = family.variation();
      gi = geometric_integral(mfd, grid, g, 0.0, [&](double r) { return 2.0 * p.phi(r) * var.f(r); });
    } else {
      const Profile& p = mfd.profile();
      gi = geometric_integral(mfd, grid, g, 2.0, [&](double r) { return 2.0 * p.phi(r) * p.phi(r); });
    }
    rep.dlambda_geom = gi.weighted;
    rep.dlambda_geom_raw = gi.raw;
    rep.inner_flux = gi.inner_share;
    rep.divergence_flux = gi.divergence_flux;
  } else {
    rep.dlambda_geom = std::numeric_limits<double>::quiet_NaN();
    rep.dlambda_geom_raw = std::numeric_limits<double>::quiet_NaN();
  }
  if (rep.dlambda_hf == 0.0) {
    rep.fd_hf_residual = std::abs(rep.dlambda_fd);
    rep.geom_hf_residual = std::abs(rep.dlambda_geom);
  } else {
    rep.fd_hf_residual = relative(rep.dlambda_fd, rep.dlambda_hf);
    rep.geom_hf_residual = relative(rep.dlambda_geom, rep.dlambda_hf);
  }
  return rep;
}

VariationReport second_variation_numeric(const MetricFamily& family, const VariationOptions& opt) {
  const SingularManifold& mfd = family.base();
  const RadialGrid grid = base_grid(family, opt);
  require_simple(mfd, grid, opt.spectrum);
  const Ground g = ground(mfd, grid, opt.spectrum);

  VariationReport rep;
  rep.family_id = family.id();
  rep.lambda0 = g.lambda;
  rep.weight_norm = g.v.squaredNorm();

  const double h = opt.second_step;
  const auto lam = lambdas_at(family, grid, {2 * h, h, 0.0, -h, -2 * h}, opt.spectrum);
  // Symmetric pairs first: a constant lambda(t) then cancels exactly.
  rep.d2lambda_fd = (16.0 * (lam[1] + lam[3]) - (lam[0] + lam[4]) - 30.0 * lam[2]) / (12.0 * h * h);

  // lambda'' = v^T (A'' - lambda B'' - 2 lambda' B') v + 2 sum_k (v_k^T (A' - lambda B') v)^2 / (lambda - lambda_k)
  // in the symmetric (mass-scaled) basis.
  const Eigen::Index K = std::min<Eigen::Index>(opt.pairs, g.op.size() - 1);
  Eigen::VectorXd coupling_source;
  double direct = 0.0;
  if (family.kind() == FamilyKind::Warp) {
    const PotentialDerivatives qd = potential_derivatives(g.op, mfd, family.variation());
    direct = g.v.cwiseAbs2().dot(qd.d2);
    coupling_source = qd.d1.cwiseProduct(g.v);
  } else {
    const Eigen::VectorXd tv = g.op.t.multiply(g.v);
    const double dl = -g.v.dot(tv) - g.lambda;
    direct = 2.0 * g.v.dot(tv) - 2.0 * dl;
    coupling_source = -tv - g.lambda * g.v;
  }
  double sum = 0.0;
  for (Eigen::Index k = 2; k <= K + 1; ++k) {
    const double lk = eigenvalue_rel(g.op.t, k, opt.spectrum.rel_tol, opt.spectrum.abs_floor);
    const Eigen::VectorXd vk = eigenvector(g.op.t, lk);
    const double c = vk.dot(coupling_source);
    sum += c * c / (g.lambda - lk);
  }
  rep.pairs_used = static_cast<int>(K);
  rep.d2lambda_pert = direct + 2.0 * sum;
  const double scale = std::max(std::abs(rep.d2lambda_pert), std::numeric_limits<double>::min());
  rep.d2_residual = rep.d2lambda_pert == 0.0 ? std::abs(rep.d2lambda_fd)
                                             : std::abs(rep.d2lambda_fd - rep.d2lambda_pert) / scale;
  return rep;
}

VariationReport full_variation(const MetricFamily& family, const VariationOptions& opt) {
  VariationReport rep = first_variation(family, opt);
  const VariationReport second = second_variation_numeric(family, opt);
  rep.d2lambda_fd = second.d2lambda_fd;
  rep.d2lambda_pert = second.d2lambda_pert;
  rep.pairs_used = second.pairs_used;
  rep.d2_residual = second.d2_residual;
  return rep;
}

CriticalPointReport critical_point_check(const SingularManifold& mfd, const VariationOptions& opt) {
  if (!round_fiber(mfd)) throw UnsupportedOperation("critical_point_check: needs a round-sphere cross-section");
  const RadialGrid grid = RadialGrid::standard(mfd, opt.nodes, opt.r_min_factor);
  const LambdaValue lv = lambda_value(mfd, grid, opt.spectrum);
  CriticalPointReport rep;
  rep.lambda1 = lv.lambda1;

  const Eigen::VectorXd& r = lv.u.r;
  const Eigen::VectorXd df = nonuniform_derivative(r, lv.f);
  const Eigen::VectorXd d2f = nonuniform_second_derivative(r, lv.f);
  const Profile& p = mfd.profile();
  const double L = mfd.length();
  // Three-point differences of f lose ~eps/h^2 on the graded tip cells; sample the middle 90% of [0, L].
  for (Eigen::Index j = 1; j + 1 < r.size(); ++j) {
    if (r[j] < 0.05 * L || r[j] > 0.95 * L) continue;
    const WarpedRicci ric = ricci_warped(mfd, r[j]);
    const double phi = p.phi(r[j]);
    rep.ricci_hess_rr = std::max(rep.ricci_hess_rr, std::abs(ric.rr + d2f[j]));
    rep.ricci_hess_fiber =
        std::max(rep.ricci_hess_fiber, std::abs(ric.fiber_coeff + phi * p.dphi(r[j]) * df[j]) / (phi * phi));
  }
  const double resid = std::max(rep.ricci_hess_rr, rep.ricci_hess_fiber);
  if (resid > 1e-6) {
    rep.flags.push_back(mfd.outer_bc() == OuterBoundary::Dirichlet ? "Dirichlet boundary breaks criticality"
                                                                    : "Ric + Hess f does not vanish");
  } else {
    rep.flags.push_back("Ric + Hess f vanishes to 1e-6");
  }

  const Ground g{lv.op, lv.lambda1, lv.v};
  double gmax = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double d = hf_warp(g, mfd, Variation::bump(mfd.length(), k));
    rep.bump_gradient.push_back(d);
    gmax = std::max(gmax, std::abs(d));
  }
  rep.scaling_derivative = -g.v.dot(g.op.t.multiply(g.v)) - g.lambda;
  if (gmax > 1e-8) rep.flags.push_back("nonzero gradient along warped bump variations");
  return rep;
}

}  // namespace conespec
