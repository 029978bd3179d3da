#include "conespec/radial_modes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "conespec/errors.hpp"
#include "conespec/special_fn.hpp"

namespace conespec {

ModeODE::ModeODE(int n_, double mu_, Profile p) : n(n_), mu(mu_), profile(std::move(p)) {
  if (n < 3) throw InvalidParameter("ModeODE: n must be >= 3");
  const double c0 = profile.tip_ratio();
  deficit = mu / (c0 * c0) - (n - 2.0);
}

double ModeODE::nu() const {
  if (deficit < 0.0) {
    std::ostringstream msg;
    msg << "mode with mu = " << mu << " is subcritical (deficit " << deficit << ")";
    throw SubcriticalMode(msg.str(), deficit);
  }
  return std::sqrt(deficit);
}

double ModeODE::potential(double r) const {
  const double m = n - 1.0;
  if (profile.kind() == ProfileKind::ExactCone) {
    if (!(r > 0.0) || r > profile.length() * (1.0 + 1e-12)) throw DomainError("potential: r outside (0, L]");
    return (mu - m) / (r * r);
  }
  const double f = profile.phi(r);
  const double g = profile.dphi(r) / f;
  return mu / (f * f) - m * g * g;
}

ModeODE mode_ode(const SingularManifold& mfd, std::size_t level) {
  return ModeODE(mfd.n(), mfd.fiber().mu(level), mfd.profile());
}

std::function<double(double)> mode_potential(int n, double mu, const Profile& profile) {
  ModeODE mode(n, mu, profile);
  return [mode](double r) { return mode.potential(r); };
}

RadialGrid RadialGrid::log_uniform(double r_min, double length, Eigen::Index nodes) {
  if (!(r_min > 0.0) || !(length > r_min)) throw InvalidParameter("log grid: need 0 < r_min < L");
  if (nodes < 3) throw InvalidParameter("log grid: need >= 3 nodes");
  RadialGrid g;
  g.kind = GridKind::LogUniform;
  g.r.resize(nodes);
  const double a = std::log(r_min);
  const double step = (std::log(length) - a) / double(nodes - 1);
  for (Eigen::Index j = 0; j < nodes; ++j) g.r[j] = std::exp(a + step * double(j));
  g.r[0] = r_min;
  g.r[nodes - 1] = length;
  return g;
}

RadialGrid RadialGrid::uniform(double r_min, double length, Eigen::Index nodes) {
  if (!(r_min >= 0.0) || !(length > r_min)) throw InvalidParameter("uniform grid: need 0 <= r_min < L");
  if (nodes < 3) throw InvalidParameter("uniform grid: need >= 3 nodes");
  RadialGrid g;
  g.kind = GridKind::Uniform;
  g.r = Eigen::VectorXd::LinSpaced(nodes, r_min, length);
  return g;
}

RadialGrid RadialGrid::mirrored_log(double r_min, double length, Eigen::Index nodes) {
  if (!(r_min > 0.0) || !(0.5 * length > r_min)) throw InvalidParameter("mirrored grid: need 0 < r_min < L/2");
  if (nodes < 5) throw InvalidParameter("mirrored grid: need >= 5 nodes");
  const Eigen::Index half = (nodes + 1) / 2;  // nodes on [r_min, L/2]
  const RadialGrid left = log_uniform(r_min, 0.5 * length, half);
  RadialGrid g;
  g.kind = GridKind::MirroredLog;
  g.r.resize(2 * half - 1);
  for (Eigen::Index j = 0; j < half; ++j) {
    g.r[j] = left.r[j];
    g.r[2 * half - 2 - j] = length - left.r[j];
  }
  g.r[half - 1] = 0.5 * length;
  return g;
}

RadialGrid RadialGrid::standard(const SingularManifold& mfd, Eigen::Index nodes, double r_min_factor) {
  const double L = mfd.length();
  if (mfd.profile().two_tips()) return mirrored_log(r_min_factor * L, L, nodes);
  return log_uniform(r_min_factor * L, L, nodes);
}

RadialGrid RadialGrid::scaled(double s) const {
  if (!(s > 0.0)) throw InvalidParameter("RadialGrid::scaled: factor must be positive");
  RadialGrid g = *this;
  g.r *= s;
  return g;
}

Eigen::VectorXd ModeOperator::to_w(const Eigen::VectorXd& v) const {
  return v.cwiseQuotient(mass.cwiseSqrt());
}

Eigen::VectorXd ModeOperator::to_u(const Eigen::VectorXd& w) const { return liouville_inverse(n, phi, w); }

Eigen::VectorXd ModeOperator::from_u(const Eigen::VectorXd& u) const {
  return liouville_forward(n, phi, u).cwiseProduct(mass.cwiseSqrt());
}

SymTridiagd ModeOperator::kinetic() const {
  Eigen::VectorXd d = a_diag - q.cwiseProduct(mass);
  return SymTridiagd(d.cwiseQuotient(mass), t.offdiag);
}

Eigen::VectorXd liouville_forward(int n, const Eigen::VectorXd& phi, const Eigen::VectorXd& u) {
  return u.cwiseProduct(phi.array().pow(0.5 * (n - 1)).matrix());
}

Eigen::VectorXd liouville_inverse(int n, const Eigen::VectorXd& phi, const Eigen::VectorXd& w) {
  return w.cwiseQuotient(phi.array().pow(0.5 * (n - 1)).matrix());
}

ModeOperator discretize(const ModeODE& mode, const RadialGrid& grid, BCChoice bc) {
  const Eigen::VectorXd& r = grid.r;
  const Eigen::Index N = r.size();
  const double L = mode.profile.length();
  const bool two_tips = mode.profile.two_tips();
  if (N < 3) throw InvalidParameter("discretize: grid too small");
  if (!(r[0] >= 0.0) || r[N - 1] > L * (1.0 + 1e-12)) throw InvalidParameter("discretize: grid outside (0, L]");

  ModeOperator op;
  op.n = mode.n;
  op.mu = mode.mu;
  op.deficit = mode.deficit;
  op.two_tips = two_tips;
  op.diagnostic = mode.subcritical();

  const double nu = mode.subcritical() ? 0.0 : mode.nu();
  InnerBC inner = InnerBC::Dirichlet;
  if (bc == BCChoice::Robin) {
    if (mode.subcritical()) throw InvalidParameter("discretize: Robin end needs a supercritical mode");
    inner = InnerBC::Robin;
  } else if (bc == BCChoice::Auto && !mode.subcritical() && r[0] > 0.0) {
    inner = InnerBC::Robin;
  }
  if (inner == InnerBC::Robin && !(r[0] > 0.0)) {
    throw InvalidParameter("discretize: Robin end needs r_min > 0");
  }
  op.inner_bc = inner;

  op.first = inner == InnerBC::Robin ? 0 : 1;
  op.last = (two_tips && inner == InnerBC::Robin) ? N - 1 : N - 2;
  if (two_tips && !(r[N - 1] < L)) throw InvalidParameter("discretize: spindle grid must stop short of L");
  const Eigen::Index M = op.last - op.first + 1;
  if (M < 1) throw InvalidParameter("discretize: no interior unknowns");

  op.nodes = r.segment(op.first, M);
  op.mass.resize(M);
  op.q.resize(M);
  op.phi.resize(M);
  op.a_diag.resize(M);
  op.a_off.resize(std::max<Eigen::Index>(M - 1, 0));
  for (Eigen::Index j = 0; j < M; ++j) {
    const Eigen::Index g = op.first + j;
    const double hl = g > 0 ? r[g] - r[g - 1] : 0.0;
    const double hr = g + 1 < N ? r[g + 1] - r[g] : 0.0;
    op.mass[j] = 0.5 * (hl + hr);
    op.q[j] = mode.potential(r[g]);
    op.phi[j] = mode.profile.phi(r[g]);
    double k = 0.0;
    if (hl > 0.0) k += 4.0 / hl;
    if (hr > 0.0) k += 4.0 / hr;
    op.a_diag[j] = k + op.q[j] * op.mass[j];
    if (j + 1 < M) op.a_off[j] = -4.0 / hr;
  }
  if (inner == InnerBC::Robin) {
    op.a_diag[0] += 4.0 * (1.0 + nu) / (2.0 * r[0]);
    if (two_tips) op.a_diag[M - 1] += 4.0 * (1.0 + nu) / (2.0 * (L - r[N - 1]));
  }
  const Eigen::VectorXd s = op.mass.cwiseSqrt().cwiseInverse();
  Eigen::VectorXd td = op.a_diag.cwiseProduct(s).cwiseProduct(s);
  Eigen::VectorXd to(op.a_off.size());
  for (Eigen::Index j = 0; j + 1 < M; ++j) to[j] = op.a_off[j] * s[j] * s[j + 1];
  op.t = SymTridiagd(std::move(td), std::move(to));
  return op;
}

namespace {

bool near_integer(double x, double tol = 1e-12) { return std::abs(x - std::round(x)) <= tol * std::max(1.0, std::abs(x)); }

// U(a, N+1, z) for integer N >= 0 (logarithmic case):
// (-1)^{N+1}/(N! Gamma(a-N)) [M(a,N+1,z) ln z + sum_r (a)_r z^r/((N+1)_r r!)
//   (psi(a+r) - psi(1+r) - psi(1+N+r))] + (N-1)!/Gamma(a) z^{-N} sum_{r<N} (a-N)_r z^r/((1-N)_r r!)
double kummer_u_integer_b(double a, int N, double z) {
  const double rg = reciprocal_gamma(a - N);
  double bracket = 0.0;
  if (rg != 0.0) {
    KahanSum sum;
    double coef = 1.0;  // (a)_r z^r / ((N+1)_r r!)
    for (int k = 0; k < 4000; ++k) {
      const double term = coef * (digamma(a + k) - digamma(1.0 + k) - digamma(1.0 + N + k));
      sum.add(term);
      if (k > z && std::abs(term) <= 1e-17 * std::abs(sum.value())) break;
      coef *= (a + k) * z / ((N + 1.0 + k) * (k + 1.0));
    }
    bracket = kummer_m(a, N + 1.0, z) * std::log(z) + sum.value();
  }
  double nfact = 1.0;
  for (int k = 2; k <= N; ++k) nfact *= k;
  const double sign = (N % 2 == 0) ? -1.0 : 1.0;  // (-1)^{N+1}
  double out = sign / nfact * rg * bracket;
  if (N >= 1) {
    KahanSum fin;
    double coef = 1.0;  // (a-N)_r z^r / ((1-N)_r r!)
    for (int k = 0; k < N; ++k) {
      fin.add(coef);
      coef *= (a - N + k) * z / ((1.0 - N + k) * (k + 1.0));
    }
    out += (nfact / N) * reciprocal_gamma(a) * std::pow(z, -N) * fin.value();
  }
  return out;
}

}  // namespace

std::function<double(double)> closed_form_solution(const ModeODE& mode, double lambda, Branch branch) {
  if (mode.profile.kind() != ProfileKind::ExactCone) {
    throw UnsupportedOperation("closed_form_solution: exact cones only");
  }
  const double nu = mode.nu();
  const int n = mode.n;
  const double half = 0.5 * (n - 2);
  const double s_plus = -half + 0.5 * nu;
  const double s_minus = -half - 0.5 * nu;

  if (branch == Branch::Friedrichs) {
    const double b = 0.5 * nu + 1.0;
    return [=](double r) { return std::pow(r, s_plus) * hyp0f1(b, -lambda * r * r / 16.0); };
  }
  if (lambda == 0.0) {
    if (nu == 0.0) return [=](double r) { return std::pow(r, s_plus) * std::log(r); };
    return [=](double r) { return std::pow(r, s_minus); };
  }
  if (lambda > 0.0) {
    const double k = 0.5 * std::sqrt(lambda);
    return [=](double r) { return std::pow(r, -half) * bessel_y(0.5 * nu, k * r); };
  }
  // lambda < 0: w = W(z), z = kappa r, u = r^{-(n-1)/2} w.
  const double kappa = std::sqrt(-lambda);
  const double m_half = 0.5 * (n - 1);
  if (near_integer(nu)) {
    const int N = static_cast<int>(std::lround(nu));
    const double a = 0.5 * (1.0 + N);
    return [=](double r) {
      const double z = kappa * r;
      return std::pow(r, -m_half) * std::pow(z, a) * std::exp(-0.5 * z) * kummer_u_integer_b(a, N, z);
    };
  }
  const double a = 0.5 * (1.0 - nu);
  const double b = 1.0 - nu;
  return [=](double r) {
    const double z = kappa * r;
    return std::pow(r, -m_half) * std::pow(z, a) * std::exp(-0.5 * z) * kummer_m(a, b, z);
  };
}

double ode_residual(const ModeODE& mode, double lambda, const std::function<double(double)>& u, double r) {
  if (!(r > 0.0)) throw DomainError("ode_residual: r must be positive");
  const double m = mode.n - 1.0;
  const double c = mode.mu - m * (mode.n - 2.0);
  auto derivs = [&](double h) {
    const double up = u(r + h), u0 = u(r), um = u(r - h);
    return std::pair{(up - um) / (2.0 * h), (up - 2.0 * u0 + um) / (h * h)};
  };
  // Large steps keep the rounding floor near eps / h^2 small; repeated Richardson
  // on h / 2^k removes the truncation. The cap follows the oscillation length.
  constexpr int kLevels = 5;
  const double h = 0.3 * std::min(r, lambda != 0.0 ? 2.0 / std::sqrt(std::abs(lambda)) : r);
  std::array<double, kLevels> t1{}, t2{};
  for (int k = 0; k < kLevels; ++k) std::tie(t1[k], t2[k]) = derivs(std::ldexp(h, -k));
  for (int k = 1; k < kLevels; ++k) {
    const double f = std::ldexp(1.0, 2 * k);
    for (int l = kLevels - 1; l >= k; --l) {
      t1[l] = (f * t1[l] - t1[l - 1]) / (f - 1.0);
      t2[l] = (f * t2[l] - t2[l - 1]) / (f - 1.0);
    }
  }
  const double d1 = t1.back();
  const double d2 = t2.back();
  const double u0 = u(r);
  const double lhs = -4.0 * d2 - 4.0 * m * d1 / r + c * u0 / (r * r) - lambda * u0;
  const double scale = 4.0 * std::abs(d2) + 4.0 * m * std::abs(d1) / r + std::abs(c * u0) / (r * r) +
                       std::abs(lambda * u0);
  return scale > 0.0 ? std::abs(lhs) / scale : 0.0;
}

HardyReport hardy_report(int n, double mu_tip) {
  HardyReport rep;
  rep.coefficient = mu_tip - (n - 2.0);
  const double tol = 1e-12 * std::max(1.0, std::abs(mu_tip));
  rep.semibounded = rep.coefficient >= -tol;
  rep.strictly_positive = rep.coefficient > tol;
  return rep;
}

HardyReport hardy_report(const ModeODE& mode) {
  return hardy_report(mode.n, mode.deficit + (mode.n - 2.0));
}

double compute_delta0(const CrossSection& cs, int n) {
  const auto cond = check_cone_condition(cs, n);
  // Admissibility reduces to scal_min - (n-2) > delta ((n-2)^2/4 + 1).
  const double sup = (cs.scal_min() - (n - 2.0)) / (0.25 * (n - 2.0) * (n - 2.0) + 1.0);
  if (!cond.admissible || !(sup > 1e-12)) {
    std::ostringstream msg;
    msg << "compute_delta0: no admissible delta0 for " << cs.label() << " (margin " << cond.margin << ")";
    throw NoAdmissibleDelta(msg.str());
  }
  return 0.5 * sup;
}

std::vector<double> hardy_refinement(const ModeODE& mode, const std::vector<double>& r_min_factors,
                                     int nodes_per_decade, BCChoice bc) {
  const double L = mode.profile.length();
  std::vector<double> out;
  out.reserve(r_min_factors.size());
  for (double f : r_min_factors) {
    if (!(f > 0.0 && f < 0.5)) throw InvalidParameter("hardy_refinement: factors must lie in (0, 1/2)");
    const auto nodes = static_cast<Eigen::Index>(std::ceil(nodes_per_decade * std::log10(1.0 / f))) + 1;
    const RadialGrid grid = mode.profile.two_tips() ? RadialGrid::mirrored_log(f * L, L, 2 * nodes + 1)
                                                    : RadialGrid::log_uniform(f * L, L, nodes);
    const ModeOperator op = discretize(mode, grid, bc);
    out.push_back(eigenvalue_rel(op.t, 1, 1e-13, 1e-12));
  }
  return out;
}

SymTridiagd h1_gram(const ModeOperator& op, double ell) {
  const double n = op.n;
  const double c = 1.0 + (n - 1.0) * (n - 3.0) / 4.0 + ell;
  const Eigen::Index M = op.size();
  Eigen::VectorXd d(M), e(std::max<Eigen::Index>(M - 1, 0));
  for (Eigen::Index j = 0; j < M; ++j) {
    // kinetic part of A is 4x the w'^2 stiffness
    const double kin = op.a_diag[j] - op.q[j] * op.mass[j];
    double robin = 0.0;
    if (op.inner_bc == InnerBC::Robin && (j == 0 || (op.two_tips && j == M - 1))) {
      const double hl = j > 0 ? op.nodes[j] - op.nodes[j - 1] : 0.0;
      const double hr = j + 1 < M ? op.nodes[j + 1] - op.nodes[j] : 0.0;
      robin = kin - 4.0 * ((hl > 0.0 ? 1.0 / hl : 0.0) + (hr > 0.0 ? 1.0 / hr : 0.0));
    }
    const double r = op.nodes[j];
    d[j] = ((kin - robin) / 4.0 + c * op.mass[j] / (r * r)) / op.mass[j];
    if (j + 1 < M) e[j] = op.a_off[j] / 4.0 / std::sqrt(op.mass[j] * op.mass[j + 1]);
  }
  return SymTridiagd(std::move(d), std::move(e));
}

}  // namespace conespec
