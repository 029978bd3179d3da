#include "conespec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "conespec/errors.hpp"
#include "conespec/spline.hpp"

namespace conespec {

using Expansion = std::vector<std::pair<double, double>>;

struct Profile::Impl {
  ProfileKind kind;
  double length;
  double c0;
  bool two_tips;
  bool diagnostic;
  std::string desc;

  Impl(ProfileKind k, double l, double c, bool two, bool diag, std::string d)
      : kind(k), length(l), c0(c), two_tips(two), diagnostic(diag), desc(std::move(d)) {}
  virtual ~Impl() = default;
  virtual double phi(double r) const = 0;
  virtual double dphi(double r) const = 0;
  virtual double d2phi(double r) const = 0;
  virtual std::optional<Expansion> expansion() const { return std::nullopt; }
};

namespace {

constexpr double kPi = std::numbers::pi;

void require_length(double length) {
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidParameter("profile length must be positive");
}

struct ExactConeImpl final : Profile::Impl {
  explicit ExactConeImpl(double l) : Impl(ProfileKind::ExactCone, l, 1.0, false, false, "exact_cone") {}
  double phi(double r) const override { return r; }
  double dphi(double) const override { return 1.0; }
  double d2phi(double) const override { return 0.0; }
  std::optional<Expansion> expansion() const override { return Expansion{}; }
};

struct PerturbedConeImpl final : Profile::Impl {
  double eta, alpha;
  PerturbedConeImpl(double e, double a, double l, bool diag)
      : Impl(ProfileKind::PerturbedCone, l, 1.0, false, diag, "perturbed_cone"), eta(e), alpha(a) {}
  double phi(double r) const override { return r * (1.0 + eta * std::pow(r, alpha)); }
  double dphi(double r) const override { return 1.0 + eta * (1.0 + alpha) * std::pow(r, alpha); }
  double d2phi(double r) const override {
    return eta * alpha * (1.0 + alpha) * std::pow(r, alpha - 1.0);
  }
  // (1 + eta r^a)^2 - 1 = 2 eta r^a + eta^2 r^{2a}
  std::optional<Expansion> expansion() const override {
    return Expansion{{2.0 * eta, alpha}, {eta * eta, 2.0 * alpha}};
  }
};

struct SpindleImpl final : Profile::Impl {
  double c, k;
  SpindleImpl(double c_, double l)
      : Impl(ProfileKind::Spindle, l, c_, true, false, "spindle"), c(c_), k(kPi / l) {}
  double phi(double r) const override { return c * std::sin(k * r) / k; }
  double dphi(double r) const override { return c * std::cos(k * r); }
  double d2phi(double r) const override { return -c * k * std::sin(k * r); }
  // c^2 (sinc^2(kr) - 1) = c^2 sum_{j>=2} (-1)^{j+1} 2^{2j-1} k^{2j-2} r^{2j-2} / (2j)!
  std::optional<Expansion> expansion() const override {
    Expansion terms;
    double fact = 2.0;  // (2j)! at j = 1
    double pw = 2.0;    // 2^{2j-1} k^{2j-2} at j = 1
    for (int j = 2; j <= 40; ++j) {
      fact *= (2.0 * j - 1.0) * (2.0 * j);
      pw *= 4.0 * k * k;
      const double a = ((j % 2 == 0) ? -1.0 : 1.0) * c * c * pw / fact;
      if (a == 0.0 || !std::isfinite(a)) break;
      terms.emplace_back(a, 2.0 * j - 2.0);
    }
    return terms;
  }
};

struct TabulatedImpl final : Profile::Impl {
  CubicSpline psi;
  TabulatedImpl(CubicSpline s, double l, double c_, bool two)
      : Impl(ProfileKind::Tabulated, l, c_, two, false, "tabulated"), psi(std::move(s)) {}
  double b(double r) const { return two_tips ? r * (length - r) / length : r; }
  double db(double r) const { return two_tips ? (length - 2.0 * r) / length : 1.0; }
  double d2b() const { return two_tips ? -2.0 / length : 0.0; }
  double phi(double r) const override { return b(r) * psi.value(r); }
  double dphi(double r) const override { return db(r) * psi.value(r) + b(r) * psi.derivative(r); }
  double d2phi(double r) const override {
    return d2b() * psi.value(r) + 2.0 * db(r) * psi.derivative(r) + b(r) * psi.second_derivative(r);
  }
};

struct VariedImpl final : Profile::Impl {
  Profile base;
  Variation var;
  double t;
  VariedImpl(Profile b, Variation v, double t_)
      : Impl(ProfileKind::Varied, b.length(), b.tip_ratio(), b.two_tips(), b.diagnostic(),
             b.describe() + "+t*" + v.id),
        base(std::move(b)),
        var(std::move(v)),
        t(t_) {}
  double phi(double r) const override { return base.phi(r) + t * var.f(r); }
  double dphi(double r) const override { return base.dphi(r) + t * var.df(r); }
  double d2phi(double r) const override { return base.d2phi(r) + t * var.d2f(r); }
};

struct ScaledImpl final : Profile::Impl {
  Profile base;
  double s;
  ScaledImpl(Profile b, double s_)
      : Impl(ProfileKind::Scaled, b.length() * s_, b.tip_ratio(), b.two_tips(), b.diagnostic(),
             b.describe() + "(scaled)"),
        base(std::move(b)),
        s(s_) {}
  double phi(double r) const override { return s * base.phi(r / s); }
  double dphi(double r) const override { return base.dphi(r / s); }
  double d2phi(double r) const override { return base.d2phi(r / s) / s; }
  std::optional<Expansion> expansion() const override {
    auto e = base.tip_expansion();
    if (!e) return std::nullopt;
    for (auto& [a, beta] : *e) a *= std::pow(s, -beta);
    return e;
  }
};

}  // namespace

Variation Variation::zero() {
  auto z = [](double) { return 0.0; };
  return Variation{"zero", z, z, z, 1.0};
}

Variation Variation::bump(double length, int k) {
  require_length(length);
  if (k < 0) throw InvalidParameter("Variation::bump: k must be >= 0");
  const double L = length;
  const double w = k * kPi / L;
  // p = (r (L-r))^2 / L^3, q = cos(w r)
  auto p = [L](double r) { return r * r * (L - r) * (L - r) / (L * L * L); };
  auto dp = [L](double r) { return 2.0 * r * (L - r) * (L - 2.0 * r) / (L * L * L); };
  auto d2p = [L](double r) { return (2.0 * L * L - 12.0 * L * r + 12.0 * r * r) / (L * L * L); };
  std::ostringstream id;
  id << "bump" << k;
  return Variation{
      id.str(),
      [=](double r) { return p(r) * std::cos(w * r); },
      [=](double r) { return dp(r) * std::cos(w * r) - w * p(r) * std::sin(w * r); },
      [=](double r) {
        return d2p(r) * std::cos(w * r) - 2.0 * w * dp(r) * std::sin(w * r) - w * w * p(r) * std::cos(w * r);
      },
      1.0};
}

Profile Profile::exact_cone(double length) {
  require_length(length);
  return Profile(std::make_shared<ExactConeImpl>(length));
}

Profile Profile::perturbed_cone(double eta, double alpha, double length, bool diagnostic) {
  require_length(length);
  if (!std::isfinite(eta) || !std::isfinite(alpha) || !(alpha > 0.0)) {
    throw InvalidParameter("perturbed_cone: eta finite and alpha > 0 required");
  }
  if (alpha < 1.0 && !diagnostic) {
    throw InvalidParameter("perturbed_cone: alpha >= 1 required outside diagnostic mode");
  }
  // phi > 0 on (0, L] needs 1 + eta r^alpha > 0.
  if (1.0 + std::min(eta, 0.0) * std::pow(length, alpha) <= 0.0) {
    throw InvalidParameter("perturbed_cone: phi must stay positive on (0, L]");
  }
  return Profile(std::make_shared<PerturbedConeImpl>(eta, alpha, length, diagnostic));
}

Profile Profile::spindle(double c, double length) {
  require_length(length);
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("spindle: c must be positive");
  return Profile(std::make_shared<SpindleImpl>(c, length));
}

Profile Profile::tabulated(const Eigen::VectorXd& r, const Eigen::VectorXd& phi, double tip_ratio,
                           bool two_tips) {
  const Eigen::Index n = r.size();
  if (n < 4 || phi.size() != n) throw InvalidParameter("tabulated: need >= 4 matching samples");
  if (r[0] != 0.0) throw InvalidParameter("tabulated: first sample must sit at the tip r = 0");
  if (!(tip_ratio > 0.0)) throw InvalidParameter("tabulated: tip ratio must be positive");
  const double L = r[n - 1];
  require_length(L);
  Eigen::VectorXd psi(n);
  psi[0] = tip_ratio;
  for (Eigen::Index i = 1; i < n; ++i) {
    const bool closing = two_tips && i == n - 1;
    const double b = two_tips ? r[i] * (L - r[i]) / L : r[i];
    if (closing) {
      psi[i] = tip_ratio;
    } else {
      if (!(phi[i] > 0.0)) throw InvalidParameter("tabulated: phi must be positive in the interior");
      psi[i] = phi[i] / b;
    }
  }
  return Profile(std::make_shared<TabulatedImpl>(CubicSpline(r, psi), L, tip_ratio, two_tips));
}

Profile Profile::varied(const Variation& v, double t) const {
  if (!std::isfinite(t)) throw InvalidParameter("Profile::varied: t must be finite");
  return Profile(std::make_shared<VariedImpl>(*this, v, t));
}

Profile Profile::scaled(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("Profile::scaled: factor must be positive");
  return Profile(std::make_shared<ScaledImpl>(*this, s));
}

namespace {
void check_domain(const Profile::Impl& p, double r) {
  if (!(r >= 0.0) || r > p.length * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "profile evaluated outside [0, L]: r = " << r << ", L = " << p.length;
    throw DomainError(msg.str());
  }
}
}  // namespace

double Profile::phi(double r) const {
  check_domain(*impl_, r);
  return impl_->phi(r);
}
double Profile::dphi(double r) const {
  check_domain(*impl_, r);
  return impl_->dphi(r);
}
double Profile::d2phi(double r) const {
  check_domain(*impl_, r);
  return impl_->d2phi(r);
}

ProfileKind Profile::kind() const { return impl_->kind; }
double Profile::length() const { return impl_->length; }
double Profile::tip_ratio() const { return impl_->c0; }
bool Profile::two_tips() const { return impl_->two_tips; }
bool Profile::diagnostic() const { return impl_->diagnostic; }
std::string Profile::describe() const { return impl_->desc; }
std::optional<Expansion> Profile::tip_expansion() const { return impl_->expansion(); }

SingularManifold::SingularManifold(int n, CrossSection fiber, Profile profile, OuterBoundary outer,
                                   bool diagnostic)
    : n_(n), fiber_(std::move(fiber)), profile_(std::move(profile)), outer_(outer), diagnostic_(diagnostic) {
  if (n_ < 3 || n_ != fiber_.fiber_dim() + 1) {
    throw InvalidParameter("SingularManifold: n must equal fiber_dim + 1 and be >= 3");
  }
  if (profile_.two_tips() != (outer_ == OuterBoundary::SecondConicalTip)) {
    throw InvalidParameter("SingularManifold: two-tip profiles pair with the SecondConicalTip boundary");
  }
  if (diagnostic_) return;
  if (profile_.diagnostic()) {
    throw InvalidParameter("SingularManifold: diagnostic profile needs a diagnostic manifold");
  }
  const auto cone = check_cone_condition(tip_cross_section(), n_);
  if (!cone.admissible) {
    std::ostringstream msg;
    msg << "SingularManifold: cone condition fails (margin " << cone.margin << ")";
    throw InvalidParameter(msg.str());
  }
  const auto decay = check_asymptotic_condition(profile_, n_);
  if (!decay.pass) {
    std::ostringstream msg;
    msg << "SingularManifold: asymptotic condition fails at derivative order " << decay.first_failure;
    throw InvalidParameter(msg.str());
  }
}

SingularManifold SingularManifold::with_profile(Profile p) const {
  return SingularManifold(n_, fiber_, std::move(p), outer_, diagnostic_);
}

double scal(const SingularManifold& mfd, double r) {
  const auto& p = mfd.profile();
  if (!(r > 0.0) || !(r < p.length())) throw DomainError("scal: r must lie in (0, L)");
  const double m = mfd.n() - 1.0;
  const double f = p.phi(r);
  const double df = p.dphi(r);
  const double d2f = p.d2phi(r);
  // Grouped so that phi = r gives (R_h0 - m(m-1)) / r^2 with no rounding.
  return (mfd.fiber().scal_min() - m * (m - 1.0) * df * df) / (f * f) - 2.0 * m * d2f / f;
}

WarpedRicci ricci_warped(const SingularManifold& mfd, double r) {
  if (!mfd.fiber().is_round_sphere()) {
    throw UnsupportedOperation("ricci_warped: Einstein (round-sphere) cross-section required");
  }
  const auto& p = mfd.profile();
  if (!(r > 0.0) || !(r < p.length())) throw DomainError("ricci_warped: r must lie in (0, L)");
  const double m = mfd.n() - 1.0;
  const double f = p.phi(r);
  const double df = p.dphi(r);
  const double d2f = p.d2phi(r);
  WarpedRicci ric;
  ric.rr = -m * d2f / f;
  ric.fiber_coeff = (m - 1.0) * mfd.fiber().einstein_kappa() - (f * d2f + (m - 1.0) * df * df);
  return ric;
}

namespace {

// beta (beta-1) ... (beta-j+1); exact zero when beta is a nonnegative integer below j.
double falling_factorial(double beta, int j) {
  double out = 1.0;
  for (int q = 0; q < j; ++q) out *= (beta - q);
  return out;
}

// r^i |d^{i+1}/dr^{i+1} g| for g = (phi/r)^2 - c0^2 from the profile's own derivatives (i <= 1).
double generic_weighted_derivative(const Profile& p, double r, int i) {
  const double q = p.phi(r) / r;
  const double dq = (p.dphi(r) * r - p.phi(r)) / (r * r);
  if (i == 0) return std::abs(2.0 * q * dq);
  const double d2q = (p.d2phi(r) * r * r - 2.0 * (p.dphi(r) * r - p.phi(r))) / (r * r * r);
  return r * std::abs(2.0 * dq * dq + 2.0 * q * d2q);
}

}  // namespace

AsymptoticReport check_asymptotic_condition(const Profile& p, int n) {
  const int top = n / 2 + 2;
  AsymptoticReport rep;
  rep.bounds.assign(top + 1, 0.0);
  rep.evaluated.assign(top + 1, false);
  const double L = p.length();
  const auto expansion = p.tip_expansion();
  // Closed-form expansions are probed nine decades deep; numerically
  // differentiated profiles six, where cancellation in phi' r - phi stays benign.
  const int decades = expansion ? 9 : 6;
  constexpr int per_decade = 24;

  for (int i = 0; i <= top; ++i) {
    if (!expansion && i > 1) continue;
    rep.evaluated[i] = true;
    std::vector<double> decade_max(decades + 1, 0.0);
    for (int d = 0; d <= decades; ++d) {
      // Decade d covers [L 10^{-d-1}, L 10^{-d}] capped at L/2.
      for (int k = 0; k <= per_decade; ++k) {
        const double r = std::min(0.5 * L, L * std::pow(10.0, -d - 1.0 + double(k) / per_decade));
        double v = 0.0;
        if (expansion) {
          double sum = 0.0;
          for (const auto& [a, beta] : *expansion) {
            sum += a * falling_factorial(beta, i + 1) * std::pow(r, beta - i - 1.0);
          }
          v = std::pow(r, i) * std::abs(sum);
        } else {
          v = generic_weighted_derivative(p, r, i);
        }
        decade_max[d] = std::max(decade_max[d], std::isfinite(v) ? v : INFINITY);
      }
    }
    rep.bounds[i] = *std::max_element(decade_max.begin(), decade_max.end());
    // Unbounded: still growing by an order of magnitude toward the tip.
    const double deep = decade_max[decades];
    const double mid = decade_max[decades / 3];
    const bool unbounded = !std::isfinite(deep) || (deep > 1e-8 && deep > 10.0 * mid);
    if (unbounded && rep.pass) {
      rep.pass = false;
      rep.first_failure = i;
    }
  }
  return rep;
}

}  // namespace conespec
