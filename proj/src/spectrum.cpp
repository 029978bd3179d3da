#include "conespec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "conespec/errors.hpp"

namespace conespec {

const ModeSpectrum& Spectrum::level(int i) const {
  for (const auto& m : modes) {
    if (m.level == i) return m;
  }
  throw InvalidParameter("Spectrum::level: level not assembled");
}

int Spectrum::first_index(std::size_t e) const {
  if (e >= entries.size()) throw InvalidParameter("Spectrum::first_index: entry out of range");
  int idx = 1;
  for (std::size_t j = 0; j < e; ++j) idx += entries[j].multiplicity;
  // Entries tied in lambda share the index of the first one.
  while (e > 0 && entries[e - 1].lambda == entries[e].lambda) {
    --e;
    idx -= entries[e].multiplicity;
  }
  return idx;
}

double mode_floor(const ModeOperator& op, const SpectrumOptions& opt) {
  const SymTridiagd k = op.kinetic();
  const double kmin = eigenvalue_rel(k, 1, opt.rel_tol, opt.abs_floor);
  // Bisection returns the bracket midpoint; step down by the tolerance to stay a lower bound.
  const double slack = std::max(opt.abs_floor, opt.rel_tol * std::abs(kmin));
  return op.q.minCoeff() + kmin - slack;
}

namespace {

ModeSpectrum solve_level(const SingularManifold& mfd, int level, double lambda_max, const RadialGrid& grid,
                         const SpectrumOptions& opt) {
  ModeSpectrum ms;
  ms.level = level;
  ms.data = mfd.fiber().mode(static_cast<std::size_t>(level));
  ms.op = discretize(ModeODE(mfd.n(), ms.data.mu, mfd.profile()), grid, opt.bc);
  ms.floor = mode_floor(ms.op, opt);
  if (ms.floor > lambda_max) return ms;
  const Eigen::Index below = sturm_count(ms.op.t, lambda_max);
  for (Eigen::Index k = 1; k <= below; ++k) {
    const double lam = eigenvalue_rel(ms.op.t, k, opt.rel_tol, opt.abs_floor);
    if (lam > lambda_max) break;
    ms.lambdas.push_back(lam);
    if (opt.vectors) ms.vectors.push_back(eigenvector(ms.op.t, lam));
  }
  return ms;
}

}  // namespace

Spectrum assemble(const SingularManifold& mfd, double lambda_max, const RadialGrid& grid,
                  const SpectrumOptions& opt) {
  if (!std::isfinite(lambda_max)) throw InvalidParameter("assemble: lambda_max must be finite");
  Spectrum spec;
  spec.n = mfd.n();
  spec.volume = mfd.fiber().volume();
  spec.lambda_max_certified = lambda_max;

  const auto available = mfd.fiber().mode_count();
  const int cap = available ? std::min<int>(opt.max_levels, static_cast<int>(*available)) : opt.max_levels;
  const int batch = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  bool done = false;
  int next = 0;
  while (!done && next < cap) {
    const int end = std::min(cap, next + batch);
    std::vector<std::future<ModeSpectrum>> jobs;
    for (int lev = next; lev < end; ++lev) {
      jobs.push_back(std::async(std::launch::async, solve_level, std::cref(mfd), lev, lambda_max,
                                std::cref(grid), std::cref(opt)));
    }
    // Serial merge in level order keeps the result independent of scheduling.
    for (auto& job : jobs) {
      ModeSpectrum ms = job.get();
      if (done) continue;
      if (ms.op.diagnostic) spec.semibounded = false;
      const bool beyond = ms.floor > lambda_max;
      spec.modes.push_back(std::move(ms));
      if (beyond) done = true;
    }
    next = end;
  }
  if (!done) {
    // Levels past the cap (or past an explicit list) are bounded below by the last floor.
    const double last_floor = spec.modes.empty() ? -std::numeric_limits<double>::infinity() : spec.modes.back().floor;
    spec.lambda_max_certified = std::min(lambda_max, last_floor);
  }
  spec.num_modes_used = static_cast<int>(spec.modes.size());

  for (const auto& ms : spec.modes) {
    for (std::size_t k = 0; k < ms.lambdas.size(); ++k) {
      spec.entries.push_back({ms.lambdas[k], ms.level, static_cast<int>(k) + 1, ms.data.multiplicity});
    }
  }
  std::sort(spec.entries.begin(), spec.entries.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.mode != b.mode) return a.mode < b.mode;
    return a.radial_index < b.radial_index;
  });
  return spec;
}

EigenfunctionProfile eigenfunction_profile(const ModeOperator& op, const Eigen::VectorXd& v, double volume,
                                           int mode_index) {
  if (v.size() != op.size()) throw InvalidParameter("eigenfunction_profile: size mismatch");
  if (!(volume > 0.0)) throw InvalidParameter("eigenfunction_profile: volume must be positive");
  EigenfunctionProfile p;
  p.mode_index = mode_index;
  p.r = op.nodes;
  // sum m w^2 = |v|^2 is the discrete int u^2 phi^{n-1} dr.
  p.u = op.to_u(op.to_w(v / v.norm())) / std::sqrt(volume);
  return p;
}

double rayleigh(const ModeOperator& op, const Eigen::VectorXd& u) {
  if (u.size() != op.size()) throw InvalidParameter("rayleigh: sample count must match the operator");
  const Eigen::VectorXd v = op.from_u(u);
  const double den = v.squaredNorm();
  if (!(den > 0.0)) throw InvalidParameter("rayleigh: zero function");
  return v.dot(op.t.multiply(v)) / den;
}

namespace {

// Smallest eigenvalue of t on the orthogonal complement of the (orthonormal) vectors in defl.
double deflated_minimum(const SymTridiagd& t, const std::vector<Eigen::VectorXd>& defl, double shift) {
  const Eigen::Index m = t.size();
  Eigen::VectorXd x(m);
  for (Eigen::Index i = 0; i < m; ++i) x[i] = 1.0 + 0.5 * std::sin(1.3 * double(i + 1));
  auto project = [&](Eigen::VectorXd& y) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& d : defl) y -= d.dot(y) * d;
    }
  };
  project(x);
  x.normalize();
  double rq = x.dot(t.multiply(x));
  int stable = 0;
  for (int it = 0; it < 4000; ++it) {
    Eigen::VectorXd y = x;
    if (!detail::shifted_solve(t, shift, y)) throw NumericalFailure("minmax: singular shift");
    project(y);
    x = y / y.norm();
    const double next = x.dot(t.multiply(x));
    if (std::abs(next - rq) <= 1e-15 * std::max(1.0, std::abs(next))) {
      if (++stable >= 3) return next;
    } else {
      stable = 0;
    }
    rq = next;
  }
  return rq;
}

}  // namespace

std::vector<MinMaxRow> minmax_check(const Spectrum& spec, int count) {
  // Expand entries by multiplicity: copy c of entry (level, k).
  struct Slot {
    int level, k, copy;
    double lambda;
  };
  std::vector<Slot> slots;
  for (const auto& e : spec.entries) {
    for (int c = 0; c < e.multiplicity; ++c) slots.push_back({e.mode, e.radial_index, c, e.lambda});
  }
  if (count > static_cast<int>(slots.size())) throw InvalidParameter("minmax_check: not enough entries");
  std::vector<MinMaxRow> rows;
  for (int i = 1; i <= count; ++i) {
    // For level j and copy c, the deflated radial indices form a prefix 1..d(j,c).
    std::map<std::pair<int, int>, int> prefix;
    for (int s = 0; s < i - 1; ++s) {
      auto& d = prefix[{slots[s].level, slots[s].copy}];
      d = std::max(d, slots[s].k);
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ms : spec.modes) {
      if (ms.lambdas.empty()) continue;
      if (ms.vectors.size() < ms.lambdas.size()) throw InvalidParameter("minmax_check: assemble with vectors");
      // The copy with the fewest deflations gives this level's minimum.
      int fewest = std::numeric_limits<int>::max();
      for (int c = 0; c < ms.data.multiplicity; ++c) {
        auto it = prefix.find({ms.level, c});
        fewest = std::min(fewest, it == prefix.end() ? 0 : it->second);
      }
      if (fewest > static_cast<int>(ms.vectors.size())) continue;
      std::vector<Eigen::VectorXd> defl(ms.vectors.begin(), ms.vectors.begin() + fewest);
      const double shift = ms.floor - std::max(1.0, 0.1 * std::abs(ms.floor));
      best = std::min(best, deflated_minimum(ms.op.t, defl, shift));
    }
    const double lam = slots[i - 1].lambda;
    rows.push_back({i, lam, best, std::abs(best - lam) / std::max(1e-300, std::abs(lam))});
  }
  return rows;
}

int radial_sign_changes(const Eigen::VectorXd& u) {
  const double tiny = 1e-8 * u.cwiseAbs().maxCoeff();
  int changes = 0;
  int sign = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) <= tiny) continue;
    const int s = u[i] > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) ++changes;
    sign = s;
  }
  return changes;
}

CourantReport courant_radial_check(const Spectrum& spec, std::size_t count) {
  CourantReport rep;
  const std::size_t upto = std::min(count, spec.entries.size());
  for (std::size_t e = 0; e < upto; ++e) {
    const auto& entry = spec.entries[e];
    const ModeSpectrum& ms = spec.level(entry.mode);
    if (static_cast<int>(ms.vectors.size()) < entry.radial_index) {
      throw InvalidParameter("courant_radial_check: assemble with vectors");
    }
    const Eigen::VectorXd& v = ms.vectors[entry.radial_index - 1];
    CourantRow row;
    row.entry = static_cast<int>(e);
    row.first_index = spec.first_index(e);
    row.radial_domains = radial_sign_changes(ms.op.to_u(ms.op.to_w(v))) + 1;
    const int degree = std::max(ms.data.degree, 0);
    row.nodal_domains = row.radial_domains * (degree + 1);
    row.pass = row.nodal_domains <= row.first_index;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

GroundState ground_state(const SingularManifold& mfd, const RadialGrid& grid, const SpectrumOptions& opt) {
  const ModeODE mode0(mfd.n(), mfd.fiber().mu(0), mfd.profile());
  if (mode0.subcritical()) throw NonSemibounded("ground_state: subcritical level present, operator unbounded below");
  const ModeOperator op = discretize(mode0, grid, opt.bc);
  GroundState gs;
  gs.lambda1 = eigenvalue_rel(op.t, 1, opt.rel_tol, opt.abs_floor);
  double next = op.size() > 1 ? eigenvalue_rel(op.t, 2, opt.rel_tol, opt.abs_floor)
                              : std::numeric_limits<double>::infinity();
  const auto available = mfd.fiber().mode_count();
  if (!available || *available > 1) {
    const ModeOperator op1 = discretize(ModeODE(mfd.n(), mfd.fiber().mu(1), mfd.profile()), grid, opt.bc);
    next = std::min(next, eigenvalue_rel(op1.t, 1, opt.rel_tol, opt.abs_floor));
  }
  gs.gap = next - gs.lambda1;
  const double tol = std::max(opt.abs_floor, opt.rel_tol * std::abs(gs.lambda1));
  gs.simple = gs.gap > tol && mfd.fiber().mode(0).multiplicity == 1;
  const Eigen::VectorXd v = eigenvector(op.t, gs.lambda1);
  gs.u = eigenfunction_profile(op, v, mfd.fiber().volume(), 0);
  gs.positive = (gs.u.u.array() > 0.0).all();
  return gs;
}

WeylFit weyl_fit(const Spectrum& spec) {
  WeylFit fit;
  fit.c_lower = std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  int k = 0;
  for (const auto& e : spec.entries) {
    for (int c = 0; c < e.multiplicity; ++c) {
      ++k;
      fit.c_lower = std::min(fit.c_lower, e.lambda / std::pow(double(k), 2.0 / spec.n));
      if (e.lambda > 0.0) {
        const double x = std::log(double(k)), y = std::log(e.lambda);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
      }
    }
  }
  if (k == 0) fit.c_lower = 0.0;
  if (cnt >= 2) fit.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return fit;
}

void write_csv(const Spectrum& spec, std::ostream& os) {
  os << "lambda,mode,radial_index,multiplicity\n";
  os.precision(12);
  for (const auto& e : spec.entries) {
    os << e.lambda << ',' << e.mode << ',' << e.radial_index << ',' << e.multiplicity << '\n';
  }
}

}  // namespace conespec
