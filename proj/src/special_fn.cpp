#include "conespec/special_fn.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "conespec/errors.hpp"

namespace conespec {
namespace {

bool is_nonpositive_integer(double b) {
  return b <= 0.0 && std::floor(b) == b;
}

void check_accuracy(const SeriesAccuracy& acc) {
  if (!(acc.rel_tol > 0.0) || acc.rel_tol > 1e-6 || acc.max_terms < 50) {
    throw InvalidParameter("SeriesAccuracy: rel_tol must lie in (0, 1e-6] and max_terms >= 50");
  }
}

// J_order'(x) from the recurrence J' = (order/x) J - J_{order+1}.
double bessel_j_derivative(double order, double x) {
  return (order / x) * std::cyl_bessel_j(order, x) - std::cyl_bessel_j(order + 1.0, x);
}

// McMahon's large-zero expansion.
double mcmahon_guess(double order, int k) {
  const double mu = 4.0 * order * order;
  const double beta = (k + 0.5 * order - 0.25) * std::numbers::pi;
  const double e = 8.0 * beta;
  return beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e) -
         32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * std::pow(e, 5));
}

}  // namespace

double bessel_j(double order, double x) {
  if (order < 0.0 || x < 0.0 || !std::isfinite(order) || !std::isfinite(x)) {
    throw InvalidParameter("bessel_j: order and argument must be nonnegative");
  }
  if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;
  return std::cyl_bessel_j(order, x);
}

double bessel_y(double order, double x) {
  if (order < 0.0 || !(x > 0.0)) {
    throw InvalidParameter("bessel_y: order must be nonnegative and argument positive");
  }
  return std::cyl_neumann(order, x);
}

double bessel_j_zero(double order, int k) {
  if (order < 0.0 || k < 1) {
    throw InvalidParameter("bessel_j_zero: order >= 0 and k >= 1 required");
  }
  // J_order has no zero in (0, order], and consecutive zeros are more than
  // 2.4 apart, so a 0.4 scan from there sees every sign change exactly once.
  constexpr double step = 0.4;
  double a = std::max(order, 1e-3);
  double fa = std::cyl_bessel_j(order, a);
  int found = 0;
  double b = a;
  double fb = fa;
  const int scan_cap = 100000;
  for (int i = 0; i < scan_cap; ++i) {
    b = a + step;
    fb = std::cyl_bessel_j(order, b);
    if (fa == 0.0 || (fa < 0.0) != (fb < 0.0)) {
      if (++found == k) break;
    }
    a = b;
    fa = fb;
  }
  if (found != k) {
    throw NumericalFailure("bessel_j_zero: scan did not isolate the requested zero");
  }
  if (fa == 0.0) return a;

  // Safeguarded Newton inside [a, b], seeded by McMahon when it lands inside.
  double x = mcmahon_guess(order, k);
  if (!(x > a && x < b)) x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double fx = std::cyl_bessel_j(order, x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (fa < 0.0)) {
      a = x;
      fa = fx;
    } else {
      b = x;
    }
    const double dfx = bessel_j_derivative(order, x);
    double next = x - fx / dfx;
    if (!(next > a && next < b) || !std::isfinite(next)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
        (b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
      return next;
    }
    x = next;
  }
  std::ostringstream msg;
  msg << "bessel_j_zero: no convergence for order " << order << ", k " << k;
  throw NumericalFailure(msg.str());
}

double pochhammer(double x, int k) {
  if (k < 0) throw InvalidParameter("pochhammer: k must be nonnegative");
  double p = 1.0;
  for (int i = 0; i < k; ++i) p *= x + i;
  return p;
}

double kummer_m(double a, double b, double x, SeriesAccuracy acc) {
  check_accuracy(acc);
  if (is_nonpositive_integer(b)) {
    throw PoleError("kummer_m: b is a nonpositive integer");
  }
  if (x < 0.0) throw InvalidParameter("kummer_m: x must be nonnegative");
  KahanSum sum;
  double term = 1.0;
  sum.add(term);
  for (int k = 0; k < acc.max_terms; ++k) {
    term *= (a + k) / (b + k) * x / (k + 1);
    sum.add(term);
    if (term == 0.0) return sum.value();
    // Past the peak the ratio is < 1 and the remaining tail is geometric.
    const bool past_peak = k + 1 > x && std::abs((a + k + 1) / (b + k + 1) * x / (k + 2)) < 0.5;
    if (past_peak && std::abs(term) <= acc.rel_tol * std::abs(sum.value())) {
      return sum.value();
    }
  }
  throw NumericalFailure("kummer_m: series did not converge within max_terms");
}

double hyp0f1(double b, double x, SeriesAccuracy acc) {
  check_accuracy(acc);
  if (is_nonpositive_integer(b)) throw PoleError("hyp0f1: b is a nonpositive integer");
  KahanSum sum;
  double term = 1.0;
  sum.add(term);
  for (int k = 0; k < acc.max_terms; ++k) {
    term *= x / ((b + k) * (k + 1));
    sum.add(term);
    const bool past_peak = (k + 1) * (k + 1) > std::abs(x);
    if (term == 0.0 || (past_peak && std::abs(term) <= acc.rel_tol * std::abs(sum.value()))) {
      return sum.value();
    }
  }
  throw NumericalFailure("hyp0f1: series did not converge within max_terms");
}

double ln_gamma(double x) {
  if (!(x > 0.0)) throw InvalidParameter("ln_gamma: x must be positive");
  return std::lgamma(x);
}

double digamma(double x) {
  if (!(x > 0.0)) throw InvalidParameter("digamma: x must be positive");
  // Shift with psi(x) = psi(x+1) - 1/x until x >= 10, then the asymptotic
  // series through x^-14 (truncation error below 1e-17 there).
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double series =
      inv2 * (1.0 / 12 -
               inv2 * (1.0 / 120 -
                       inv2 * (1.0 / 252 -
                               inv2 * (1.0 / 240 -
                                       inv2 * (1.0 / 132 -
                                               inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return shift + std::log(x) - 0.5 / x - series;
}

double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

}  // namespace conespec
