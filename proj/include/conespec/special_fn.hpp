#pragma once

// Special functions used by the closed-form mode solutions on exact cones.
//
// Bessel J/Y evaluation is delegated to the C++17 mathematical special
// functions (std::cyl_bessel_j / std::cyl_neumann), which use the ascending
// series for x^2 < 10 (nu + 1) and Steed's continued-fraction method with the
// Temme series otherwise. Everything else here is self-contained.

namespace conespec {

struct SeriesAccuracy {
  double rel_tol = 1e-16;
  int max_terms = 2000;
};

/// Kahan-compensated accumulator.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double bessel_j(double order, double x);

/// Second kind. Accuracy target is 1e-8 relative; only needed for residual
/// checks of the rejected (non-Friedrichs) branch.
double bessel_y(double order, double x);

/// k-th positive zero of J_order, k >= 1.
double bessel_j_zero(double order, int k);

/// Rising factorial (x)_k = x (x+1) ... (x+k-1), (x)_0 = 1.
double pochhammer(double x, int k);

/// Kummer's confluent hypergeometric M(a, b, x) = sum_k (a)_k/(b)_k x^k/k!.
double kummer_m(double a, double b, double x, SeriesAccuracy acc = {});

/// Generalized hypergeometric 0F1(; b; x) = sum_k x^k / ((b)_k k!).
double hyp0f1(double b, double x, SeriesAccuracy acc = {});

double ln_gamma(double x);
double digamma(double x);

/// 1/Gamma(x) for any real x (zero at the poles of Gamma).
double reciprocal_gamma(double x);

}  // namespace conespec
