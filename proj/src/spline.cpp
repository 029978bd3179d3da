#include "conespec/spline.hpp"

#include <algorithm>

#include "conespec/errors.hpp"

namespace conespec {

CubicSpline::CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
  const Eigen::Index n = x_.size();
  if (n < 3 || y_.size() != n) throw InvalidParameter("CubicSpline: need >= 3 matching knots");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw InvalidParameter("CubicSpline: knots must be strictly increasing");
  }
  // Thomas algorithm for the natural-spline moment system.
  m_ = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd c(n), d(n);
  c[0] = 0.0;
  d[0] = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double denom = 2.0 * (h0 + h1) - h0 * c[i - 1];
    c[i] = h1 / denom;
    d[i] = (rhs - h0 * d[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
}

Eigen::Index CubicSpline::interval(double t) const {
  const double* begin = x_.data();
  const double* end = begin + x_.size();
  Eigen::Index i = std::upper_bound(begin, end, t) - begin - 1;
  return std::clamp<Eigen::Index>(i, 0, x_.size() - 2);
}

double CubicSpline::value(double t) const {
  const Eigen::Index i = interval(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double t) const {
  const Eigen::Index i = interval(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h + (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

double CubicSpline::second_derivative(double t) const {
  const Eigen::Index i = interval(t);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

}  // namespace conespec
