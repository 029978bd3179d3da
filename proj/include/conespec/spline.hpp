#pragma once

#include <Eigen/Core>

namespace conespec {

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y);

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  double front() const { return x_[0]; }
  double back() const { return x_[x_.size() - 1]; }

 private:
  Eigen::Index interval(double t) const;

  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd m_;  // second derivatives at the knots
};

}  // namespace conespec
