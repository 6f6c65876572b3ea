#include "parksense/kalman.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace parksense {
namespace {

Eigen::Matrix<double, 4, 1> measurement(const BoundingBox& b) {
  Eigen::Matrix<double, 4, 1> z;
  const double w = b.width();
  const double h = b.height();
  z << b.x1 + w / 2.0, b.y1 + h / 2.0, w * h, w / h;
  return z;
}

std::optional<BoundingBox> to_box(const BoxKalman::State& x) {
  const double s = x(2);
  const double r = x(3);
  if (!(s > 0.0) || !(r > 0.0)) return std::nullopt;
  const double w = std::sqrt(s * r);
  const double h = s / w;
  BoundingBox b{x(0) - w / 2.0, x(1) - h / 2.0, x(0) + w / 2.0, x(1) + h / 2.0};
  if (!b.has_area()) return std::nullopt;
  return b;
}

const Eigen::Matrix<double, 7, 7>& transition() {
  static const Eigen::Matrix<double, 7, 7> f = [] {
    Eigen::Matrix<double, 7, 7> m = Eigen::Matrix<double, 7, 7>::Identity();
    m(0, 4) = 1.0;
    m(1, 5) = 1.0;
    m(2, 6) = 1.0;
    return m;
  }();
  return f;
}

const Eigen::Matrix<double, 4, 7>& observation() {
  static const Eigen::Matrix<double, 4, 7> h = [] {
    Eigen::Matrix<double, 4, 7> m = Eigen::Matrix<double, 4, 7>::Zero();
    for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
    return m;
  }();
  return h;
}

const Eigen::Matrix<double, 7, 7>& process_noise() {
  static const Eigen::Matrix<double, 7, 7> q = [] {
    Eigen::Matrix<double, 7, 1> d;
    d << 1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4;
    return Eigen::Matrix<double, 7, 7>(d.asDiagonal());
  }();
  return q;
}

const Eigen::Matrix<double, 4, 4>& measurement_noise() {
  static const Eigen::Matrix<double, 4, 4> r = [] {
    Eigen::Matrix<double, 4, 1> d;
    d << 1.0, 1.0, 10.0, 10.0;
    return Eigen::Matrix<double, 4, 4>(d.asDiagonal());
  }();
  return r;
}

}  // namespace

BoxKalman::BoxKalman(const BoundingBox& initial) {
  x_.setZero();
  x_.head<4>() = measurement(initial);
  Eigen::Matrix<double, 7, 1> d;
  d << 10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4;
  p_ = d.asDiagonal();
}

std::optional<BoundingBox> BoxKalman::predict() {
  if (x_(2) + x_(6) <= 0.0) x_(6) = 0.0;
  x_ = transition() * x_;
  p_ = transition() * p_ * transition().transpose() + process_noise();
  return to_box(x_);
}

void BoxKalman::update(const BoundingBox& measured) {
  const auto& h = observation();
  const Eigen::Matrix<double, 4, 1> y = measurement(measured) - h * x_;
  const Eigen::Matrix<double, 4, 4> s = h * p_ * h.transpose() + measurement_noise();
  // S is symmetric positive definite, so K = P H^T S^-1 via a solve.
  const Eigen::Matrix<double, 4, 7> kt = s.ldlt().solve(h * p_.transpose());
  const Eigen::Matrix<double, 7, 4> k = kt.transpose();
  x_ += k * y;
  p_ = (Covariance::Identity() - k * h) * p_;
}

std::optional<BoundingBox> BoxKalman::box() const { return to_box(x_); }

}  // namespace parksense
