#pragma once

#include <optional>

#include <Eigen/Core>

#include "parksense/geometry.hpp"

namespace parksense {

/// Constant-velocity Kalman filter over (cx, cy, area, aspect) with rates
/// for the first three; aspect is held constant. Units are pixels and
/// frames. Noise constants follow the reference SORT tracker.
class BoxKalman {
 public:
  using State = Eigen::Matrix<double, 7, 1>;
  using Covariance = Eigen::Matrix<double, 7, 7>;

  explicit BoxKalman(const BoundingBox& initial);

  /// Advance one frame. Returns the predicted box, or nullopt when the
  /// predicted area has collapsed.
  std::optional<BoundingBox> predict();
  void update(const BoundingBox& measured);

  std::optional<BoundingBox> box() const;
  const State& state() const { return x_; }
  const Covariance& covariance() const { return p_; }

 private:
  State x_;
  Covariance p_;
};

}  // namespace parksense
