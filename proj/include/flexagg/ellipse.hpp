#pragma once

#include <Eigen/Dense>

namespace flexagg {

/// {c + Y xi : ||xi|| <= 1} in the (p0, q0) plane.
struct Ellipse {
  double pc = 0.0, qc = 0.0;
  Eigen::Matrix2d Y = Eigen::Matrix2d::Zero();

  Eigen::Vector2d point(const Eigen::Vector2d& xi) const {
    return Eigen::Vector2d(pc, qc) + Y * xi;
  }
  double area() const;
  /// Membership with a relative boundary tolerance. Degenerate ellipses
  /// (singular Y) contain only points on their image segment.
  bool contains(double p, double q, double tol = 1e-9) const;
};

}  // namespace flexagg
