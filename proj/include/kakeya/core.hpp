#pragma once

// Shared vocabulary types and error classes for kakeya-lab.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kakeya {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;

/// A documented precondition of an operation was violated by its inputs.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure could not produce a trustworthy answer
/// (ill-conditioned kernel, Newton divergence, vanishing gradient).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Reading or writing an artifact file failed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

struct Ball {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Orthonormal completion of a unit vector: returns (e1, e2) with
/// (e1, e2, n) right-handed. e1 is the projection of the coordinate axis
/// least aligned with n (lowest index on ties).
inline std::pair<Vec3, Vec3> orthonormal_complement(const Vec3& n) {
  int axis = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  Vec3 a = Vec3::Unit(axis);
  Vec3 e1 = (a - a.dot(n) * n).normalized();
  Vec3 e2 = n.cross(e1);
  return {e1, e2};
}

/// Angle in [0, pi/2] between two lines with the given directions.
inline double line_angle(const Vec3& u, const Vec3& v) {
  return std::atan2(u.cross(v).norm(), std::abs(u.dot(v)));
}

/// Angle in [0, pi/2] between a line with direction v and a plane with normal n.
inline double line_plane_angle(const Vec3& v, const Vec3& n) {
  return std::atan2(std::abs(v.dot(n)), v.cross(n).norm());
}

}  // namespace kakeya
