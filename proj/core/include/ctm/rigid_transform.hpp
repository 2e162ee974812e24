#pragma once

#include <Eigen/Geometry>

#include "ctm/point_cloud.hpp"

namespace ctm {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Proper rigid motion p -> R p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  /// Rotation given as a rotation vector (axis * angle, radians).
  static RigidTransform from_rotation_vector(const Vec3& omega, const Vec3& t = Vec3::Zero());
  /// Left increment exp(xi) with xi = (omega, t); rotation by Rodrigues, translation added as-is.
  static RigidTransform from_increment(const Vec6& xi);

  Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }
  Eigen::Matrix4d matrix() const;

  /// Max element deviation of R^T R from I, and |det R - 1|.
  double orthonormality_error() const;
};

/// compose(a, b)(p) == a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD), det forced to +1.
Mat3 orthonormalize(const Mat3& m);

/// p -> R p + t on positions, n -> R n on normals; intensity and colour untouched.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

/// Measured target centre: the template centre carried through the estimated pose.
inline Vec3 target_centre(const RigidTransform& t, const Vec3& template_centre) { return t(template_centre); }

}  // namespace ctm
