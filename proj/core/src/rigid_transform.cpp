#include "ctm/rigid_transform.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace ctm {

RigidTransform RigidTransform::from_rotation_vector(const Vec3& omega, const Vec3& t) {
  RigidTransform out;
  const double angle = omega.norm();
  if (angle > 0.0) {
    out.rotation = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  }
  out.translation = t;
  return out;
}

RigidTransform RigidTransform::from_increment(const Vec6& xi) {
  return from_rotation_vector(xi.head<3>(), xi.tail<3>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double RigidTransform::orthonormality_error() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation.determinant() - 1.0));
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t(p);
  for (auto& n : out.normals) n = t.rotation * n;
  return out;
}

}  // namespace ctm
