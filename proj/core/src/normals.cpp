#include "ctm/normals.hpp"

#include <Eigen/Eigenvalues>

#include "ctm/error.hpp"

namespace ctm {

namespace {

Vec3 smallest_eigenvector(const Mat3& covariance) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver;
  solver.compute(covariance);
  return solver.eigenvectors().col(0).normalized();
}

}  // namespace

std::pair<Vec3, Vec3> fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw Error("degenerate cloud");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    cov.noalias() += d * d.transpose();
  }
  return {smallest_eigenvector(cov), centroid};
}

Vec3 orient_normal(const Vec3& n, const Vec3& p, const Viewpoint& viewpoint) {
  const Vec3 towards = viewpoint.at_infinity ? viewpoint.value : Vec3(viewpoint.value - p);
  const double dot = n.dot(towards);
  if (dot > 0.0) return n;
  if (dot < 0.0) return -n;
  for (int i = 0; i < 3; ++i) {
    if (n[i] != 0.0) return n[i] > 0.0 ? n : Vec3(-n);
  }
  return n;
}

PointCloud estimate_normals(const PointCloud& cloud, const NormalParams& params) {
  if (cloud.size() < 3) throw Error("degenerate cloud");
  return estimate_normals(cloud, NeighbourIndex(cloud.points), params);
}

PointCloud estimate_normals(const PointCloud& cloud, const NeighbourIndex& index, const NormalParams& params) {
  if (cloud.size() < 3) throw Error("degenerate cloud");
  if (!(params.radius > 0.0)) throw Error("normal radius must be positive");
  if (params.min_neighbours < 3) throw Error("min_neighbours must be at least 3");

  const Vec3 global_normal = fit_plane(cloud.points).first;

  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vec3::UnitZ());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const auto neighbours = index.radius(p, params.radius);
    Vec3 n = global_normal;
    if (neighbours.size() >= params.min_neighbours) {
      Vec3 mean = Vec3::Zero();
      for (const auto& nb : neighbours) mean += cloud.points[nb.id];
      mean /= static_cast<double>(neighbours.size());
      Mat3 cov = Mat3::Zero();
      for (const auto& nb : neighbours) {
        const Vec3 d = cloud.points[nb.id] - mean;
        cov.noalias() += d * d.transpose();
      }
      n = smallest_eigenvector(cov);
    }
    out.normals[i] = orient_normal(n, p, params.viewpoint);
  }
  return out;
}

}  // namespace ctm
