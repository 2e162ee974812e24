#include <Eigen/Dense>

#include "ctm/error.hpp"
#include "ctm/registration.hpp"

namespace ctm {

namespace {

// Orthonormal pair spanning the plane orthogonal to n.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = n.cross(helper).normalized();
  return {u, n.cross(u)};
}

}  // namespace

ColourGradientField compute_colour_gradients(const PointCloud& cloud, double radius, std::size_t min_neighbours) {
  if (cloud.empty()) throw Error("colour gradients: empty cloud");
  return compute_colour_gradients(cloud, NeighbourIndex(cloud.points), radius, min_neighbours);
}

ColourGradientField compute_colour_gradients(const PointCloud& cloud, const NeighbourIndex& index, double radius,
                                             std::size_t min_neighbours) {
  if (!cloud.has_intensity()) throw Error("colour gradients: cloud has no intensity");
  if (!cloud.has_normals()) throw Error("colour gradients: cloud has no normals");

  ColourGradientField gradients(cloud.size(), Vec3::Zero());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];
    const auto neighbours = index.radius(p, radius);
    if (neighbours.size() < min_neighbours + 1) continue;  // +1: the point itself

    // Solve in the 2D tangent basis so the gradient is orthogonal to n by construction.
    const auto [u, v] = tangent_basis(n);
    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d atb = Eigen::Vector2d::Zero();
    for (const auto& nb : neighbours) {
      if (nb.id == i) continue;
      const Vec3 d = cloud.points[nb.id] - p;
      const Eigen::Vector2d row(d.dot(u), d.dot(v));  // coordinates of the tangent projection q'
      const double rhs = cloud.intensity[nb.id] - cloud.intensity[i];
      ata.noalias() += row * row.transpose();
      atb += row * rhs;
    }
    Eigen::LDLT<Eigen::Matrix2d> ldlt(ata);
    if (ldlt.info() != Eigen::Success || ata.determinant() <= 1e-12 * ata.squaredNorm()) continue;
    const Eigen::Vector2d g = ldlt.solve(atb);
    gradients[i] = g.x() * u + g.y() * v;
  }
  return gradients;
}

}  // namespace ctm
