#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ctm/neighbour_index.hpp"
#include "ctm/point_cloud.hpp"
#include "ctm/rigid_transform.hpp"

namespace ctm {

struct IcpParams {
  double max_correspondence_distance = 0.4;
  int max_iterations = 50;
  /// Stop once |change in normalized RMSE| and |change in fitness| both drop below these.
  double relative_rmse_tol = 1e-6;
  double relative_fitness_tol = 1e-6;
  /// Length that RMSE is expressed against (the template side length).
  double reference_length = 1.0;

  void validate() const;
};

/// One level of the optional coarse-to-fine schedule.
struct PyramidLevel {
  double voxel_size = 0.0;
  double max_correspondence_distance = 0.0;
  double gradient_radius = 0.0;
  double normal_radius = 0.0;
  int max_iterations = 30;
};

struct ColouredIcpParams {
  IcpParams base{};
  /// Weight of the point-to-plane term; the photometric term gets 1 - weight.
  double geometric_weight = 0.968;
  double gradient_radius = 0.025;
  std::size_t gradient_min_neighbours = 4;
  /// Coarse levels run before the full-resolution solve. Empty means single scale.
  std::vector<PyramidLevel> pyramid{};

  void validate() const;
};

struct IterationTrace {
  double objective_before = 0.0;
  double objective_after = 0.0;
  int halvings = 0;
};

struct RegistrationResult {
  RigidTransform transform{};
  double normalized_rmse = 0.0;
  double colour_score = 0.0;
  double fitness = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationTrace> trace{};
};

struct Correspondence {
  std::size_t source = 0;
  std::size_t target = 0;
  double distance = 0.0;
};

/// Per-point tangent-plane intensity gradients, aligned with the cloud they came from.
using ColourGradientField = std::vector<Vec3>;

/// Stacked residuals and their Jacobian with respect to a left increment
/// xi = (omega, t) applied as from_increment(xi) * pose.
struct LinearSystem {
  Eigen::VectorXd residuals;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;

  double objective() const { return residuals.squaredNorm(); }
};

/// Nearest target point for every moved source point, gated at max_distance.
std::vector<Correspondence> find_correspondences(std::span<const Vec3> moved_source, const NeighbourIndex& target,
                                                 double max_distance);

/// Least-squares intensity gradient on each point's tangent plane.
/// Points with fewer than min_neighbours neighbours (excluding themselves) get zero.
ColourGradientField compute_colour_gradients(const PointCloud& cloud, double radius, std::size_t min_neighbours);
ColourGradientField compute_colour_gradients(const PointCloud& cloud, const NeighbourIndex& index, double radius,
                                             std::size_t min_neighbours);

/// Residuals (pose(p_s) - p_t) . n_t.
LinearSystem point_to_plane_system(const PointCloud& source, const PointCloud& target, const RigidTransform& pose,
                                   std::span<const Correspondence> correspondences);

/// Geometric rows scaled by sqrt(w) followed by photometric rows scaled by sqrt(1 - w).
LinearSystem coloured_system(const PointCloud& source, const PointCloud& target, const ColourGradientField& gradients,
                             const RigidTransform& pose, std::span<const Correspondence> correspondences,
                             double geometric_weight);

RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                                      const IcpParams& params);

RegistrationResult coloured_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                                const ColouredIcpParams& params);

/// Fraction of gated correspondences whose intensities agree after
/// binarisation at 0.5. Zero when nothing corresponds.
double colour_score(const PointCloud& source, const PointCloud& target, const RigidTransform& pose,
                    double max_distance);

/// Centroid-per-voxel downsampling; attributes are averaged, normals renormalised.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

}  // namespace ctm
