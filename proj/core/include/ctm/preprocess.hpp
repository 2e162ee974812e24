#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctm/point_cloud.hpp"

namespace ctm {

/// Plane n . x = offset with unit n.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) - offset); }
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  void validate() const;
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 centre() const { return 0.5 * (min + max); }
};

struct RansacResult {
  PlaneModel plane{};
  std::vector<bool> inliers{};
  std::size_t inlier_count = 0;
};

/// Inclusive componentwise crop; attributes follow their points.
PointCloud crop_aabb(const PointCloud& cloud, const Aabb& box);

/// Seeded 3-point RANSAC with a least-squares refit over the winning inliers.
/// Throws ctm::Error("degenerate input") when no non-collinear sample exists.
RansacResult ransac_plane(const PointCloud& cloud, double distance_threshold, int iterations, std::uint64_t seed);

/// Inlier sub-cloud of ransac_plane. Points are kept where they are, not projected.
PointCloud remove_outliers(const PointCloud& cloud, double distance_threshold, int iterations, std::uint64_t seed);

/// Bin of v among `bins` equal-width bins on [0,1] (values outside are clamped).
int intensity_bin(double v, int bins);

/// Between-class variance of a histogram split, scaled by total^2, with bin
/// indices as grey levels. count0/sum0 describe the dark class.
double between_class_score(std::int64_t total, std::int64_t level_sum, std::int64_t count0, std::int64_t sum0);

/// Otsu threshold over `bins` equal-width bins on [0,1]; returns the bin edge
/// k / bins maximising w0 w1 (mu0 - mu1)^2, lowest edge on ties.
/// Throws ctm::Error("unimodal input") when all samples share one bin.
double otsu_threshold(std::span<const double> intensities, int bins = 256);

/// Intensity -> {0,1} at `threshold` (values below go to 0); colour follows.
PointCloud binarize_intensity(const PointCloud& cloud, double threshold);

/// Colour channels set to the replicated intensity.
PointCloud intensity_to_colour(const PointCloud& cloud);

/// Affine rescale of intensity onto [0,1]. A constant channel maps to 0.
PointCloud normalize_intensity(const PointCloud& cloud);

/// Uniform scale by physical_side / current_side about the template centre.
PointCloud resize_template(const PointCloud& tmpl, double current_side, double physical_side);

}  // namespace ctm
