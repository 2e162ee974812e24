#pragma once

#include <utility>

#include "ctm/neighbour_index.hpp"
#include "ctm/point_cloud.hpp"

namespace ctm {

/// Where estimated normals should point.
///
/// A direction viewpoint sits at infinity (normals satisfy n . direction >= 0);
/// a point viewpoint is a finite sensor position (n . (viewpoint - p) >= 0).
struct Viewpoint {
  Vec3 value = Vec3::UnitZ();
  bool at_infinity = true;

  static Viewpoint direction(const Vec3& d) { return {d, true}; }
  static Viewpoint position(const Vec3& p) { return {p, false}; }
};

struct NormalParams {
  double radius = 0.025;
  std::size_t min_neighbours = 3;
  Viewpoint viewpoint{};
};

/// Least-squares plane through all points: (unit normal, centroid).
/// Throws ctm::Error("degenerate cloud") below three points.
std::pair<Vec3, Vec3> fit_plane(std::span<const Vec3> points);

/// PCA normals over radius neighbourhoods (point included), oriented toward
/// the viewpoint. Points with too few neighbours take the whole-cloud plane
/// normal. Returns a copy of `cloud` with normals filled in.
PointCloud estimate_normals(const PointCloud& cloud, const NormalParams& params);
PointCloud estimate_normals(const PointCloud& cloud, const NeighbourIndex& index, const NormalParams& params);

/// Flip n so it faces the viewpoint from p; exact ties resolved by making the
/// first non-zero component positive.
Vec3 orient_normal(const Vec3& n, const Vec3& p, const Viewpoint& viewpoint);

}  // namespace ctm
