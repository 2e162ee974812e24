#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace ctm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unordered point set with optional per-point attributes.
///
/// Attribute vectors are either empty (absent) or exactly as long as
/// `points`. Intensity and colour channels live in [0,1]; normals are unit
/// length. No raster or scan-line ordering is assumed anywhere.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> intensity;
  std::vector<Vec3> colour;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensity() const { return !points.empty() && intensity.size() == points.size(); }
  bool has_colour() const { return !points.empty() && colour.size() == points.size(); }
  bool has_normals() const { return !points.empty() && normals.size() == points.size(); }

  /// Throws ctm::Error naming the first violated invariant.
  void validate() const;

  /// Sub-cloud of the points whose mask entry is true, attributes carried along.
  PointCloud select(const std::vector<bool>& mask) const;

  Vec3 centroid() const;
};

}  // namespace ctm
