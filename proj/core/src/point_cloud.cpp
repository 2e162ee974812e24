#include "ctm/point_cloud.hpp"

#include <cmath>
#include <string>

#include "ctm/error.hpp"

namespace ctm {

namespace {

void check_length(std::size_t attr, std::size_t n, const char* name) {
  if (attr != 0 && attr != n) {
    throw Error(std::string("point cloud: ") + name + " has " + std::to_string(attr) + " entries for " +
                std::to_string(n) + " points");
  }
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void PointCloud::validate() const {
  const std::size_t n = points.size();
  check_length(intensity.size(), n, "intensity");
  check_length(colour.size(), n, "colour");
  check_length(normals.size(), n, "normals");
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!in_unit_interval(intensity[i])) {
      throw Error("point cloud: intensity " + std::to_string(i) + " outside [0,1]");
    }
  }
  for (std::size_t i = 0; i < colour.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (!in_unit_interval(colour[i][c])) {
        throw Error("point cloud: colour " + std::to_string(i) + " outside [0,1]");
      }
    }
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (std::abs(normals[i].norm() - 1.0) > 1e-9) {
      throw Error("point cloud: normal " + std::to_string(i) + " is not unit length");
    }
  }
}

PointCloud PointCloud::select(const std::vector<bool>& mask) const {
  if (mask.size() != points.size()) {
    throw Error("point cloud: selection mask length mismatch");
  }
  PointCloud out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    out.points.push_back(points[i]);
    if (has_intensity()) out.intensity.push_back(intensity[i]);
    if (has_colour()) out.colour.push_back(colour[i]);
    if (has_normals()) out.normals.push_back(normals[i]);
  }
  return out;
}

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

}  // namespace ctm
