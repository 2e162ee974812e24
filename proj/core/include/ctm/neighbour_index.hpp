#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctm/point_cloud.hpp"

namespace ctm {

struct Neighbour {
  std::size_t id = 0;
  double distance = 0.0;
};

/// Exact KD-tree over a fixed set of positions.
///
/// Immutable after construction, so one index can be queried from many
/// threads. Results are exact and deterministic: nearest() breaks distance
/// ties by the lowest point id, radius() sorts by (distance, id).
class NeighbourIndex {
 public:
  /// Throws ctm::Error("empty cloud") for an empty point set.
  explicit NeighbourIndex(std::vector<Vec3> points);
  explicit NeighbourIndex(const PointCloud& cloud) : NeighbourIndex(cloud.points) {}

  Neighbour nearest(const Vec3& query) const;

  /// Ids within `radius` (inclusive), ascending by distance then id.
  /// Throws ctm::Error if radius <= 0.
  std::vector<Neighbour> radius(const Vec3& query, double radius) const;

  std::size_t size() const { return points_.size(); }
  std::span<const Vec3> points() const { return points_; }

 private:
  struct Node {
    // Leaf when split_dim < 0; children otherwise.
    std::int32_t split_dim = -1;
    double split_value = 0.0;
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0;  // range into order_ (leaves only)
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_rec(std::uint32_t node, const Vec3& q, double& best_d2, std::size_t& best_id) const;
  void radius_rec(std::uint32_t node, const Vec3& q, double r2, std::vector<Neighbour>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Convenience wrapper matching the free-function API.
inline NeighbourIndex build_index(const PointCloud& cloud) { return NeighbourIndex(cloud); }

}  // namespace ctm
