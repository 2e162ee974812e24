#include "ctm/neighbour_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ctm/error.hpp"

namespace ctm {

namespace {

constexpr std::uint32_t kLeafSize = 8;

double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squaredNorm(); }

}  // namespace

NeighbourIndex::NeighbourIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("empty cloud");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw Error("cloud too large for index");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0U);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t NeighbourIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  if (hi[dim] == lo[dim]) {
    // All points coincide; nothing to split on.
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][dim] < points_[b][dim]; });
  const double split = points_[order_[mid]][dim];

  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.split_dim = dim;
  node.split_value = split;
  node.left = left;
  node.right = right;
  return id;
}

Neighbour NeighbourIndex::nearest(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_id = std::numeric_limits<std::size_t>::max();
  nearest_rec(0, query, best_d2, best_id);
  return {best_id, std::sqrt(best_d2)};
}

void NeighbourIndex::nearest_rec(std::uint32_t node_id, const Vec3& q, double& best_d2,
                                 std::size_t& best_id) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t id = order_[i];
      const double d2 = squared_distance(points_[id], q);
      if (d2 < best_d2 || (d2 == best_d2 && id < best_id)) {
        best_d2 = d2;
        best_id = id;
      }
    }
    return;
  }
  // Left holds values <= split, right holds values >= split.
  const double diff = q[node.split_dim] - node.split_value;
  const std::uint32_t near = diff <= 0.0 ? node.left : node.right;
  const std::uint32_t far = diff <= 0.0 ? node.right : node.left;
  nearest_rec(near, q, best_d2, best_id);
  // Equal distances may still hide a lower id, so prune only on strict excess.
  if (diff * diff <= best_d2) nearest_rec(far, q, best_d2, best_id);
}

std::vector<Neighbour> NeighbourIndex::radius(const Vec3& query, double radius) const {
  if (!(radius > 0.0)) throw Error("radius must be positive");
  std::vector<Neighbour> out;
  radius_rec(0, query, radius * radius, out);
  for (auto& n : out) n.distance = std::sqrt(n.distance);
  std::sort(out.begin(), out.end(), [](const Neighbour& a, const Neighbour& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  });
  return out;
}

void NeighbourIndex::radius_rec(std::uint32_t node_id, const Vec3& q, double r2,
                                std::vector<Neighbour>& out) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t id = order_[i];
      const double d2 = squared_distance(points_[id], q);
      // distance field temporarily holds the squared distance
      if (d2 <= r2) out.push_back({id, d2});
    }
    return;
  }
  const double diff = q[node.split_dim] - node.split_value;
  if (diff <= 0.0 || diff * diff <= r2) radius_rec(node.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_rec(node.right, q, r2, out);
}

}  // namespace ctm
