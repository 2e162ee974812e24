#include "ctm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "ctm/error.hpp"
#include "ctm/normals.hpp"

namespace ctm {

void Aabb::validate() const {
  if (!(min.array() <= max.array()).all()) throw Error("bounding box: min must not exceed max");
}

PointCloud crop_aabb(const PointCloud& cloud, const Aabb& box) {
  box.validate();
  std::vector<bool> mask(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) mask[i] = box.contains(cloud.points[i]);
  return cloud.select(mask);
}

RansacResult ransac_plane(const PointCloud& cloud, double distance_threshold, int iterations, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n < 3) throw Error("degenerate input");
  if (!(distance_threshold > 0.0)) throw Error("ransac: distance threshold must be positive");
  if (iterations < 1) throw Error("ransac: iterations must be at least 1");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  bool found = false;
  PlaneModel best;
  std::size_t best_count = 0;
  for (int it = 0; it < iterations; ++it) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    while (b == a) b = pick(rng);
    while (c == a || c == b) c = pick(rng);
    const Vec3& pa = cloud.points[a];
    const Vec3 cross = (cloud.points[b] - pa).cross(cloud.points[c] - pa);
    const double len = cross.norm();
    const double scale = (cloud.points[b] - pa).norm() * (cloud.points[c] - pa).norm();
    if (!(len > 1e-12 * scale) || scale == 0.0) continue;  // collinear sample

    PlaneModel model{cross / len, (cross / len).dot(pa)};
    std::size_t count = 0;
    for (const auto& p : cloud.points) count += model.distance(p) <= distance_threshold ? 1 : 0;
    if (!found || count > best_count) {
      found = true;
      best = model;
      best_count = count;
    }
  }
  if (!found) throw Error("degenerate input");

  RansacResult result;
  result.inliers.resize(n);
  std::vector<Vec3> inlier_points;
  for (std::size_t i = 0; i < n; ++i) {
    result.inliers[i] = best.distance(cloud.points[i]) <= distance_threshold;
    if (result.inliers[i]) inlier_points.push_back(cloud.points[i]);
  }

  // Least-squares refit; keep the sampled plane's orientation.
  result.plane = best;
  if (inlier_points.size() >= 3) {
    auto [normal, centroid] = fit_plane(inlier_points);
    if (normal.dot(best.normal) < 0.0) normal = -normal;
    result.plane = PlaneModel{normal, normal.dot(centroid)};
    for (std::size_t i = 0; i < n; ++i) result.inliers[i] = result.plane.distance(cloud.points[i]) <= distance_threshold;
  }
  result.inlier_count = static_cast<std::size_t>(std::count(result.inliers.begin(), result.inliers.end(), true));
  return result;
}

PointCloud remove_outliers(const PointCloud& cloud, double distance_threshold, int iterations, std::uint64_t seed) {
  return cloud.select(ransac_plane(cloud, distance_threshold, iterations, seed).inliers);
}

int intensity_bin(double v, int bins) {
  const double c = std::clamp(v, 0.0, 1.0);
  return std::min(static_cast<int>(c * bins), bins - 1);
}

double between_class_score(std::int64_t total, std::int64_t level_sum, std::int64_t count0, std::int64_t sum0) {
  // w0 w1 (mu0 - mu1)^2 up to the constant factor 1 / total^2, with levels = bin indices.
  const std::int64_t count1 = total - count0;
  const auto diff = static_cast<double>(total * sum0 - count0 * level_sum);
  return diff * diff / (static_cast<double>(count0) * static_cast<double>(count1));
}

double otsu_threshold(std::span<const double> intensities, int bins) {
  if (intensities.size() < 2) throw Error("otsu: need at least two samples");
  if (bins < 2) throw Error("otsu: need at least two bins");

  std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
  for (double v : intensities) ++hist[static_cast<std::size_t>(intensity_bin(v, bins))];
  if (std::count_if(hist.begin(), hist.end(), [](std::int64_t h) { return h > 0; }) < 2) {
    throw Error("unimodal input");
  }

  const auto total = static_cast<std::int64_t>(intensities.size());
  std::int64_t level_sum = 0;
  for (int b = 0; b < bins; ++b) level_sum += hist[static_cast<std::size_t>(b)] * b;

  // Candidate edge k / bins puts bins [0, k) in the dark class.
  double best = -1.0;
  int best_k = 1;
  std::int64_t count0 = 0, sum0 = 0;
  for (int k = 1; k < bins; ++k) {
    count0 += hist[static_cast<std::size_t>(k - 1)];
    sum0 += hist[static_cast<std::size_t>(k - 1)] * (k - 1);
    if (count0 == 0 || count0 == total) continue;
    const double score = between_class_score(total, level_sum, count0, sum0);
    if (score > best) {
      best = score;
      best_k = k;
    }
  }
  return static_cast<double>(best_k) / bins;
}

PointCloud binarize_intensity(const PointCloud& cloud, double threshold) {
  if (!cloud.has_intensity()) throw Error("binarize: cloud has no intensity");
  PointCloud out = cloud;
  for (auto& v : out.intensity) v = v < threshold ? 0.0 : 1.0;
  return intensity_to_colour(out);
}

PointCloud intensity_to_colour(const PointCloud& cloud) {
  if (!cloud.has_intensity()) throw Error("intensity_to_colour: cloud has no intensity");
  PointCloud out = cloud;
  out.colour.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.colour[i] = Vec3::Constant(cloud.intensity[i]);
  return out;
}

PointCloud normalize_intensity(const PointCloud& cloud) {
  if (!cloud.has_intensity()) throw Error("normalize: cloud has no intensity");
  const auto [lo, hi] = std::minmax_element(cloud.intensity.begin(), cloud.intensity.end());
  const double range = *hi - *lo;
  PointCloud out = cloud;
  for (auto& v : out.intensity) v = range > 0.0 ? (v - *lo) / range : 0.0;
  return intensity_to_colour(out);
}

PointCloud resize_template(const PointCloud& tmpl, double current_side, double physical_side) {
  if (!(current_side > 0.0) || !(physical_side > 0.0)) throw Error("resize: sides must be positive");
  const double factor = physical_side / current_side;
  if (factor == 1.0) return tmpl;
  const Vec3 centre = tmpl.centroid();
  PointCloud out = tmpl;
  for (auto& p : out.points) p = centre + factor * (p - centre);
  return out;
}

}  // namespace ctm
