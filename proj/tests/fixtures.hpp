#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "ctm/measure.hpp"
#include "ctm/synth.hpp"

namespace ctm::test {

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline RigidTransform random_pose(std::mt19937_64& rng, double max_angle, double max_shift) {
  Vec3 axis = random_vec(rng, -1.0, 1.0).normalized();
  std::uniform_real_distribution<double> a(0.0, max_angle);
  return RigidTransform::from_rotation_vector(axis * a(rng), random_vec(rng, -max_shift, max_shift));
}

/// Two orthogonal planes carrying a checker pattern: a scene where every pose
/// direction is observable by point-to-plane residuals.
inline PointCloud corner_scene(double spacing = 0.01) {
  PointCloud c;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double u = -0.1 + i * spacing, v = -0.1 + j * spacing;
      const double val = ((i / 5 + j / 5) % 2 == 0) ? 1.0 : 0.0;
      c.points.emplace_back(u, v, 0.0);
      c.normals.emplace_back(0.0, 0.0, 1.0);
      c.intensity.push_back(val);
      // Shared edges are sampled once; coincident points with different colours make the pose ambiguous.
      if (j == 0) continue;
      c.points.emplace_back(u, -0.1, 0.1 + v);
      c.normals.emplace_back(0.0, 1.0, 0.0);
      c.intensity.push_back(1.0 - val);
      if (i == 0) continue;
      c.points.emplace_back(-0.1, u, 0.1 + v);
      c.normals.emplace_back(1.0, 0.0, 0.0);
      c.intensity.push_back(val);
    }
  }
  for (double i : c.intensity) c.colour.emplace_back(i, i, i);
  return c;
}

struct MeasureFixture {
  PointCloud scan;
  MeasureConfig config;
  RigidTransform truth;
  Vec3 true_centre;
  double side = 0.0;
  std::vector<bool> outlier;
};

/// A scanned 2x2 board a few metres in front of a sensor at the origin:
/// grey-level intensities, isotropic position noise (1% of the square size)
/// 5% spurious returns lifted toward the sensor over the dark squares, and
/// intensity fading across the board.
inline MeasureFixture measure_fixture(std::uint64_t seed = 7, double noise_fraction = 0.01, double outlier_fraction = 0.05,
                                     double falloff = 0.35) {
  MeasureFixture f;
  // 51 intervals across the board keep scan samples off the square boundaries.
  CheckerboardSpec board{2, 0.1, 0.2 / 51.0, 0.15, 0.8};
  f.side = board.side_length();
  std::mt19937_64 rng(seed);

  const Vec3 centre(0.4, -0.3, 4.0);
  // Board normal faces the sensor with a moderate tilt.
  const Vec3 facing = (-centre).normalized();
  const Vec3 tilt = RigidTransform::from_rotation_vector(Vec3(0.25, -0.15, 0.0)).rotation * facing;
  const Mat3 align = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), tilt.normalized()).toRotationMatrix();
  const Mat3 spin = RigidTransform::from_rotation_vector(Vec3(0, 0, 0.3)).rotation;
  f.truth = RigidTransform{align * spin, centre};
  f.true_centre = centre;

  PointCloud local = generate_checkerboard(board);
  local = add_noise(local, NoiseSpec{noise_fraction * board.square_size, noise_fraction > 0.0 ? 0.03 : 0.0, seed + 1});
  // Returned signal fades across the board (range and incidence falloff).
  for (std::size_t i = 0; i < local.size(); ++i) {
    local.intensity[i] *= 1.0 - falloff * (local.points[i].x() / f.side + 0.5);
    local.colour[i] = Vec3::Constant(local.intensity[i]);
  }
  PointCloud scan = apply_transform(local, f.truth);
  scan.normals.clear();
  f.outlier.assign(scan.size(), false);

  std::vector<std::size_t> dark;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (checker_value(board, local.points[i].x(), local.points[i].y()) == board.black_value) dark.push_back(i);
  }
  std::shuffle(dark.begin(), dark.end(), rng);
  const auto n_out = static_cast<std::size_t>(outlier_fraction * static_cast<double>(scan.size()));
  std::uniform_real_distribution<double> lift(0.01, 0.03), dim(0.0, 0.1);
  for (std::size_t k = 0; k < n_out && k < dark.size(); ++k) {
    const std::size_t i = dark[k];
    scan.points[i] += (-scan.points[i]).normalized() * lift(rng);
    scan.intensity[i] = dim(rng);
    scan.colour[i] = Vec3::Constant(scan.intensity[i]);
    f.outlier[i] = true;
  }
  f.scan = scan;

  MeasureConfig& cfg = f.config;
  cfg.physical_side = f.side;
  cfg.squares_per_side = 2;
  const Vec3 margin = Vec3::Constant(0.1);
  Vec3 lo = scan.points.front(), hi = scan.points.front();
  for (const Vec3& p : scan.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  cfg.crop = Aabb{lo - margin, hi + margin};
  cfg.ransac_threshold = 0.004;
  cfg.ransac_iterations = 300;
  cfg.ransac_seed = seed;
  // Initial guess: the true pose displaced in-plane by 20% of the side.
  const Vec3 shift = f.truth.rotation * Vec3(0.2 * f.side * std::cos(0.7), 0.2 * f.side * std::sin(0.7), 0.0);
  cfg.initial_guess = RigidTransform{f.truth.rotation, f.truth.translation + shift};
  return f;
}

}  // namespace ctm::test
