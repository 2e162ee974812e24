#include "ctm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ctm/error.hpp"

namespace ctm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Grid coordinates along one axis; endpoints are exact when the side is a
// whole multiple of the spacing.
std::vector<double> grid_axis(double side, double spacing) {
  const double ratio = side / spacing;
  const double whole = std::round(ratio);
  std::vector<double> coords;
  if (std::abs(ratio - whole) <= 1e-9 * std::max(1.0, ratio)) {
    const auto intervals = static_cast<std::size_t>(whole);
    coords.reserve(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
      coords.push_back(side * (static_cast<double>(k) / static_cast<double>(intervals)) - side / 2.0);
    }
  } else {
    const auto intervals = static_cast<std::size_t>(std::floor(ratio));
    for (std::size_t k = 0; k <= intervals; ++k) {
      coords.push_back(-side / 2.0 + static_cast<double>(k) * spacing);
    }
  }
  return coords;
}

int square_index(double coord, const CheckerboardSpec& spec) {
  const double t = (coord + spec.side_length() / 2.0) / spec.square_size;
  // Boundary points belong to the larger index; the epsilon absorbs grid rounding.
  const int idx = static_cast<int>(std::floor(t + 1e-9));
  return std::clamp(idx, 0, spec.squares_per_side - 1);
}

}  // namespace

void CheckerboardSpec::validate() const {
  if (squares_per_side < 2 || squares_per_side % 2 != 0) {
    throw Error("checkerboard: squares_per_side must be even and >= 2");
  }
  if (!(square_size > 0.0)) throw Error("checkerboard: square_size must be positive");
  if (!(point_spacing > 0.0)) throw Error("checkerboard: point_spacing must be positive");
  if (point_spacing > square_size / 4.0 * (1.0 + 1e-12)) {
    throw Error("checkerboard: point_spacing must be at most square_size / 4");
  }
  if (black_value < 0.0 || black_value > 1.0 || white_value < 0.0 || white_value > 1.0) {
    throw Error("checkerboard: black/white values must lie in [0,1]");
  }
}

void Perturbation::validate() const {
  if (!(shift_fraction >= 0.0 && shift_fraction <= 1.5 + 1e-12)) {
    throw Error("perturbation: shift_fraction must lie in [0, 1.5]");
  }
  if (std::abs(shift_direction.norm() - 1.0) > 1e-9) {
    throw Error("perturbation: shift_direction must be a unit vector");
  }
}

double checker_value(const CheckerboardSpec& spec, double x, double y) {
  const int ix = square_index(x, spec);
  const int iy = square_index(y, spec);
  return (ix + iy) % 2 == 0 ? spec.white_value : spec.black_value;
}

PointCloud generate_checkerboard(const CheckerboardSpec& spec) {
  spec.validate();
  const auto axis = grid_axis(spec.side_length(), spec.point_spacing);
  PointCloud cloud;
  const std::size_t n = axis.size() * axis.size();
  cloud.points.reserve(n);
  cloud.intensity.reserve(n);
  cloud.colour.reserve(n);
  for (double y : axis) {
    for (double x : axis) {
      const double v = checker_value(spec, x, y);
      cloud.points.emplace_back(x, y, 0.0);
      cloud.intensity.push_back(v);
      cloud.colour.emplace_back(v, v, v);
    }
  }
  cloud.normals.assign(n, Vec3::UnitZ());
  return cloud;
}

double out_of_plane_axis_angle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  return angle(rng);
}

RigidTransform perturbation_to_transform(const Perturbation& pert, const CheckerboardSpec& spec) {
  pert.validate();
  const double phi = out_of_plane_axis_angle(pert.seed);
  const Vec3 out_axis(std::cos(phi), std::sin(phi), 0.0);

  const auto r_in = RigidTransform::from_rotation_vector(Vec3::UnitZ() * (pert.in_plane_deg * kDegToRad));
  const auto r_out = RigidTransform::from_rotation_vector(out_axis * (pert.out_plane_deg * kDegToRad));
  const double shift = pert.shift_fraction * spec.side_length();
  const auto move = RigidTransform::from_translation(
      Vec3(pert.shift_direction.x() * shift, pert.shift_direction.y() * shift, 0.0));
  return compose(move, compose(r_out, r_in));
}

PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& noise) {
  if (noise.position_sigma < 0.0 || noise.intensity_sigma < 0.0) {
    throw Error("noise: sigmas must be non-negative");
  }
  if (noise.position_sigma == 0.0 && noise.intensity_sigma == 0.0) return cloud;

  // Unit normal draws scaled by sigma, so every sigma shares one realisation per seed.
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  PointCloud out = cloud;
  for (auto& p : out.points) {
    const double dx = unit(rng), dy = unit(rng), dz = unit(rng);
    p += noise.position_sigma * Vec3(dx, dy, dz);
  }
  if (out.has_intensity()) {
    for (auto& v : out.intensity) v = std::clamp(v + noise.intensity_sigma * unit(rng), 0.0, 1.0);
    if (out.has_colour()) {
      for (std::size_t i = 0; i < out.size(); ++i) out.colour[i] = Vec3::Constant(out.intensity[i]);
    }
  }
  return out;
}

}  // namespace ctm
