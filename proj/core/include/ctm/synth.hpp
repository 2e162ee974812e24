#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "ctm/point_cloud.hpp"
#include "ctm/rigid_transform.hpp"

namespace ctm {

/// Parametric checkerboard template: squares_per_side x squares_per_side
/// squares, sampled on a regular grid in the z = 0 plane centred at the origin.
struct CheckerboardSpec {
  int squares_per_side = 2;
  double square_size = 0.1;
  double point_spacing = 0.01;
  double black_value = 0.0;
  double white_value = 1.0;

  double side_length() const { return squares_per_side * square_size; }
  /// Throws ctm::Error describing the violated constraint.
  void validate() const;
};

/// Initial misalignment of the template relative to the target.
///
/// The shift is measured in units of the template side length along a unit
/// direction in the template plane. The in-plane rotation is about the
/// template normal; the out-of-plane rotation is about an in-plane axis drawn
/// from `seed`. Both rotations pivot on the template centre.
struct Perturbation {
  double shift_fraction = 0.0;
  Eigen::Vector2d shift_direction = Eigen::Vector2d::UnitX();
  double in_plane_deg = 0.0;
  double out_plane_deg = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct NoiseSpec {
  double position_sigma = 0.0;
  double intensity_sigma = 0.0;
  std::uint64_t seed = 0;
};

PointCloud generate_checkerboard(const CheckerboardSpec& spec);

/// Square parity colour (white_value or black_value) of a template-plane point.
double checker_value(const CheckerboardSpec& spec, double x, double y);

/// Angle (radians) of the out-of-plane rotation axis drawn from `seed`.
double out_of_plane_axis_angle(std::uint64_t seed);

/// T = translate * R_out * R_in; deterministic for a fixed seed.
RigidTransform perturbation_to_transform(const Perturbation& pert, const CheckerboardSpec& spec);

/// Isotropic Gaussian position noise and clamped Gaussian intensity noise.
/// Colour, when present, is re-derived as the replicated intensity.
PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& noise);

}  // namespace ctm
