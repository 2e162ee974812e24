#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctm/error.hpp"
#include "ctm/normals.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/registration.hpp"

namespace ctm {

/// Real-data measurement settings. Zero-valued lengths mean "derive from physical_side".
struct MeasureConfig {
  std::filesystem::path input{};
  std::optional<Aabb> crop{};
  double physical_side = 0.0;
  int squares_per_side = 2;
  /// Template grid spacing; 0 selects side / (20 x squares + 1), about a twentieth of a square.
  double template_spacing = 0.0;
  /// Scan normal radius; 0 selects 2.5 x template spacing.
  double normal_radius = 0.0;
  Viewpoint sensor = Viewpoint::position(Vec3::Zero());

  double ransac_threshold = 0.005;
  int ransac_iterations = 500;
  std::uint64_t ransac_seed = 0;
  int otsu_bins = 256;
  /// RANSAC removal and Otsu binarisation before the coloured stage.
  bool preprocess = true;

  /// Correspondence gates; 0 selects half the side length.
  double icp_max_distance = 0.0;
  int icp_max_iterations = 50;
  double coloured_max_distance = 0.0;
  int coloured_max_iterations = 50;
  double geometric_weight = 0.968;
  /// Colour-gradient radius on the scan; 0 selects the normal radius.
  double gradient_radius = 0.0;

  /// Template pose in sensor coordinates; unset places it at the crop-box
  /// centre facing along the scan's RANSAC plane normal.
  std::optional<RigidTransform> initial_guess{};

  void validate() const;
};

struct StageLog {
  std::string stage;
  std::string detail;
};

struct MeasureReport {
  Vec3 centre = Vec3::Zero();
  RigidTransform transform{};
  double normalized_rmse = 0.0;
  double colour_score = 0.0;
  double fitness = 0.0;
  int iterations = 0;
  bool converged = false;
  bool verified = false;
  RegistrationResult coarse{};
  double otsu_threshold = 0.0;
  std::size_t scan_points = 0;
  std::size_t cropped_points = 0;
  std::size_t cleaned_points = 0;
  std::vector<StageLog> stages{};
  /// Template moved by the final transform, for visual inspection.
  PointCloud aligned_template{};
};

/// A stage failure: carries the name of the stage that threw.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Full pipeline on a file (cfg.input).
MeasureReport measure_target(const MeasureConfig& cfg);
/// Same pipeline on an in-memory scan; cfg.input is ignored.
MeasureReport measure_target(const MeasureConfig& cfg, const PointCloud& scan);

/// Canonical template for a target of the given physical size, centred at the origin in z = 0.
PointCloud make_template(const MeasureConfig& cfg);

/// `key: value` lines.
std::string format_report(const MeasureReport& report);

/// Reads MeasureConfig keys from a flat key=value map and validates the result;
/// unknown keys are errors.
MeasureConfig measure_config_from_keys(const std::map<std::string, std::string>& keys);

}  // namespace ctm
