#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctm/registration.hpp"
#include "ctm/synth.hpp"

namespace ctm {

enum class Method { PointToPlane, Coloured };

std::string_view method_name(Method m);
/// Accepts "point-to-plane" / "coloured" (also "icp" / "colored").
Method parse_method(std::string_view name);

/// Success thresholds for a synthetic trial.
inline constexpr double kRmseSuccessFraction = 0.15;
inline constexpr double kColourSuccessScore = 0.5;

struct TrialConfig {
  CheckerboardSpec spec{};
  double shift_fraction = 0.0;
  double in_plane_deg = 0.0;
  double out_plane_deg = 0.0;
  NoiseSpec noise{};
  Method method = Method::Coloured;
  ColouredIcpParams icp{};
  /// Normal-estimation radius on the target; 0 selects 2.5 x point spacing.
  double normal_radius = 0.0;
  /// Drives the shift direction and the out-of-plane axis.
  std::uint64_t seed = 0;
};

struct TrialRecord {
  TrialConfig config{};
  Eigen::Vector2d shift_direction = Eigen::Vector2d::UnitX();
  RigidTransform ground_truth{};
  RigidTransform estimate{};
  /// RMS distance between the registered source and the target over known
  /// point pairs, as a fraction of side length. Success is judged on this.
  double normalized_rmse = 0.0;
  /// Correspondence RMSE reported by the solver (fraction of side length).
  double solver_rmse = 0.0;
  double colour_score = 0.0;
  double centre_error = 0.0;           // metres
  double centre_error_fraction = 0.0;  // of side length
  bool geometric_success = false;
  bool colour_success = false;
  bool success = false;
  int iterations = 0;
  double wall_time = 0.0;  // seconds
  /// Non-empty when the solver threw; the record is then a failure.
  std::string diagnostics{};
};

/// Defaults used by the synthetic studies: gate 2 x side, gradients and
/// normals over 2.5 x point spacing.
ColouredIcpParams default_trial_icp(const CheckerboardSpec& spec);

/// Shift direction (unit, in the template plane) drawn from a trial seed.
Eigen::Vector2d shift_direction_for_seed(std::uint64_t seed);

TrialRecord run_trial(const TrialConfig& cfg);

struct SweepConfig {
  CheckerboardSpec spec{};
  std::vector<double> shift_fractions{0.0};
  /// Each value is applied as both the in-plane and the out-of-plane angle.
  std::vector<double> rotations_deg{0.0};
  /// Position noise sigmas in metres.
  std::vector<double> noise_sigmas{0.0};
  std::vector<Method> methods{Method::Coloured};
  int trials_per_cell = 100;
  std::uint64_t base_seed = 0;
  /// Unset selects default_trial_icp(spec).
  std::optional<ColouredIcpParams> icp{};
  double normal_radius = 0.0;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct SweepRow {
  Method method = Method::Coloured;
  double shift_fraction = 0.0;
  double in_plane_deg = 0.0;
  double out_plane_deg = 0.0;
  double noise_sigma = 0.0;
  int trials = 0;
  double success_rate = 0.0;
  /// Over successful trials only; NaN when none succeeded.
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  /// Over all trials, as a fraction of side length.
  double mean_centre_error = 0.0;
  double mean_iterations = 0.0;

  bool operator==(const SweepRow&) const = default;
};

using SweepTable = std::vector<SweepRow>;

/// Stable 64-bit mix of a seed with further words (splitmix64 finaliser chain).
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words);

/// Pose seed of trial t in the cell with the given shift. Independent of
/// rotation, noise and method so those axes compare paired trials.
std::uint64_t trial_seed(std::uint64_t base_seed, double shift_fraction, int trial);
std::uint64_t noise_seed(std::uint64_t base_seed, double shift_fraction, int trial);

SweepRow aggregate(const std::vector<TrialRecord>& records, Method method, double shift, double rotation,
                   double noise_sigma);

/// Rows sorted by (method, shift, rotation, noise) whatever the config order.
SweepTable run_sweep(const SweepConfig& cfg);

/// SweepConfig from flat config keys (see README for the key list); unknown keys are errors.
SweepConfig sweep_config_from_keys(const std::map<std::string, std::string>& keys);

inline constexpr std::string_view kSweepCsvHeader =
    "method,shift_fraction,in_plane_deg,out_plane_deg,noise_sigma,trials,success_rate,mean_rmse,std_rmse,"
    "mean_centre_error,mean_iterations";

std::string format_results(const SweepTable& table);
SweepTable parse_results(std::string_view csv);
void write_results(const SweepTable& table, const std::filesystem::path& path);
SweepTable read_results(const std::filesystem::path& path);

}  // namespace ctm
