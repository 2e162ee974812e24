#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "ctm/error.hpp"
#include "ctm/harness.hpp"
#include "ctm/io.hpp"

using namespace ctm;

namespace {

TrialConfig trial(double shift, Method method = Method::Coloured, std::uint64_t seed = 3) {
  TrialConfig cfg;
  cfg.shift_fraction = shift;
  cfg.method = method;
  cfg.icp = default_trial_icp(cfg.spec);
  cfg.seed = seed;
  return cfg;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.shift_fractions = {0.6, 0.0, 0.3};
  cfg.rotations_deg = {10.0, 0.0};
  cfg.noise_sigmas = {0.0, 0.001};
  cfg.methods = {Method::Coloured, Method::PointToPlane};
  cfg.trials_per_cell = 3;
  cfg.base_seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("trial at the true pose succeeds exactly") {
  const TrialRecord r = run_trial(trial(0.0));
  CHECK(r.success);
  CHECK(r.normalized_rmse == 0.0);
  CHECK(r.colour_score == 1.0);
  CHECK(r.centre_error == 0.0);
  CHECK(r.diagnostics.empty());
}

TEST_CASE("coloured trial recovers a half-side shift") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrialRecord r = run_trial(trial(0.5, Method::Coloured, seed));
    CHECK(r.success);
    CHECK(r.centre_error_fraction < 0.02);
  }
}

TEST_CASE("no overlap and a gate shorter than the gap fails") {
  TrialConfig cfg = trial(1.5);
  // Even along a diagonal the boards stay about 0.086 side apart.
  cfg.icp.base.max_correspondence_distance = 0.08 * cfg.spec.side_length();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const TrialRecord r = run_trial(cfg);
    CHECK_FALSE(r.success);
    CHECK(r.colour_score == 0.0);
  }
}

TEST_CASE("point-to-plane trial slides along the plane") {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrialRecord r = run_trial(trial(0.5, Method::PointToPlane, seed));
    failures += !r.success;
    // The planes end up coincident; only the in-plane offset is wrong.
    const RigidTransform residual = compose(r.estimate, r.ground_truth);
    CHECK((residual.rotation * Vec3::UnitZ()).z() > 1.0 - 1e-6);
    CHECK(std::abs(residual.translation.z()) < 1e-6);
  }
  CHECK(failures >= 8);
}

TEST_CASE("trial records are deterministic and consistent") {
  TrialConfig cfg = trial(0.7);
  cfg.in_plane_deg = 20;
  cfg.out_plane_deg = 20;
  cfg.noise = NoiseSpec{0.001, 0.0, 9};
  const TrialRecord a = run_trial(cfg);
  const TrialRecord b = run_trial(cfg);
  CHECK(a.estimate.matrix() == b.estimate.matrix());
  CHECK(a.normalized_rmse == b.normalized_rmse);
  CHECK(a.colour_score == b.colour_score);
  CHECK(a.success == (a.geometric_success && a.colour_success));
  CHECK(a.centre_error_fraction == doctest::Approx(a.centre_error / 0.2));
}

TEST_CASE("a throwing trial becomes a failed record") {
  TrialConfig cfg = trial(0.3);
  cfg.icp.geometric_weight = 2.0;
  const TrialRecord r = run_trial(cfg);
  CHECK_FALSE(r.success);
  CHECK_FALSE(r.diagnostics.empty());
  CHECK(std::isnan(r.normalized_rmse));
}

TEST_CASE("seed derivation") {
  CHECK(trial_seed(1, 0.3, 4) == trial_seed(1, 0.3, 4));
  CHECK(trial_seed(1, 0.3, 4) != trial_seed(1, 0.3, 5));
  CHECK(trial_seed(1, 0.3, 4) != trial_seed(2, 0.3, 4));
  CHECK(trial_seed(1, 0.3, 4) != trial_seed(1, 0.4, 4));
  CHECK(trial_seed(1, 0.3, 4) != noise_seed(1, 0.3, 4));
  CHECK(mix_seed(0, {1, 2}) != mix_seed(0, {2, 1}));
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(std::abs(shift_direction_for_seed(s).norm() - 1.0) < 1e-15);
}

TEST_CASE("aggregate statistics") {
  std::vector<TrialRecord> recs(4);
  const double rmse[] = {0.01, 0.03, 0.5, 0.02};
  const bool ok[] = {true, true, false, false};
  for (int i = 0; i < 4; ++i) {
    recs[i].normalized_rmse = rmse[i];
    recs[i].success = ok[i];
    recs[i].centre_error_fraction = 0.1 * i;
    recs[i].iterations = i + 1;
  }
  const SweepRow row = aggregate(recs, Method::Coloured, 0.2, 10, 0.001);
  CHECK(row.trials == 4);
  CHECK(row.success_rate == 0.5);
  CHECK(row.mean_rmse == doctest::Approx(0.02));
  CHECK(row.std_rmse == doctest::Approx(std::sqrt(0.0002)));
  CHECK(row.mean_centre_error == doctest::Approx(0.15));
  CHECK(row.mean_iterations == 2.5);
  CHECK(row.in_plane_deg == 10);
  CHECK(row.out_plane_deg == 10);

  for (auto& r : recs) r.success = false;
  const SweepRow none = aggregate(recs, Method::Coloured, 0.2, 0, 0);
  CHECK(none.success_rate == 0.0);
  CHECK(std::isnan(none.mean_rmse));
  CHECK(std::isnan(none.std_rmse));
}

TEST_CASE("sweep: trivial cell") {
  SweepConfig cfg;
  cfg.trials_per_cell = 1;
  const SweepTable t = run_sweep(cfg);
  REQUIRE(t.size() == 1);
  CHECK(t[0].success_rate == 1.0);
  CHECK(t[0].trials == 1);
}

TEST_CASE("sweep output is canonical and independent of thread count") {
  SweepConfig cfg = small_sweep();
  cfg.threads = 1;
  const SweepTable one = run_sweep(cfg);
  REQUIRE(one.size() == 3 * 2 * 2 * 2);
  for (std::size_t i = 1; i < one.size(); ++i) {
    const auto key = [](const SweepRow& r) {
      return std::tuple(static_cast<int>(r.method), r.shift_fraction, r.in_plane_deg, r.noise_sigma);
    };
    CHECK(key(one[i - 1]) < key(one[i]));
  }
  for (const SweepRow& r : one) {
    CHECK(r.trials == 3);
    const double k = r.success_rate * 3.0;
    CHECK(k == std::round(k));
  }
  const std::string csv = format_results(one);
  for (unsigned threads : {2u, 3u, 8u}) {
    cfg.threads = threads;
    CHECK(format_results(run_sweep(cfg)) == csv);
  }
}

TEST_CASE("adding cells leaves other cells untouched") {
  SweepConfig a;
  a.shift_fractions = {0.8};
  a.rotations_deg = {20};
  a.trials_per_cell = 5;
  a.base_seed = 5;
  SweepConfig b = a;
  b.shift_fractions = {0.1, 0.8, 1.2};
  b.rotations_deg = {0, 20};
  const SweepTable ta = run_sweep(a);
  const SweepTable tb = run_sweep(b);
  bool found = false;
  for (const SweepRow& r : tb) {
    if (r.shift_fraction == 0.8 && r.in_plane_deg == 20) {
      CHECK(r == ta[0]);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("sweep validation") {
  SweepConfig cfg;
  cfg.trials_per_cell = 0;
  CHECK_THROWS_AS(run_sweep(cfg), Error);
  cfg.trials_per_cell = 1;
  cfg.shift_fractions = {};
  CHECK_THROWS_AS(run_sweep(cfg), Error);
  cfg.shift_fractions = {1.7};
  CHECK_THROWS_AS(run_sweep(cfg), Error);
}

TEST_CASE("results CSV") {
  CHECK(format_results({}) == std::string(kSweepCsvHeader) + "\n");
  CHECK(parse_results(format_results({})).empty());

  SweepRow r;
  r.method = Method::PointToPlane;
  r.shift_fraction = 0.1;
  r.in_plane_deg = 30;
  r.out_plane_deg = 30;
  r.noise_sigma = 0.002;
  r.trials = 100;
  r.success_rate = 0.37;
  r.mean_rmse = 1.0 / 3.0;
  r.std_rmse = 1e-17;
  r.mean_centre_error = 0.123456789012345678;
  r.mean_iterations = 12.25;
  SweepRow n = r;
  n.method = Method::Coloured;
  n.mean_rmse = std::numeric_limits<double>::quiet_NaN();
  n.std_rmse = n.mean_rmse;
  const SweepTable table{r, n};

  const std::string text = format_results(table);
  CHECK(text == format_results(table));
  CHECK(text.back() == '\n');
  const SweepTable back = parse_results(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  CHECK(back[1].method == Method::Coloured);
  CHECK(std::isnan(back[1].mean_rmse));
  CHECK(format_results(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "ctm_results_test.csv";
  write_results(table, path);
  CHECK(read_file(path) == text);
  CHECK(format_results(read_results(path)) == text);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_results("bad,header\n"), Error);
  CHECK_THROWS_AS(parse_results(std::string(kSweepCsvHeader) + "\ncoloured,0.1\n"), Error);
  CHECK_THROWS_AS(read_results("/nonexistent/dir/results.csv"), Error);
  CHECK_THROWS_AS(write_results(table, "/nonexistent/dir/results.csv"), Error);
}

TEST_CASE("sweep config keys") {
  const auto cfg = sweep_config_from_keys(parse_key_values(
      "shifts = 0, 0.5\nrotations = 0,10\nnoise_sigmas = 0.001\nmethods = coloured, point-to-plane\n"
      "trials_per_cell = 7\nbase_seed = 9\nsquare_size = 0.2\npoint_spacing = 0.02\nmax_iterations = 20\n"));
  CHECK(cfg.shift_fractions == std::vector<double>{0, 0.5});
  CHECK(cfg.rotations_deg == std::vector<double>{0, 10});
  CHECK(cfg.noise_sigmas == std::vector<double>{0.001});
  CHECK(cfg.methods == std::vector<Method>{Method::Coloured, Method::PointToPlane});
  CHECK(cfg.trials_per_cell == 7);
  CHECK(cfg.base_seed == 9);
  CHECK(cfg.spec.square_size == 0.2);
  REQUIRE(cfg.icp.has_value());
  CHECK(cfg.icp->base.max_iterations == 20);
  CHECK(cfg.icp->base.max_correspondence_distance == doctest::Approx(0.8));

  CHECK_FALSE(sweep_config_from_keys({}).icp.has_value());
  CHECK_THROWS_AS(sweep_config_from_keys({{"shift", "0.1"}}), Error);
  CHECK_THROWS_AS(sweep_config_from_keys({{"methods", "ndt"}}), Error);
  CHECK_THROWS_AS(sweep_config_from_keys({{"trials_per_cell", "many"}}), Error);
  CHECK(parse_method("point-to-plane") == Method::PointToPlane);
  CHECK(method_name(Method::Coloured) == "coloured");
}

TEST_CASE("noise rarely helps: shift grid with and without noise") {
  SweepConfig cfg;
  for (int i = 0; i <= 15; ++i) cfg.shift_fractions.push_back(0.1 * i);
  cfg.noise_sigmas = {0.0, 0.002};
  cfg.trials_per_cell = 20;
  cfg.base_seed = 77;
  const SweepTable t = run_sweep(cfg);
  int cells = 0, not_better = 0;
  for (std::size_t i = 0; i + 1 < t.size(); i += 2) {
    REQUIRE(t[i].noise_sigma == 0.0);
    REQUIRE(t[i + 1].noise_sigma > 0.0);
    ++cells;
    not_better += t[i + 1].success_rate <= t[i].success_rate;
  }
  CHECK(not_better >= 0.9 * cells);
}
