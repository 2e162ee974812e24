// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Usage: ctm_acceptance [output-dir]   (writes the sweep CSVs when a directory is given)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ctm/harness.hpp"
#include "ctm/measure.hpp"
#include "ctm/neighbour_index.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/registration.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ctm;

namespace {

// Fixed seeds and thresholds.
constexpr std::uint64_t kSweepSeed = 1;
constexpr int kTrialsPerCell = 100;
constexpr double kColouredMinSuccess = 0.8;
constexpr double kColouredMaxShift = 0.9;
constexpr double kColouredMaxRmse = 0.05;
constexpr double kPointToPlaneMaxSuccess = 0.2;
constexpr double kPointToPlaneMinShift = 0.3;
constexpr double kRotationMinShift = 0.3;
constexpr double kRotationMonotoneFraction = 0.9;
constexpr double kNoiseRangeSuccess = 0.8;
constexpr int kOracleCases = 1000;
constexpr int kJacobianPoses = 20;
constexpr double kJacobianTolerance = 1e-5;
constexpr double kMeasureMaxCentreError = 0.02;

std::filesystem::path g_out_dir;
int g_failures = 0;

std::vector<double> shift_grid() {
  std::vector<double> s;
  for (int k = 0; k <= 15; ++k) s.push_back(k / 10.0);
  return s;
}

std::string num(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void report(const std::string& name, bool pass, const std::string& summary, const std::vector<std::string>& details) {
  std::cout << (pass ? "PASS" : "FAIL") << "  " << name << ": " << summary << '\n';
  for (const auto& d : details) std::cout << "      " << d << '\n';
  std::cout.flush();
  g_failures += !pass;
}

SweepTable sweep(SweepConfig cfg, const std::string& csv_name) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepTable t = run_sweep(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "  (" << csv_name << ": " << t.size() << " cells in " << num(secs, 1) << " s)\n";
  if (!g_out_dir.empty()) write_results(t, g_out_dir / csv_name);
  return t;
}

void shift_only() {
  SweepConfig cfg;
  cfg.shift_fractions = shift_grid();
  cfg.methods = {Method::PointToPlane, Method::Coloured};
  cfg.trials_per_cell = kTrialsPerCell;
  cfg.base_seed = kSweepSeed;
  const SweepTable t = sweep(cfg, "shift_only.csv");

  bool pass = true;
  std::vector<std::string> details;
  std::string col = "coloured success:", col_rmse = "coloured mean rmse:", p2p = "point-to-plane success:";
  for (const SweepRow& r : t) {
    const bool coloured = r.method == Method::Coloured;
    (coloured ? col : p2p) += " " + num(r.shift_fraction, 1) + "=" + num(r.success_rate, 2);
    if (coloured) col_rmse += " " + num(r.shift_fraction, 1) + "=" + num(r.mean_rmse, 4);
    if (coloured && r.shift_fraction <= kColouredMaxShift + 1e-9) {
      if (!(r.success_rate >= kColouredMinSuccess)) {
        pass = false;
        details.push_back("coloured success " + num(r.success_rate, 2) + " < 0.8 at shift " + num(r.shift_fraction, 1));
      }
      if (!(r.mean_rmse < kColouredMaxRmse)) {
        pass = false;
        details.push_back("coloured mean rmse " + num(r.mean_rmse, 4) + " at shift " + num(r.shift_fraction, 1));
      }
    }
    if (!coloured && r.shift_fraction >= kPointToPlaneMinShift - 1e-9 && !(r.success_rate < kPointToPlaneMaxSuccess)) {
      pass = false;
      details.push_back("point-to-plane success " + num(r.success_rate, 2) + " >= 0.2 at shift " +
                        num(r.shift_fraction, 1));
    }
  }
  details.insert(details.begin(), {col, col_rmse, p2p});
  report("shift-only sweep", pass,
         "coloured success >= 0.8 and mean rmse < 0.05 for shift <= 0.9; point-to-plane success < 0.2 for shift >= 0.3",
         details);
}

void shift_rotation() {
  SweepConfig cfg;
  cfg.shift_fractions = shift_grid();
  cfg.rotations_deg = {0, 10, 20, 30};
  cfg.trials_per_cell = kTrialsPerCell;
  cfg.base_seed = kSweepSeed;
  const SweepTable t = sweep(cfg, "shift_rotation.csv");

  std::map<double, std::vector<double>> by_shift;  // rates in ascending rotation order
  for (const SweepRow& r : t) by_shift[r.shift_fraction].push_back(r.success_rate);
  int cells = 0, monotone = 0;
  std::vector<std::string> details;
  for (const auto& [shift, rates] : by_shift) {
    std::string line = "shift " + num(shift, 1) + ":";
    for (double r : rates) line += " " + num(r, 2);
    if (shift < kRotationMinShift - 1e-9) {
      details.push_back(line);
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < rates.size(); ++i)
      for (std::size_t j = i + 1; j < rates.size(); ++j) ok = ok && rates[i] >= rates[j];
    ++cells;
    monotone += ok;
    details.push_back(line + (ok ? "" : "   <- not monotone"));
  }
  const double frac = static_cast<double>(monotone) / cells;
  details.insert(details.begin(), "success rate by shift at rotations 0/10/20/30 deg");
  report("shift x rotation sweep", frac >= kRotationMonotoneFraction,
         std::to_string(monotone) + "/" + std::to_string(cells) + " shift cells >= 0.3 degrade monotonically (need >= 90%)",
         details);
}

void noise() {
  SweepConfig cfg;
  cfg.shift_fractions = shift_grid();
  const double square = cfg.spec.square_size;
  cfg.noise_sigmas = {0.0, 0.01 * square, 0.02 * square};
  cfg.trials_per_cell = kTrialsPerCell;
  cfg.base_seed = kSweepSeed;
  const SweepTable t = sweep(cfg, "noise.csv");

  // Largest shift s such that every shift <= s reaches the success threshold.
  std::map<double, double> range;
  std::map<double, std::string> lines;
  for (const double sigma : cfg.noise_sigmas) {
    range[sigma] = -1.0;
    bool broken = false;
    for (const SweepRow& r : t) {
      if (r.noise_sigma != sigma) continue;
      lines[sigma] += " " + num(r.success_rate, 2);
      if (!broken && r.success_rate >= kNoiseRangeSuccess) {
        range[sigma] = r.shift_fraction;
      } else {
        broken = true;
      }
    }
  }
  bool pass = true;
  std::vector<std::string> details;
  double prev = std::numeric_limits<double>::infinity();
  std::string summary = "largest shift with success >= 0.8:";
  for (const auto& [sigma, s] : range) {
    pass = pass && s <= prev;
    prev = s;
    summary += " sigma " + num(sigma / square * 100, 0) + "%=" + num(s, 1);
    details.push_back("sigma " + num(sigma, 4) + " m:" + lines[sigma]);
  }
  report("noise sweep", pass, summary + " (must be non-increasing)", details);
}

void oracle_suites() {
  std::vector<std::string> details;
  std::mt19937_64 rng(2024);

  // Otsu.
  int otsu_bad = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    std::uniform_int_distribution<int> size(2, 2000), bins(2, 512), modes(1, 4);
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    const int m = modes(rng);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> centres(static_cast<std::size_t>(m));
    for (auto& x : centres) x = u(rng);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::normal_distribution<double> g(centres[i % centres.size()], 0.08);
      v[i] = std::clamp(g(rng), 0.0, 1.0);
    }
    v[0] = 0.0;
    v[1] = 1.0;
    const int b = c % 3 == 0 ? 256 : bins(rng);
    otsu_bad += otsu_threshold(v, b) != oracle::otsu_scan(v, b);
  }
  details.push_back("otsu: " + std::to_string(kOracleCases - otsu_bad) + "/" + std::to_string(kOracleCases) +
                    " exact matches with the exhaustive scan");

  // KD-tree: each case is a fresh random cloud and one nearest plus one radius query.
  int kd_bad = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    std::uniform_int_distribution<int> size(1, 1000);
    std::vector<Vec3> pts(static_cast<std::size_t>(size(rng)));
    for (auto& p : pts) p = test::random_vec(rng, -1, 1);
    if (c % 4 == 0) {
      for (auto& p : pts) p = (p * 4).array().round() / 4;  // lattice: many exact ties
    }
    const NeighbourIndex index(pts);
    const Vec3 q = c % 4 == 0 ? Vec3((test::random_vec(rng, -1, 1) * 4).array().round() / 4 + 0.125)
                              : test::random_vec(rng, -1.2, 1.2);
    const double r = std::uniform_real_distribution<double>(0.01, 0.8)(rng);
    const Neighbour got = index.nearest(q), want = oracle::linear_nearest(pts, q);
    const auto got_r = index.radius(q, r), want_r = oracle::linear_radius(pts, q, r);
    bool same = got.id == want.id && got.distance == want.distance && got_r.size() == want_r.size();
    for (std::size_t k = 0; same && k < got_r.size(); ++k) {
      same = got_r[k].id == want_r[k].id && got_r[k].distance == want_r[k].distance;
    }
    kd_bad += !same;
  }
  details.push_back("kd-tree: " + std::to_string(kOracleCases - kd_bad) + "/" + std::to_string(kOracleCases) +
                    " cases equal to the linear scan");

  // Jacobians.
  double worst_p2p = 0.0, worst_col = 0.0;
  const PointCloud scene = test::corner_scene();
  for (int c = 0; c < kJacobianPoses; ++c) {
    const PointCloud target = apply_transform(scene, test::random_pose(rng, 0.2, 0.03));
    const NeighbourIndex index(target);
    const auto grads = compute_colour_gradients(target, index, 0.025, 4);
    const auto pose = test::random_pose(rng, 0.2, 0.03);
    const auto corr = find_correspondences(apply_transform(scene, pose).points, index, 0.2);
    const auto p2p = [&](const RigidTransform& x) {
      return Eigen::VectorXd(point_to_plane_system(scene, target, x, corr).residuals);
    };
    const auto col = [&](const RigidTransform& x) {
      return Eigen::VectorXd(coloured_system(scene, target, grads, x, corr, 0.968).residuals);
    };
    worst_p2p = std::max(worst_p2p, oracle::relative_error(point_to_plane_system(scene, target, pose, corr).jacobian,
                                                           oracle::numeric_jacobian(p2p, pose, 1e-6)));
    worst_col = std::max(worst_col, oracle::relative_error(coloured_system(scene, target, grads, pose, corr, 0.968).jacobian,
                                                           oracle::numeric_jacobian(col, pose, 1e-6)));
  }
  std::ostringstream jac;
  jac << "jacobians: worst relative error point-to-plane " << std::scientific << std::setprecision(2) << worst_p2p
      << ", coloured " << worst_col << " over " << kJacobianPoses << " poses";
  details.push_back(jac.str());

  // RANSAC: 1000 plane points with 1 mm noise, 100 outliers 5-20 cm off the plane.
  std::uniform_real_distribution<double> xy(-0.5, 0.5), lift(0.05, 0.2);
  std::normal_distribution<double> n1mm(0.0, 0.001);
  PointCloud cloud;
  for (int i = 0; i < 1000; ++i) cloud.points.emplace_back(xy(rng), xy(rng), n1mm(rng));
  for (int i = 0; i < 100; ++i) cloud.points.emplace_back(xy(rng), xy(rng), lift(rng));
  const auto fit = ransac_plane(cloud, 0.005, 200, 9);
  int true_in = 0, false_in = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (fit.inliers[i]) (i < 1000 ? true_in : false_in)++;
  }
  details.push_back("ransac: " + std::to_string(true_in) + "/1000 plane points kept, " + std::to_string(false_in) +
                    "/100 outliers kept");

  const bool pass = otsu_bad == 0 && kd_bad == 0 && worst_p2p < kJacobianTolerance &&
                    worst_col < kJacobianTolerance && false_in == 0 && true_in >= 990;
  report("oracle suites", pass, "otsu, kd-tree, jacobian and ransac oracles", details);
}

void end_to_end() {
  const test::MeasureFixture f = test::measure_fixture();
  MeasureConfig cfg = f.config;
  const auto t0 = std::chrono::steady_clock::now();
  const MeasureReport with = measure_target(cfg, f.scan);
  cfg.preprocess = false;
  const MeasureReport without = measure_target(cfg, f.scan);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double e_with = (with.centre - f.true_centre).norm() / f.side;
  const double e_without = (without.centre - f.true_centre).norm() / f.side;
  const bool pass = e_with < kMeasureMaxCentreError && e_without > e_with;
  report("end-to-end measurement", pass,
         "centre error " + num(100 * e_with, 3) + "% of side with preprocessing (need < 2%), " +
             num(100 * e_without, 3) + "% without (need strictly larger)",
         {"scan " + std::to_string(f.scan.size()) + " points, " + std::to_string(with.cleaned_points) +
              " after outlier removal, otsu threshold " + num(with.otsu_threshold, 4),
          "colour score " + num(with.colour_score, 3) + ", normalized rmse " + num(with.normalized_rmse, 4) +
              ", both runs " + num(secs, 2) + " s"});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    g_out_dir = argv[1];
    std::filesystem::create_directories(g_out_dir);
  }
  oracle_suites();
  end_to_end();
  shift_only();
  shift_rotation();
  noise();
  std::cout << "SKIP  real-data check: optional; needs the published survey scans and reference centres\n";
  std::cout << (g_failures == 0 ? "all required criteria passed" : std::to_string(g_failures) + " criteria failed")
            << '\n';
  return g_failures == 0 ? 0 : 1;
}
