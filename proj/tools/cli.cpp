#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "ctm/harness.hpp"
#include "ctm/io.hpp"
#include "ctm/measure.hpp"
#include "ctm/preprocess.hpp"
#include "ctm/synth.hpp"

namespace ctm::cli {
namespace {

constexpr const char* kConfigHelp = R"(Config files are flat `key = value` text; `#` starts a comment.
Lists are comma separated.

sweep keys:
  shifts                       shift fractions of the side length, e.g. 0,0.1,0.2
  rotations                    degrees, applied both in-plane and out-of-plane
  noise_sigmas                 position noise sigmas in metres
  methods                      point-to-plane, coloured
  trials_per_cell              default 100
  base_seed                    default 0
  threads                      0 uses every core
  squares_per_side, square_size, point_spacing
                               template board (defaults 2, 0.1, 0.01)
  max_correspondence_distance  default 2 x side length
  max_iterations               default 50
  geometric_weight             default 0.968
  gradient_radius, normal_radius
                               default 2.5 x point spacing

measure keys:
  input                        scan path (.ply or x y z intensity text)
  physical_side                target side length in metres (required)
  squares_per_side             default 2
  crop                         xmin,ymin,zmin,xmax,ymax,zmax
  template_spacing             default side / (20 x squares + 1)
  normal_radius                default 2.5 x template spacing
  gradient_radius              default normal_radius
  sensor_position              x,y,z, default 0,0,0
  ransac_threshold             default 0.005
  ransac_iterations            default 500
  ransac_seed                  default 0
  otsu_bins                    default 256
  preprocess                   true/false, default true
  icp_max_distance, coloured_max_distance
                               default half the side length
  icp_max_iterations, coloured_max_iterations
                               default 50
  geometric_weight             default 0.968
  guess_translation            x,y,z of the initial template centre
  guess_rotation_vector        axis-angle of the initial template pose

Exit status: 0 success, 1 runtime error, 2 usage error, 3 unverified measurement.)";

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "Cloud format: ply, ply-ascii, xyzi (default from --out extension)");
}

CloudFormat output_format(const Common& c) {
  if (!c.format.empty()) return parse_cloud_format(c.format);
  auto ext = std::filesystem::path(c.out).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".ply") return CloudFormat::PlyBinary;
  return c.out.empty() ? CloudFormat::PlyAscii : CloudFormat::Xyzi;
}

void emit_cloud(const PointCloud& cloud, const Common& c, std::ostream& out) {
  const CloudFormat format = output_format(c);
  if (!c.out.empty()) {
    write_point_cloud(cloud, c.out, format);
    return;
  }
  if (format == CloudFormat::PlyBinary) throw Error("binary PLY needs --out");
  out << (format == CloudFormat::Xyzi ? write_xyzi(cloud) : write_ply(cloud, false));
}

std::map<std::string, std::string> read_config(const std::string& path) {
  try {
    return parse_key_values(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

Aabb parse_box(const std::string& text) {
  const auto v = parse_doubles(text, "crop");
  if (v.size() != 6) throw Error("crop: expected 6 numbers, got " + std::to_string(v.size()));
  Aabb box{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  box.validate();
  return box;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Checkerboard target measurement"};
  app.name("ctm");
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  Common synth_common, sweep_common, measure_common, pre_common;

  auto* synth = app.add_subcommand("synth", "Emit a checkerboard template cloud");
  CheckerboardSpec spec;
  double noise_sigma = 0.0;
  synth->add_option("--squares", spec.squares_per_side, "Squares per side")->capture_default_str();
  synth->add_option("--square-size", spec.square_size, "Square size in metres")->capture_default_str();
  synth->add_option("--spacing", spec.point_spacing, "Point spacing in metres")->capture_default_str();
  synth->add_option("--noise-sigma", noise_sigma, "Gaussian position noise sigma in metres")->capture_default_str();
  add_common(synth, synth_common);

  auto* sweep = app.add_subcommand("sweep", "Run a simulation sweep and write the results CSV");
  std::string sweep_config;
  std::optional<unsigned> sweep_threads;
  sweep->add_option("--config", sweep_config, "Sweep config file")->required();
  sweep->add_option("--threads", sweep_threads, "Worker threads (overrides config)");
  add_common(sweep, sweep_common);

  auto* measure = app.add_subcommand("measure", "Measure the target centre in a scan");
  std::string measure_config, measure_input, aligned_out;
  bool no_preprocess = false;
  measure->add_option("--config", measure_config, "Measure config file")->required();
  measure->add_option("--in", measure_input, "Scan path (overrides config input)");
  measure->add_option("--aligned", aligned_out, "Write the aligned template cloud here");
  measure->add_flag("--no-preprocess", no_preprocess, "Skip outlier removal and binarisation");
  add_common(measure, measure_common);

  auto* pre = app.add_subcommand("preprocess", "Run one preprocessing step for inspection");
  std::string pre_input, step = "all", crop_text;
  double ransac_threshold = 0.005;
  int ransac_iterations = 500, otsu_bins = 256;
  pre->add_option("--in", pre_input, "Input cloud")->required();
  pre->add_option("--step", step, "crop, ransac, otsu or all")
      ->check(CLI::IsMember({"crop", "ransac", "otsu", "all"}))
      ->capture_default_str();
  pre->add_option("--crop", crop_text, "xmin,ymin,zmin,xmax,ymax,zmax");
  pre->add_option("--ransac-threshold", ransac_threshold, "Plane inlier distance")->capture_default_str();
  pre->add_option("--ransac-iterations", ransac_iterations, "RANSAC iterations")->capture_default_str();
  pre->add_option("--otsu-bins", otsu_bins, "Histogram bins")->capture_default_str();
  add_common(pre, pre_common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kVerified;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kVerified;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*synth) {
      spec.validate();
      PointCloud cloud = generate_checkerboard(spec);
      if (noise_sigma > 0.0) cloud = add_noise(cloud, {noise_sigma, 0.0, synth_common.seed.value_or(0)});
      emit_cloud(cloud, synth_common, out);
      return kVerified;
    }

    if (*sweep) {
      SweepConfig cfg = sweep_config_from_keys(read_config(sweep_config));
      if (sweep_common.seed) cfg.base_seed = *sweep_common.seed;
      if (sweep_threads) cfg.threads = *sweep_threads;
      const SweepTable table = run_sweep(cfg);
      if (sweep_common.out.empty()) {
        out << format_results(table);
      } else {
        write_results(table, sweep_common.out);
      }
      return kVerified;
    }

    if (*measure) {
      auto keys = read_config(measure_config);
      if (!measure_input.empty()) keys["input"] = measure_input;
      MeasureConfig cfg = measure_config_from_keys(keys);
      // Relative inputs resolve against the config file's directory.
      if (cfg.input.is_relative() && measure_input.empty()) {
        cfg.input = std::filesystem::path(measure_config).parent_path() / cfg.input;
      }
      if (measure_common.seed) cfg.ransac_seed = *measure_common.seed;
      if (no_preprocess) cfg.preprocess = false;
      const MeasureReport report = measure_target(cfg);
      const std::string text = format_report(report);
      out << text;
      if (!measure_common.out.empty()) write_file(measure_common.out, text);
      if (!aligned_out.empty()) {
        Common aligned{std::nullopt, aligned_out, measure_common.format};
        emit_cloud(report.aligned_template, aligned, out);
      }
      if (!report.verified) {
        err << "measurement not verified (colour score " << report.colour_score << ", normalized rmse "
            << report.normalized_rmse << ")\n";
        return kUnverified;
      }
      return kVerified;
    }

    if (*pre) {
      PointCloud cloud = read_point_cloud(pre_input);
      std::ostringstream log;
      log << "input_points: " << cloud.size() << "\n";
      const bool all = step == "all";
      if (step == "crop" || all) {
        if (crop_text.empty()) {
          if (!all) throw Error("--step crop needs --crop");
        } else {
          cloud = crop_aabb(cloud, parse_box(crop_text));
          log << "cropped_points: " << cloud.size() << "\n";
        }
      }
      if (step == "ransac" || all) {
        const RansacResult fit = ransac_plane(cloud, ransac_threshold, ransac_iterations, pre_common.seed.value_or(0));
        log << "plane_normal: " << fit.plane.normal.x() << " " << fit.plane.normal.y() << " " << fit.plane.normal.z()
            << "\nplane_offset: " << fit.plane.offset << "\ninliers: " << fit.inlier_count << "\n";
        cloud = cloud.select(fit.inliers);
      }
      if (step == "otsu" || all) {
        cloud = normalize_intensity(cloud);
        const double thr = otsu_threshold(cloud.intensity, otsu_bins);
        log << "otsu_threshold: " << thr << "\n";
        cloud = binarize_intensity(cloud, thr);
      }
      log << "output_points: " << cloud.size() << "\n";
      if (pre_common.out.empty()) {
        out << log.str();
      } else {
        err << log.str();
        emit_cloud(cloud, pre_common, out);
      }
      return kVerified;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}

}  // namespace ctm::cli
