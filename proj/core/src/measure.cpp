#include "ctm/measure.hpp"

#include <cmath>
#include <sstream>

#include "ctm/io.hpp"
#include "ctm/synth.hpp"

namespace ctm {

namespace {

double square_size(const MeasureConfig& cfg) { return cfg.physical_side / cfg.squares_per_side; }
// An odd interval count keeps grid points off the square boundaries, whose
// colour assignment would otherwise shift the pattern by half a spacing.
double default_spacing(double side, int squares) { return side / (20.0 * squares + 1.0); }
double spacing(const MeasureConfig& cfg) {
  return cfg.template_spacing > 0.0 ? cfg.template_spacing
                                    : default_spacing(cfg.physical_side, cfg.squares_per_side);
}
double normal_radius(const MeasureConfig& cfg) {
  return cfg.normal_radius > 0.0 ? cfg.normal_radius : 2.5 * spacing(cfg);
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Template frame whose z axis is the plane normal and whose y axis follows
// world up projected into the plane.
Mat3 plane_frame(const Vec3& normal) {
  Vec3 up = Vec3::UnitZ();
  if (std::abs(normal.dot(up)) > 0.9) up = Vec3::UnitY();
  const Vec3 y = (up - up.dot(normal) * normal).normalized();
  const Vec3 x = y.cross(normal);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = normal;
  return r;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

}  // namespace

void MeasureConfig::validate() const {
  if (!(physical_side > 0.0)) throw Error("measure: physical_side must be positive");
  if (crop) crop->validate();
  CheckerboardSpec spec;
  spec.squares_per_side = squares_per_side;
  spec.square_size = physical_side / squares_per_side;
  spec.point_spacing = spacing(*this);
  spec.validate();
  if (otsu_bins < 2) throw Error("measure: otsu_bins must be at least 2");
  if (icp_max_iterations < 1 || coloured_max_iterations < 1) throw Error("measure: iterations must be at least 1");
  if (!(geometric_weight > 0.0 && geometric_weight < 1.0)) throw Error("measure: geometric_weight must lie in (0,1)");
}

PointCloud make_template(const MeasureConfig& cfg) {
  // Canonical unit-square-size board, then scaled to the physical target.
  CheckerboardSpec canonical;
  canonical.squares_per_side = cfg.squares_per_side;
  canonical.square_size = 1.0;
  canonical.point_spacing = spacing(cfg) / square_size(cfg);
  const PointCloud unit = generate_checkerboard(canonical);
  return intensity_to_colour(resize_template(unit, canonical.side_length(), cfg.physical_side));
}

MeasureReport measure_target(const MeasureConfig& cfg) {
  const PointCloud scan = stage("read", [&] { return read_point_cloud(cfg.input); });
  return measure_target(cfg, scan);
}

MeasureReport measure_target(const MeasureConfig& cfg, const PointCloud& raw_scan) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  const double side = cfg.physical_side;
  MeasureReport report;
  report.scan_points = raw_scan.size();

  PointCloud scan = stage("crop", [&] {
    PointCloud c = cfg.crop ? crop_aabb(raw_scan, *cfg.crop) : raw_scan;
    if (c.size() < 3) throw Error("fewer than three points left after cropping");
    if (!c.has_intensity()) throw Error("scan has no intensity");
    return normalize_intensity(c);
  });
  report.cropped_points = scan.size();
  report.stages.push_back({"crop", std::to_string(scan.size()) + " of " + std::to_string(raw_scan.size()) +
                                       " points kept; intensity min-max normalised"});

  const PointCloud tmpl = stage("template", [&] { return make_template(cfg); });

  const RigidTransform init = stage("initialise", [&] {
    if (cfg.initial_guess) return *cfg.initial_guess;
    const auto plane = ransac_plane(scan, cfg.ransac_threshold, cfg.ransac_iterations, cfg.ransac_seed).plane;
    const Vec3 centre = cfg.crop ? cfg.crop->centre() : scan.centroid();
    const Vec3 normal = orient_normal(plane.normal, centre, cfg.sensor);
    // Template centre: the box centre dropped onto the fitted plane.
    const Vec3 on_plane = centre - (plane.normal.dot(centre) - plane.offset) * plane.normal;
    return RigidTransform{plane_frame(normal), on_plane};
  });
  report.stages.push_back({"initialise", "template centre at " + fmt(init.translation)});

  NormalParams np;
  np.radius = normal_radius(cfg);
  np.viewpoint = cfg.sensor;
  scan = stage("normals", [&] { return estimate_normals(scan, np); });

  IcpParams icp;
  icp.max_correspondence_distance = cfg.icp_max_distance > 0.0 ? cfg.icp_max_distance : 0.5 * side;
  icp.max_iterations = cfg.icp_max_iterations;
  icp.reference_length = side;
  report.coarse = stage("point-to-plane", [&] { return icp_point_to_plane(tmpl, scan, init, icp); });
  report.stages.push_back({"point-to-plane", "rmse " + fmt(report.coarse.normalized_rmse) + ", fitness " +
                                                 fmt(report.coarse.fitness) + ", iterations " +
                                                 std::to_string(report.coarse.iterations)});

  if (cfg.preprocess) {
    scan = stage("ransac", [&] {
      auto cleaned = remove_outliers(scan, cfg.ransac_threshold, cfg.ransac_iterations, cfg.ransac_seed);
      if (cleaned.size() < 3) throw Error("fewer than three inliers");
      return estimate_normals(cleaned, np);
    });
    report.stages.push_back({"ransac", std::to_string(scan.size()) + " inliers of " +
                                           std::to_string(report.cropped_points)});
    report.otsu_threshold = stage("otsu", [&] {
      return otsu_threshold(scan.intensity, cfg.otsu_bins);
    });
    scan = binarize_intensity(scan, report.otsu_threshold);
    report.stages.push_back({"otsu", "threshold " + fmt(report.otsu_threshold)});
  } else {
    report.stages.push_back({"ransac", "skipped"});
    report.stages.push_back({"otsu", "skipped"});
  }
  report.cleaned_points = scan.size();

  ColouredIcpParams coloured;
  coloured.base.max_correspondence_distance =
      cfg.coloured_max_distance > 0.0 ? cfg.coloured_max_distance : 0.5 * side;
  coloured.base.max_iterations = cfg.coloured_max_iterations;
  coloured.base.reference_length = side;
  coloured.geometric_weight = cfg.geometric_weight;
  coloured.gradient_radius = cfg.gradient_radius > 0.0 ? cfg.gradient_radius : normal_radius(cfg);
  const RegistrationResult fine =
      stage("coloured-icp", [&] { return coloured_icp(tmpl, scan, report.coarse.transform, coloured); });
  report.stages.push_back({"coloured-icp", "rmse " + fmt(fine.normalized_rmse) + ", colour score " +
                                               fmt(fine.colour_score) + ", iterations " +
                                               std::to_string(fine.iterations)});

  report.transform = fine.transform;
  report.centre = target_centre(fine.transform, tmpl.centroid());
  report.normalized_rmse = fine.normalized_rmse;
  report.colour_score = fine.colour_score;
  report.fitness = fine.fitness;
  report.iterations = fine.iterations;
  report.converged = fine.converged;
  report.verified = fine.colour_score > 0.5 && fine.normalized_rmse < 0.15;
  report.aligned_template = apply_transform(tmpl, fine.transform);
  return report;
}

std::string format_report(const MeasureReport& r) {
  std::ostringstream out;
  out << "status: " << (r.verified ? "verified" : "unverified") << '\n';
  out << "centre: " << fmt(r.centre) << '\n';
  const auto& m = r.transform.rotation;
  out << "rotation: " << fmt(Vec3(m.row(0).transpose())) << ' ' << fmt(Vec3(m.row(1).transpose())) << ' '
      << fmt(Vec3(m.row(2).transpose())) << '\n';
  out << "translation: " << fmt(r.transform.translation) << '\n';
  out << "normalized_rmse: " << fmt(r.normalized_rmse) << '\n';
  out << "colour_score: " << fmt(r.colour_score) << '\n';
  out << "fitness: " << fmt(r.fitness) << '\n';
  out << "iterations: " << r.iterations << '\n';
  out << "converged: " << (r.converged ? "true" : "false") << '\n';
  out << "scan_points: " << r.scan_points << '\n';
  out << "cropped_points: " << r.cropped_points << '\n';
  out << "cleaned_points: " << r.cleaned_points << '\n';
  for (const auto& s : r.stages) out << "stage." << s.stage << ": " << s.detail << '\n';
  return out.str();
}

MeasureConfig measure_config_from_keys(const std::map<std::string, std::string>& keys) {
  MeasureConfig cfg;
  Vec3 guess_t = Vec3::Zero(), guess_r = Vec3::Zero();
  bool has_guess = false;
  for (const auto& [key, value] : keys) {
    if (key == "input") {
      cfg.input = value;
    } else if (key == "crop") {
      const auto v = parse_doubles(value, key);
      if (v.size() != 6) throw Error("config key 'crop': expected min_x min_y min_z max_x max_y max_z");
      cfg.crop = Aabb{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    } else if (key == "physical_side") {
      cfg.physical_side = parse_double(value, key);
    } else if (key == "squares_per_side") {
      cfg.squares_per_side = static_cast<int>(parse_integer(value, key));
    } else if (key == "template_spacing") {
      cfg.template_spacing = parse_double(value, key);
    } else if (key == "normal_radius") {
      cfg.normal_radius = parse_double(value, key);
    } else if (key == "sensor_position") {
      cfg.sensor = Viewpoint::position(parse_vec3(value, key));
    } else if (key == "ransac_threshold") {
      cfg.ransac_threshold = parse_double(value, key);
    } else if (key == "ransac_iterations") {
      cfg.ransac_iterations = static_cast<int>(parse_integer(value, key));
    } else if (key == "ransac_seed" || key == "seed") {
      cfg.ransac_seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "otsu_bins") {
      cfg.otsu_bins = static_cast<int>(parse_integer(value, key));
    } else if (key == "preprocess") {
      cfg.preprocess = parse_bool(value, key);
    } else if (key == "icp_max_distance") {
      cfg.icp_max_distance = parse_double(value, key);
    } else if (key == "icp_max_iterations") {
      cfg.icp_max_iterations = static_cast<int>(parse_integer(value, key));
    } else if (key == "coloured_max_distance") {
      cfg.coloured_max_distance = parse_double(value, key);
    } else if (key == "coloured_max_iterations") {
      cfg.coloured_max_iterations = static_cast<int>(parse_integer(value, key));
    } else if (key == "geometric_weight") {
      cfg.geometric_weight = parse_double(value, key);
    } else if (key == "gradient_radius") {
      cfg.gradient_radius = parse_double(value, key);
    } else if (key == "guess_translation") {
      guess_t = parse_vec3(value, key);
      has_guess = true;
    } else if (key == "guess_rotation_vector") {
      guess_r = parse_vec3(value, key);
      has_guess = true;
    } else {
      throw Error("unknown measure config key '" + key + "'");
    }
  }
  if (has_guess) cfg.initial_guess = RigidTransform::from_rotation_vector(guess_r, guess_t);
  cfg.validate();
  return cfg;
}

}  // namespace ctm
