#include "ctm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "ctm/error.hpp"
#include "ctm/normals.hpp"

namespace ctm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Bit pattern of a grid coordinate; -0.0 folds onto 0.0.
std::uint64_t coord_bits(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

constexpr std::uint64_t kPoseSalt = 0x706f7365ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;

double default_radius(const CheckerboardSpec& spec) { return 2.5 * spec.point_spacing; }

}  // namespace

std::string_view method_name(Method m) { return m == Method::Coloured ? "coloured" : "point-to-plane"; }

Method parse_method(std::string_view name) {
  if (name == "coloured" || name == "colored") return Method::Coloured;
  if (name == "point-to-plane" || name == "icp") return Method::PointToPlane;
  throw Error("unknown method '" + std::string(name) + "'");
}

ColouredIcpParams default_trial_icp(const CheckerboardSpec& spec) {
  ColouredIcpParams p;
  p.base.max_correspondence_distance = 2.0 * spec.side_length();
  p.base.reference_length = spec.side_length();
  p.gradient_radius = default_radius(spec);
  return p;
}

std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = splitmix64(base);
  for (auto w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

std::uint64_t trial_seed(std::uint64_t base_seed, double shift_fraction, int trial) {
  return mix_seed(base_seed, {kPoseSalt, coord_bits(shift_fraction), static_cast<std::uint64_t>(trial)});
}

std::uint64_t noise_seed(std::uint64_t base_seed, double shift_fraction, int trial) {
  return mix_seed(base_seed, {kNoiseSalt, coord_bits(shift_fraction), static_cast<std::uint64_t>(trial)});
}

Eigen::Vector2d shift_direction_for_seed(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, {0x646972ULL}));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  return {std::cos(a), std::sin(a)};
}

TrialRecord run_trial(const TrialConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.config = cfg;
  const double side = cfg.spec.side_length();
  try {
    const PointCloud tmpl = generate_checkerboard(cfg.spec);

    NormalParams np;
    np.radius = cfg.normal_radius > 0.0 ? cfg.normal_radius : default_radius(cfg.spec);
    const PointCloud target = estimate_normals(add_noise(tmpl, cfg.noise), np);

    rec.shift_direction = shift_direction_for_seed(cfg.seed);
    Perturbation pert;
    pert.shift_fraction = cfg.shift_fraction;
    pert.shift_direction = rec.shift_direction;
    pert.in_plane_deg = cfg.in_plane_deg;
    pert.out_plane_deg = cfg.out_plane_deg;
    pert.seed = cfg.seed;
    rec.ground_truth = perturbation_to_transform(pert, cfg.spec);
    const PointCloud source = apply_transform(tmpl, rec.ground_truth);

    RegistrationResult result;
    if (cfg.method == Method::Coloured) {
      result = coloured_icp(source, target, RigidTransform::identity(), cfg.icp);
    } else {
      result = icp_point_to_plane(source, target, RigidTransform::identity(), cfg.icp.base);
      result.colour_score =
          colour_score(source, target, result.transform, cfg.icp.base.max_correspondence_distance);
    }
    rec.estimate = result.transform;
    rec.solver_rmse = result.normalized_rmse;
    rec.colour_score = result.colour_score;
    rec.iterations = result.iterations;

    // Source point i is template point i moved by the ground truth; its true
    // partner is template point i, the noise-free position of target point i.
    const RigidTransform residual = compose(result.transform, rec.ground_truth);
    double sum = 0.0;
    for (const auto& p : tmpl.points) sum += (residual(p) - p).squaredNorm();
    rec.normalized_rmse = std::sqrt(sum / static_cast<double>(tmpl.size())) / side;

    const Vec3 true_centre = tmpl.centroid();
    const Vec3 measured = target_centre(result.transform, rec.ground_truth(true_centre));
    rec.centre_error = (measured - true_centre).norm();
    rec.centre_error_fraction = rec.centre_error / side;

    rec.geometric_success = rec.normalized_rmse < kRmseSuccessFraction;
    rec.colour_success = rec.colour_score > kColourSuccessScore;
  } catch (const std::exception& e) {
    rec.diagnostics = e.what();
    rec.normalized_rmse = std::numeric_limits<double>::quiet_NaN();
    rec.geometric_success = false;
    rec.colour_success = false;
  }
  rec.success = rec.geometric_success && rec.colour_success;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void SweepConfig::validate() const {
  spec.validate();
  if (trials_per_cell < 1) throw Error("sweep: trials_per_cell must be at least 1");
  if (shift_fractions.empty() || rotations_deg.empty() || noise_sigmas.empty() || methods.empty()) {
    throw Error("sweep: every grid axis needs at least one value");
  }
  for (double s : shift_fractions) {
    if (!(s >= 0.0 && s <= 1.5 + 1e-12)) throw Error("sweep: shift fractions must lie in [0, 1.5]");
  }
  for (double n : noise_sigmas) {
    if (!(n >= 0.0)) throw Error("sweep: noise sigmas must be non-negative");
  }
  if (icp) icp->validate();
}

SweepRow aggregate(const std::vector<TrialRecord>& records, Method method, double shift, double rotation,
                   double noise_sigma) {
  SweepRow row;
  row.method = method;
  row.shift_fraction = shift;
  row.in_plane_deg = rotation;
  row.out_plane_deg = rotation;
  row.noise_sigma = noise_sigma;
  row.trials = static_cast<int>(records.size());
  if (records.empty()) return row;

  std::size_t successes = 0;
  double rmse_sum = 0.0, centre_sum = 0.0, iter_sum = 0.0;
  for (const auto& r : records) {
    if (r.success) {
      ++successes;
      rmse_sum += r.normalized_rmse;
    }
    centre_sum += std::isfinite(r.centre_error_fraction) ? r.centre_error_fraction : 0.0;
    iter_sum += r.iterations;
  }
  const auto n = static_cast<double>(records.size());
  row.success_rate = static_cast<double>(successes) / n;
  row.mean_centre_error = centre_sum / n;
  row.mean_iterations = iter_sum / n;
  if (successes == 0) {
    row.mean_rmse = std::numeric_limits<double>::quiet_NaN();
    row.std_rmse = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.mean_rmse = rmse_sum / static_cast<double>(successes);
  // Sample standard deviation; a single success has zero spread.
  double sq = 0.0;
  for (const auto& r : records) {
    if (r.success) sq += (r.normalized_rmse - row.mean_rmse) * (r.normalized_rmse - row.mean_rmse);
  }
  row.std_rmse = successes > 1 ? std::sqrt(sq / static_cast<double>(successes - 1)) : 0.0;
  return row;
}

SweepTable run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const ColouredIcpParams icp = cfg.icp ? *cfg.icp : default_trial_icp(cfg.spec);

  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto shifts = sorted(cfg.shift_fractions);
  const auto rotations = sorted(cfg.rotations_deg);
  const auto sigmas = sorted(cfg.noise_sigmas);
  std::vector<Method> methods = cfg.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  struct Cell {
    Method method;
    double shift, rotation, sigma;
  };
  std::vector<Cell> cells;
  for (Method m : methods)
    for (double s : shifts)
      for (double r : rotations)
        for (double n : sigmas) cells.push_back({m, s, r, n});

  const std::size_t per_cell = static_cast<std::size_t>(cfg.trials_per_cell);
  std::vector<TrialRecord> records(cells.size() * per_cell);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < records.size(); job = next++) {
      const Cell& cell = cells[job / per_cell];
      const int t = static_cast<int>(job % per_cell);
      TrialConfig tc;
      tc.spec = cfg.spec;
      tc.shift_fraction = cell.shift;
      tc.in_plane_deg = cell.rotation;
      tc.out_plane_deg = cell.rotation;
      tc.noise.position_sigma = cell.sigma;
      tc.noise.seed = noise_seed(cfg.base_seed, cell.shift, t);
      tc.method = cell.method;
      tc.icp = icp;
      tc.normal_radius = cfg.normal_radius;
      tc.seed = trial_seed(cfg.base_seed, cell.shift, t);
      records[job] = run_trial(tc);
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, records.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  SweepTable table;
  table.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::vector<TrialRecord> slice(records.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
                                         records.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
    table.push_back(aggregate(slice, cells[c].method, cells[c].shift, cells[c].rotation, cells[c].sigma));
  }
  return table;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_number(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error("results csv line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_results(const SweepTable& table) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& r : table) {
    out += method_name(r.method);
    for (double v : {r.shift_fraction, r.in_plane_deg, r.out_plane_deg, r.noise_sigma}) {
      out += ',';
      append_number(out, v);
    }
    out += ',';
    out += std::to_string(r.trials);
    for (double v : {r.success_rate, r.mean_rmse, r.std_rmse, r.mean_centre_error, r.mean_iterations}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

SweepTable parse_results(std::string_view csv) {
  SweepTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kSweepCsvHeader) throw Error("results csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 11) {
      throw Error("results csv line " + std::to_string(line_no) + ": expected 11 fields");
    }
    SweepRow r;
    r.method = parse_method(fields[0]);
    r.shift_fraction = parse_number(fields[1], line_no);
    r.in_plane_deg = parse_number(fields[2], line_no);
    r.out_plane_deg = parse_number(fields[3], line_no);
    r.noise_sigma = parse_number(fields[4], line_no);
    r.trials = static_cast<int>(parse_number(fields[5], line_no));
    r.success_rate = parse_number(fields[6], line_no);
    r.mean_rmse = parse_number(fields[7], line_no);
    r.std_rmse = parse_number(fields[8], line_no);
    r.mean_centre_error = parse_number(fields[9], line_no);
    r.mean_iterations = parse_number(fields[10], line_no);
    table.push_back(r);
  }
  if (line_no == 0) throw Error("results csv: empty input");
  return table;
}

void write_results(const SweepTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const std::string text = format_results(table);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

SweepTable read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results(ss.str());
}

}  // namespace ctm

#include "ctm/io.hpp"

namespace ctm {

SweepConfig sweep_config_from_keys(const std::map<std::string, std::string>& keys) {
  SweepConfig cfg;
  std::optional<double> gate, gradient_radius, weight;
  std::optional<int> iterations;
  for (const auto& [key, value] : keys) {
    if (key == "squares_per_side") {
      cfg.spec.squares_per_side = static_cast<int>(parse_integer(value, key));
    } else if (key == "square_size") {
      cfg.spec.square_size = parse_double(value, key);
    } else if (key == "point_spacing") {
      cfg.spec.point_spacing = parse_double(value, key);
    } else if (key == "shifts") {
      cfg.shift_fractions = parse_doubles(value, key);
    } else if (key == "rotations") {
      cfg.rotations_deg = parse_doubles(value, key);
    } else if (key == "noise_sigmas") {
      cfg.noise_sigmas = parse_doubles(value, key);
    } else if (key == "methods") {
      cfg.methods.clear();
      std::size_t start = 0;
      while (start <= value.size()) {
        const auto comma = value.find(',', start);
        std::string name = value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        if (!name.empty()) cfg.methods.push_back(parse_method(name));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    } else if (key == "trials_per_cell") {
      cfg.trials_per_cell = static_cast<int>(parse_integer(value, key));
    } else if (key == "base_seed" || key == "seed") {
      cfg.base_seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(parse_integer(value, key));
    } else if (key == "normal_radius") {
      cfg.normal_radius = parse_double(value, key);
    } else if (key == "max_correspondence_distance") {
      gate = parse_double(value, key);
    } else if (key == "max_iterations") {
      iterations = static_cast<int>(parse_integer(value, key));
    } else if (key == "geometric_weight") {
      weight = parse_double(value, key);
    } else if (key == "gradient_radius") {
      gradient_radius = parse_double(value, key);
    } else {
      throw Error("unknown sweep config key '" + key + "'");
    }
  }
  if (gate || iterations || weight || gradient_radius) {
    ColouredIcpParams icp = default_trial_icp(cfg.spec);
    if (gate) icp.base.max_correspondence_distance = *gate;
    if (iterations) icp.base.max_iterations = *iterations;
    if (weight) icp.geometric_weight = *weight;
    if (gradient_radius) icp.gradient_radius = *gradient_radius;
    cfg.icp = icp;
  }
  cfg.validate();
  return cfg;
}

}  // namespace ctm
