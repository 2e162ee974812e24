#include "ctm/registration.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "ctm/error.hpp"
#include "ctm/normals.hpp"

namespace ctm {

namespace {

constexpr int kMaxHalvings = 8;
// Eigenvalues below this fraction of the largest are treated as unobservable directions.
constexpr double kRankTolerance = 1e-10;

void check_positive(double v, const char* what) {
  if (!(v > 0.0)) throw Error(std::string("registration: ") + what + " must be positive");
}

std::vector<Vec3> transformed_points(const PointCloud& cloud, const RigidTransform& pose) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) out.push_back(pose(p));
  return out;
}

// Minimum-norm Gauss-Newton step; directions the residuals cannot see stay put.
Vec6 gauss_newton_step(const LinearSystem& sys) {
  const Eigen::Matrix<double, 6, 6> h = sys.jacobian.transpose() * sys.jacobian;
  const Vec6 g = sys.jacobian.transpose() * sys.residuals;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
  const auto& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  Vec6 step = Vec6::Zero();
  if (!(largest > 0.0)) return step;
  for (int k = 0; k < 6; ++k) {
    if (values[k] > kRankTolerance * largest) {
      const Vec6 vk = eig.eigenvectors().col(k);
      step -= vk * (vk.dot(g) / values[k]);
    }
  }
  return step;
}

struct Evaluation {
  std::vector<Correspondence> correspondences;
  double normalized_rmse = 0.0;
  double fitness = 0.0;
};

Evaluation evaluate(const PointCloud& source, const NeighbourIndex& target, const RigidTransform& pose,
                    const IcpParams& params) {
  Evaluation ev;
  const auto moved = transformed_points(source, pose);
  ev.correspondences = find_correspondences(moved, target, params.max_correspondence_distance);
  if (!ev.correspondences.empty()) {
    double sum = 0.0;
    for (const auto& c : ev.correspondences) sum += c.distance * c.distance;
    ev.normalized_rmse =
        std::sqrt(sum / static_cast<double>(ev.correspondences.size())) / params.reference_length;
    ev.fitness = static_cast<double>(ev.correspondences.size()) / static_cast<double>(source.size());
  }
  return ev;
}

// Shared Gauss-Newton driver; `build` maps (pose, correspondences) to a LinearSystem.
template <typename BuildSystem>
RegistrationResult solve(const PointCloud& source, const NeighbourIndex& target, const RigidTransform& init,
                         const IcpParams& params, BuildSystem&& build) {
  RegistrationResult result;
  RigidTransform pose = init;
  Evaluation current = evaluate(source, target, pose, params);
  result.transform = pose;
  result.normalized_rmse = current.normalized_rmse;
  result.fitness = current.fitness;
  if (current.correspondences.empty()) return result;

  for (int it = 0; it < params.max_iterations; ++it) {
    const LinearSystem sys = build(pose, current.correspondences);
    const double before = sys.objective();
    const Vec6 step = gauss_newton_step(sys);

    IterationTrace trace{before, before, 0};
    RigidTransform candidate = pose;
    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h <= kMaxHalvings; ++h, scale *= 0.5) {
      RigidTransform trial = compose(RigidTransform::from_increment(scale * step), pose);
      trial.rotation = orthonormalize(trial.rotation);
      const double after = build(trial, current.correspondences).objective();
      if (after <= before) {
        candidate = trial;
        trace.objective_after = after;
        trace.halvings = h;
        accepted = true;
        break;
      }
    }
    ++result.iterations;
    result.trace.push_back(trace);
    if (!accepted) {
      // No descent along the Gauss-Newton direction: a stationary point for this correspondence set.
      result.converged = true;
      break;
    }

    Evaluation next = evaluate(source, target, candidate, params);
    if (next.correspondences.empty()) {
      pose = candidate;
      current = std::move(next);
      break;
    }
    const bool settled = std::abs(next.normalized_rmse - current.normalized_rmse) < params.relative_rmse_tol &&
                         std::abs(next.fitness - current.fitness) < params.relative_fitness_tol;
    pose = candidate;
    current = std::move(next);
    if (settled) {
      result.converged = true;
      break;
    }
  }

  result.transform = pose;
  result.normalized_rmse = current.normalized_rmse;
  result.fitness = current.fitness;
  return result;
}

}  // namespace

void IcpParams::validate() const {
  check_positive(max_correspondence_distance, "max_correspondence_distance");
  if (max_iterations < 1) throw Error("registration: max_iterations must be at least 1");
  check_positive(relative_rmse_tol, "relative_rmse_tol");
  check_positive(relative_fitness_tol, "relative_fitness_tol");
  check_positive(reference_length, "reference_length");
}

void ColouredIcpParams::validate() const {
  base.validate();
  if (!(geometric_weight > 0.0 && geometric_weight < 1.0)) {
    throw Error("registration: geometric_weight must lie in (0,1)");
  }
  check_positive(gradient_radius, "gradient_radius");
  for (const auto& level : pyramid) {
    check_positive(level.voxel_size, "pyramid voxel_size");
    check_positive(level.max_correspondence_distance, "pyramid max_correspondence_distance");
    check_positive(level.gradient_radius, "pyramid gradient_radius");
    check_positive(level.normal_radius, "pyramid normal_radius");
    if (level.max_iterations < 1) throw Error("registration: pyramid max_iterations must be at least 1");
  }
}

std::vector<Correspondence> find_correspondences(std::span<const Vec3> moved_source, const NeighbourIndex& target,
                                                 double max_distance) {
  std::vector<Correspondence> out;
  out.reserve(moved_source.size());
  for (std::size_t i = 0; i < moved_source.size(); ++i) {
    const auto nb = target.nearest(moved_source[i]);
    if (nb.distance <= max_distance) out.push_back({i, nb.id, nb.distance});
  }
  return out;
}

LinearSystem point_to_plane_system(const PointCloud& source, const PointCloud& target, const RigidTransform& pose,
                                   std::span<const Correspondence> correspondences) {
  LinearSystem sys;
  const auto n = static_cast<Eigen::Index>(correspondences.size());
  sys.residuals.resize(n);
  sys.jacobian.resize(n, 6);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& c = correspondences[static_cast<std::size_t>(k)];
    const Vec3 q = pose(source.points[c.source]);
    const Vec3& pt = target.points[c.target];
    const Vec3& nt = target.normals[c.target];
    sys.residuals[k] = (q - pt).dot(nt);
    sys.jacobian.row(k).head<3>() = q.cross(nt).transpose();
    sys.jacobian.row(k).tail<3>() = nt.transpose();
  }
  return sys;
}

LinearSystem coloured_system(const PointCloud& source, const PointCloud& target, const ColourGradientField& gradients,
                             const RigidTransform& pose, std::span<const Correspondence> correspondences,
                             double geometric_weight) {
  LinearSystem sys;
  const auto n = static_cast<Eigen::Index>(correspondences.size());
  const double wg = std::sqrt(geometric_weight);
  const double wc = std::sqrt(1.0 - geometric_weight);
  sys.residuals.resize(2 * n);
  sys.jacobian.resize(2 * n, 6);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& c = correspondences[static_cast<std::size_t>(k)];
    const Vec3 q = pose(source.points[c.source]);
    const Vec3& pt = target.points[c.target];
    const Vec3& nt = target.normals[c.target];

    sys.residuals[k] = wg * (q - pt).dot(nt);
    sys.jacobian.row(k).head<3>() = wg * q.cross(nt).transpose();
    sys.jacobian.row(k).tail<3>() = wg * nt.transpose();

    // Target intensity extrapolated to the tangent-plane projection of q.
    const Vec3 g = gradients[c.target] - gradients[c.target].dot(nt) * nt;
    const double predicted = target.intensity[c.target] + g.dot(q - pt);
    sys.residuals[n + k] = wc * (predicted - source.intensity[c.source]);
    sys.jacobian.row(n + k).head<3>() = wc * q.cross(g).transpose();
    sys.jacobian.row(n + k).tail<3>() = wc * g.transpose();
  }
  return sys;
}

RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                                      const IcpParams& params) {
  params.validate();
  if (source.empty()) throw Error("registration: empty source cloud");
  if (!target.has_normals()) throw Error("registration: target cloud has no normals");
  const NeighbourIndex index(target.points);
  return solve(source, index, init, params, [&](const RigidTransform& pose, const auto& corr) {
    return point_to_plane_system(source, target, pose, corr);
  });
}

namespace {

RegistrationResult coloured_single_scale(const PointCloud& source, const PointCloud& target,
                                         const RigidTransform& init, const IcpParams& base, double weight,
                                         double gradient_radius, std::size_t min_neighbours) {
  const NeighbourIndex index(target.points);
  const auto gradients = compute_colour_gradients(target, index, gradient_radius, min_neighbours);
  return solve(source, index, init, base, [&](const RigidTransform& pose, const auto& corr) {
    return coloured_system(source, target, gradients, pose, corr, weight);
  });
}

}  // namespace

RegistrationResult coloured_icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                                const ColouredIcpParams& params) {
  params.validate();
  if (source.empty()) throw Error("registration: empty source cloud");
  if (!source.has_intensity() || !target.has_intensity()) throw Error("registration: missing intensity");
  if (!target.has_normals()) throw Error("registration: target cloud has no normals");

  RigidTransform pose = init;
  int coarse_iterations = 0;
  for (const auto& level : params.pyramid) {
    const PointCloud src = voxel_downsample(source, level.voxel_size);
    NormalParams np;
    np.radius = level.normal_radius;
    const PointCloud tgt = estimate_normals(voxel_downsample(target, level.voxel_size), np);
    IcpParams base = params.base;
    base.max_correspondence_distance = level.max_correspondence_distance;
    base.max_iterations = level.max_iterations;
    const auto r = coloured_single_scale(src, tgt, pose, base, params.geometric_weight, level.gradient_radius,
                                         params.gradient_min_neighbours);
    pose = r.transform;
    coarse_iterations += r.iterations;
  }

  RegistrationResult result = coloured_single_scale(source, target, pose, params.base, params.geometric_weight,
                                                    params.gradient_radius, params.gradient_min_neighbours);
  result.iterations += coarse_iterations;
  result.colour_score = colour_score(source, target, result.transform, params.base.max_correspondence_distance);
  return result;
}

double colour_score(const PointCloud& source, const PointCloud& target, const RigidTransform& pose,
                    double max_distance) {
  if (!source.has_intensity() || !target.has_intensity()) throw Error("colour score: missing intensity");
  const NeighbourIndex index(target.points);
  const auto corr = find_correspondences(transformed_points(source, pose), index, max_distance);
  if (corr.empty()) return 0.0;
  std::size_t agree = 0;
  for (const auto& c : corr) {
    const bool a = source.intensity[c.source] >= 0.5;
    const bool b = target.intensity[c.target] >= 0.5;
    agree += a == b ? 1 : 0;
  }
  return static_cast<double>(agree) / static_cast<double>(corr.size());
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  check_positive(voxel_size, "voxel_size");
  struct Accum {
    Vec3 p = Vec3::Zero(), c = Vec3::Zero(), n = Vec3::Zero();
    double i = 0.0;
    std::size_t count = 0;
  };
  // Ordered map keeps the output order deterministic.
  std::map<std::tuple<long long, long long, long long>, Accum> cells;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.points[k];
    const auto key = std::make_tuple(static_cast<long long>(std::floor(p.x() / voxel_size)),
                                     static_cast<long long>(std::floor(p.y() / voxel_size)),
                                     static_cast<long long>(std::floor(p.z() / voxel_size)));
    Accum& a = cells[key];
    a.p += p;
    if (cloud.has_intensity()) a.i += cloud.intensity[k];
    if (cloud.has_colour()) a.c += cloud.colour[k];
    if (cloud.has_normals()) a.n += cloud.normals[k];
    ++a.count;
  }
  PointCloud out;
  for (const auto& [key, a] : cells) {
    const double inv = 1.0 / static_cast<double>(a.count);
    out.points.push_back(a.p * inv);
    if (cloud.has_intensity()) out.intensity.push_back(a.i * inv);
    if (cloud.has_colour()) out.colour.push_back(a.c * inv);
    if (cloud.has_normals()) out.normals.push_back(a.n.norm() > 0.0 ? Vec3(a.n.normalized()) : Vec3::UnitZ());
  }
  return out;
}

}  // namespace ctm
