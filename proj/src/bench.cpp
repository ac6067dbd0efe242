#include "bpa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "bpa/errors.hpp"
#include "bpa/features.hpp"

namespace bpa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t root, int trial, std::uint64_t lane) {
  return splitmix64(splitmix64(root + 0x51ED2701ull) + 2654435761ull * trial + lane);
}

struct SurfacePoint {
  Vec3 p;
  bool edge = false;
  std::optional<SurfaceFrame> frame;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Fixed in-plane tangents per box face keep the frames deterministic.
SurfacePoint box_point(const Vec3& half, std::mt19937_64& rng) {
  const double ax = half.y() * half.z(), ay = half.x() * half.z(), az = half.x() * half.y();
  std::discrete_distribution<int> face_of({ax, ax, ay, ay, az, az});
  const int f = face_of(rng);
  const int axis = f / 2;
  const double sign = (f % 2 == 0) ? 1.0 : -1.0;
  Vec3 p;
  p(axis) = sign * half(axis);
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  p(u) = uniform(rng, -half(u), half(u));
  p(v) = uniform(rng, -half(v), half(v));
  SurfacePoint sp;
  sp.p = p;
  SurfaceFrame fr;
  fr.normal = Vec3::Zero();
  fr.normal(axis) = sign;
  fr.principal_dir = Vec3::Zero();
  fr.principal_dir(u) = 1.0;
  fr.c1 = fr.c2 = 0.0;  // flat
  sp.frame = fr;
  return sp;
}

SurfacePoint box_edge_point(const Vec3& half, std::mt19937_64& rng) {
  // One of the 12 crease segments, uniform along it.
  std::uniform_int_distribution<int> pick_axis(0, 2);
  const int axis = pick_axis(rng);
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  std::uniform_int_distribution<int> corner(0, 3);
  const int c = corner(rng);
  Vec3 p;
  p(axis) = uniform(rng, -half(axis), half(axis));
  p(u) = (c & 1) ? half(u) : -half(u);
  p(v) = (c & 2) ? half(v) : -half(v);
  SurfacePoint sp;
  sp.p = p;
  sp.edge = true;
  return sp;
}

SurfacePoint cylinder_point(double radius, double height, std::mt19937_64& rng) {
  const double th = uniform(rng, 0.0, 2.0 * M_PI);
  SurfacePoint sp;
  sp.p = Vec3(radius * std::cos(th), radius * std::sin(th),
              uniform(rng, -0.5 * height, 0.5 * height));
  SurfaceFrame fr;
  fr.normal = Vec3(std::cos(th), std::sin(th), 0.0);
  fr.principal_dir = Vec3::UnitZ();  // along the axis
  fr.c1 = 1.0 / radius;
  fr.c2 = 0.0;  // curvature direction fully determined
  sp.frame = fr;
  return sp;
}

SurfacePoint cylinder_rim_point(double radius, double height, std::mt19937_64& rng) {
  const double th = uniform(rng, 0.0, 2.0 * M_PI);
  std::uniform_int_distribution<int> top(0, 1);
  SurfacePoint sp;
  sp.p = Vec3(radius * std::cos(th), radius * std::sin(th),
              (top(rng) != 0 ? 0.5 : -0.5) * height);
  sp.edge = true;
  return sp;
}

SurfacePoint sphere_cap_point(double radius, double max_polar, std::mt19937_64& rng) {
  const double cmin = std::cos(max_polar);
  const double cz = uniform(rng, cmin, 1.0);
  const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
  const double th = uniform(rng, 0.0, 2.0 * M_PI);
  const Vec3 n(sz * std::cos(th), sz * std::sin(th), cz);
  SurfacePoint sp;
  sp.p = radius * n;
  SurfaceFrame fr;
  fr.normal = n;
  Vec3 tangent = Vec3::UnitZ().cross(n);
  if (tangent.norm() < 1e-6) tangent = Vec3::UnitX().cross(n);
  fr.principal_dir = tangent.normalized();
  fr.c1 = fr.c2 = 1.0 / radius;  // isotropic curvature
  sp.frame = fr;
  return sp;
}

SurfacePoint sphere_cap_rim_point(double radius, double max_polar, std::mt19937_64& rng) {
  const double th = uniform(rng, 0.0, 2.0 * M_PI);
  const double s = std::sin(max_polar), c = std::cos(max_polar);
  SurfacePoint sp;
  sp.p = radius * Vec3(s * std::cos(th), s * std::sin(th), c);
  sp.edge = true;
  return sp;
}

}  // namespace

Shape shape_from_string(const std::string& s) {
  if (s == "box") return Shape::kBox;
  if (s == "cylinder") return Shape::kCylinder;
  if (s == "sphere-cap") return Shape::kSphereCap;
  if (s == "composite") return Shape::kComposite;
  throw InvalidInputError("unknown shape '" + s + "' (box|cylinder|sphere-cap|composite)");
}

std::string to_string(Shape s) {
  switch (s) {
    case Shape::kBox: return "box";
    case Shape::kCylinder: return "cylinder";
    case Shape::kSphereCap: return "sphere-cap";
    case Shape::kComposite: return "composite";
  }
  return "?";
}

void TrialConfig::validate() const {
  if (n_trials < 1) throw InvalidInputError("n_trials must be >= 1");
  if (n_points < 4) throw InvalidInputError("n_points must be >= 4");
  if (!(position_noise_std >= 0.0)) throw InvalidInputError("position_noise_std must be >= 0");
  if (!(perturb_trans_std >= 0.0) || !(perturb_rot_std >= 0.0)) {
    throw InvalidInputError("perturbation stds must be >= 0");
  }
  if (frame_noise_kappa > 0.0) throw InvalidInputError("frame_noise_kappa must be <= 0");
  if (iterations < 1) throw InvalidInputError("iterations must be >= 1");
  if (samples_per_step < 1) throw InvalidInputError("samples_per_step must be >= 1");
  if (correspondences_per_step < 1) {
    throw InvalidInputError("correspondences_per_step must be >= 1");
  }
}

OrientedCloud generate_cloud(const TrialConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  constexpr double kEdgeFraction = 0.2;

  const Vec3 box_half(0.10, 0.075, 0.05);
  const double cyl_r = 0.05, cyl_h = 0.20;
  const double cap_r = 0.08, cap_polar = M_PI / 3.0;

  const auto draw = [&](Shape s, bool edge) -> SurfacePoint {
    switch (s) {
      case Shape::kBox: return edge ? box_edge_point(box_half, rng) : box_point(box_half, rng);
      case Shape::kCylinder:
        return edge ? cylinder_rim_point(cyl_r, cyl_h, rng) : cylinder_point(cyl_r, cyl_h, rng);
      case Shape::kSphereCap:
        return edge ? sphere_cap_rim_point(cap_r, cap_polar, rng)
                    : sphere_cap_point(cap_r, cap_polar, rng);
      default: return {};
    }
  };

  OrientedCloud cloud;
  cloud.points.reserve(cfg.n_points);
  cloud.frames.reserve(cfg.n_points);
  cloud.edge_mask.reserve(cfg.n_points);

  std::bernoulli_distribution is_edge(kEdgeFraction);
  // Composite: box body, cylinder standing on it, cap on the side.
  std::discrete_distribution<int> part_of({0.40, 0.35, 0.25});

  for (int i = 0; i < cfg.n_points; ++i) {
    SurfacePoint sp;
    const bool edge = is_edge(rng);
    if (cfg.shape == Shape::kComposite) {
      const int part = part_of(rng);
      const Shape s = part == 0 ? Shape::kBox : (part == 1 ? Shape::kCylinder : Shape::kSphereCap);
      sp = draw(s, edge);
      if (part == 1) {
        sp.p += Vec3(0.0, 0.0, 0.05 + 0.5 * cyl_h);
      } else if (part == 2) {
        // Cap rotated to face +x, attached to the box side.
        const RotationMatrix Rx = quat_to_rotation(
            UnitQuaternion::from_axis_angle(Vec3::UnitY(), 0.5 * M_PI));
        sp.p = Rx * sp.p + Vec3(0.10 - cap_r * std::cos(cap_polar), 0.0, 0.0);
        if (sp.frame) {
          sp.frame->normal = Rx * sp.frame->normal;
          sp.frame->principal_dir = Rx * sp.frame->principal_dir;
        }
      }
    } else {
      sp = draw(cfg.shape, edge);
    }

    cloud.points.push_back(sp.p);
    cloud.edge_mask.push_back(sp.edge);
    if (sp.frame) {
      PointFrame pf;
      pf.q = orientation_from_frame(*sp.frame);
      pf.noise = feature_noise_bingham(*sp.frame, cfg.frame_noise_kappa);
      cloud.frames.push_back(pf);
    } else {
      cloud.frames.push_back(std::nullopt);
    }
  }
  return cloud;
}

RigidPose perturb_pose(const RigidPose& truth, const TrialConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 dt(normal(rng), normal(rng), normal(rng));
  Vec3 axis(normal(rng), normal(rng), normal(rng));
  if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
  const double angle = cfg.perturb_rot_std * normal(rng);

  RigidPose out;
  out.t = truth.t + cfg.perturb_trans_std * dt;
  out.q = quat_multiply(UnitQuaternion::from_axis_angle(axis, angle), truth.q);
  return out;
}

namespace {

std::vector<double> running_min(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    m = std::min(m, v[i]);
    out[i] = m;
  }
  return out;
}

TrialRecord run_trial(const TrialConfig& cfg, int trial) {
  TrialRecord rec;
  rec.trial_index = trial;

  std::mt19937_64 rng(trial_seed(cfg.seed, trial, 0));
  const OrientedCloud model = generate_cloud(cfg, rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d qv(normal(rng), normal(rng), normal(rng), normal(rng));
  if (qv.norm() < 1e-12) qv = Eigen::Vector4d::UnitX();
  RigidPose truth;
  truth.q = UnitQuaternion::from_coeffs_normalized(qv).canonical();
  truth.t = 0.08 * Vec3(normal(rng), normal(rng), normal(rng));

  // Scene = model under the true pose with position and frame noise.
  OrientedCloud scene;
  scene.points.reserve(model.points.size());
  scene.frames.reserve(model.points.size());
  scene.edge_mask = model.edge_mask;
  const RotationMatrix Rgt = quat_to_rotation(truth.q);
  for (std::size_t i = 0; i < model.points.size(); ++i) {
    const Vec3 noise(normal(rng), normal(rng), normal(rng));
    scene.points.push_back(Rgt * (model.points[i] + truth.t) + cfg.position_noise_std * noise);
    if (model.frames[i]) {
      PointFrame pf;
      const UnitQuaternion eps = bingham_sample(model.frames[i]->noise, rng, 1).front();
      pf.q = quat_multiply(quat_multiply(truth.q, model.frames[i]->q), eps);
      pf.noise = model.frames[i]->noise;
      scene.frames.push_back(pf);
    } else {
      scene.frames.push_back(std::nullopt);
    }
  }

  const RigidPose init = perturb_pose(truth, cfg, rng);

  AlignConfig acfg;
  acfg.iterations = cfg.iterations;
  acfg.samples_per_step = cfg.samples_per_step;
  acfg.correspondences_per_step = cfg.correspondences_per_step;
  acfg.correspondence_sigma = std::max(cfg.position_noise_std, 1e-4);
  acfg.accept_mode = AcceptMode::kAlways;
  acfg.seed = trial_seed(cfg.seed, trial, 1);

  const auto errors = [&](const std::vector<TraceEntry>& trace, std::vector<double>& pos,
                          std::vector<double>& rot) {
    std::vector<double> perr, rerr;
    perr.reserve(trace.size());
    rerr.reserve(trace.size());
    for (const TraceEntry& e : trace) {
      perr.push_back((e.pose.t - truth.t).norm());
      rerr.push_back(angular_distance(e.pose.q, truth.q));
    }
    pos = running_min(perr);
    rot = running_min(rerr);
  };

  try {
    errors(icp_align(model, scene, init, acfg), rec.icp_position, rec.icp_orientation);
    errors(bpa_iterative_align(model, scene, init, acfg), rec.bpa_position, rec.bpa_orientation);
    rec.ok = true;
  } catch (const DegenerateError&) {
    rec.ok = false;
  }
  return rec;
}

}  // namespace

BenchmarkResult run_benchmark(const TrialConfig& cfg) {
  cfg.validate();
  BenchmarkResult result;
  result.trials.resize(cfg.n_trials);

  const unsigned n_workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i = next.fetch_add(1); i < cfg.n_trials; i = next.fetch_add(1)) {
      result.trials[i] = run_trial(cfg, i);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ErrorCurves& curves = result.curves;
  curves.bpa_position.assign(cfg.iterations, 0.0);
  curves.bpa_orientation.assign(cfg.iterations, 0.0);
  curves.icp_position.assign(cfg.iterations, 0.0);
  curves.icp_orientation.assign(cfg.iterations, 0.0);
  int ok_count = 0;
  for (const TrialRecord& rec : result.trials) {
    if (!rec.ok) {
      ++curves.excluded_trials;
      continue;
    }
    ++ok_count;
    for (int i = 0; i < cfg.iterations; ++i) {
      curves.bpa_position[i] += rec.bpa_position[i];
      curves.bpa_orientation[i] += rec.bpa_orientation[i];
      curves.icp_position[i] += rec.icp_position[i];
      curves.icp_orientation[i] += rec.icp_orientation[i];
    }
  }
  if (ok_count > 0) {
    for (int i = 0; i < cfg.iterations; ++i) {
      curves.bpa_position[i] /= ok_count;
      curves.bpa_orientation[i] /= ok_count;
      curves.icp_position[i] /= ok_count;
      curves.icp_orientation[i] /= ok_count;
    }
  }
  return result;
}

std::string curves_to_csv(const ErrorCurves& curves) {
  std::string out = "# excluded_trials=" + std::to_string(curves.excluded_trials) + "\n";
  out += "iter,bpa_pos,icp_pos,bpa_rot,icp_rot\n";
  char buf[256];
  for (std::size_t i = 0; i < curves.bpa_position.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                  curves.bpa_position[i], curves.icp_position[i], curves.bpa_orientation[i],
                  curves.icp_orientation[i]);
    out += buf;
  }
  return out;
}

}  // namespace bpa
