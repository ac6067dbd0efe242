#include "bpa/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bpa/errors.hpp"
#include "kdtree.hpp"

namespace bpa {

namespace {

constexpr std::uint64_t kProbeTag = 1;
constexpr std::uint64_t kCorrTag = 2;
constexpr std::uint64_t kSampleTag = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent per-purpose, per-iteration generator split from the root
// seed. ICP and BPA runs with the same seed therefore draw identical
// scene-point subsets at every iteration.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag, int iter) {
  return std::mt19937_64(
      splitmix64(splitmix64(seed + tag * 0x9E3779B97F4A7C15ull) + static_cast<std::uint64_t>(iter)));
}

std::vector<Correspondence> strip_orientations(std::vector<Correspondence> corrs) {
  for (Correspondence& c : corrs) c.orientation.reset();
  return corrs;
}

double probe_sse(std::span<const Correspondence> probe, const RigidPose& pose) {
  const RotationMatrix R = quat_to_rotation(pose.q);
  double s = 0.0;
  for (const Correspondence& c : probe) {
    s += (R * (c.model_point + pose.t) - c.scene_point).squaredNorm();
  }
  return s;
}

double logsumexp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void AlignConfig::validate() const {
  if (iterations < 1) throw InvalidInputError("iterations must be >= 1");
  if (samples_per_step < 1) throw InvalidInputError("samples_per_step must be >= 1");
  if (translation_proposal_std && !(*translation_proposal_std > 0.0)) {
    throw InvalidInputError("translation_proposal_std must be > 0");
  }
  if (correspondences_per_step < 1) throw InvalidInputError("correspondences_per_step must be >= 1");
  if (!(correspondence_sigma > 0.0)) throw InvalidInputError("correspondence_sigma must be > 0");
  if (probe_size < 1) throw InvalidInputError("probe_size must be >= 1");
}

void OrientedCloud::validate() const {
  if (!frames.empty() && frames.size() != points.size()) {
    throw InvalidInputError("frames length must match points");
  }
  if (!edge_mask.empty() && edge_mask.size() != points.size()) {
    throw InvalidInputError("edge_mask length must match points");
  }
}

double measurement_log_likelihood(std::span<const Correspondence> corrs,
                                  const UnitQuaternion& q, const Vec3& t) {
  constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log sqrt(2 pi)
  const RotationMatrix R = quat_to_rotation(q);
  double s = 0.0;
  for (const Correspondence& c : corrs) {
    if (!(c.sigma > 0.0)) throw InvalidInputError("correspondence sigma must be positive");
    const double d2 = (R * (c.model_point + t) - c.scene_point).squaredNorm();
    s += -kLogSqrt2Pi - std::log(c.sigma) - 0.5 * d2 / (c.sigma * c.sigma);
    if (c.orientation) {
      s += detail::measurement_log_pdf(*c.orientation, q);
    }
  }
  return s;
}

std::vector<PoseSample> bpa_sample(std::span<const Correspondence> corrs,
                                   const AlignConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (corrs.empty()) throw InvalidInputError("bpa_sample needs at least one correspondence");

  const Vec3 t_star = least_squares_translation(corrs);
  double tau = 0.0;
  if (cfg.translation_proposal_std) {
    tau = *cfg.translation_proposal_std;
  } else {
    double mean_sigma = 0.0;
    for (const Correspondence& c : corrs) mean_sigma += c.sigma;
    mean_sigma /= static_cast<double>(corrs.size());
    tau = mean_sigma / std::sqrt(static_cast<double>(corrs.size()));
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PoseSample> out;
  out.reserve(static_cast<std::size_t>(cfg.samples_per_step));
  for (int k = 0; k < cfg.samples_per_step; ++k) {
    const Vec3 step(normal(rng), normal(rng), normal(rng));
    const Vec3 t = t_star + tau * step;
    const PosePosterior post =
        fuse_orientation_measurements(corrs, posterior_orientation(corrs, t));
    const UnitQuaternion q = bingham_sample(post.q_given_t, rng, 1).front();

    const double log_prop_t = -0.5 * step.squaredNorm() - 3.0 * std::log(tau) -
                              1.5 * std::log(2.0 * std::numbers::pi);
    const double log_prop_q = bingham_log_pdf(post.q_given_t, q);
    const double log_post = measurement_log_likelihood(corrs, q, t);
    out.push_back({q, t, log_post - log_prop_t - log_prop_q});
  }

  std::vector<double> lw(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) lw[i] = out[i].log_weight;
  const double lse = logsumexp(lw);
  for (PoseSample& s : out) s.log_weight -= lse;
  return out;
}

std::vector<Correspondence> find_correspondences(const OrientedCloud& model,
                                                 const OrientedCloud& scene,
                                                 const RigidPose& pose, int k, double sigma,
                                                 std::mt19937_64& rng) {
  model.validate();
  scene.validate();
  if (model.points.empty() || scene.points.empty()) {
    throw InvalidInputError("find_correspondences needs non-empty clouds");
  }
  if (k < 1) throw InvalidInputError("k must be >= 1");
  if (!(sigma > 0.0)) throw InvalidInputError("sigma must be > 0");

  // Class-separated model indices: edge points only ever match edge points.
  std::vector<Vec3> surf_pts, edge_pts;
  std::vector<std::size_t> surf_idx, edge_idx;
  for (std::size_t j = 0; j < model.points.size(); ++j) {
    if (model.is_edge(j)) {
      edge_pts.push_back(model.points[j]);
      edge_idx.push_back(j);
    } else {
      surf_pts.push_back(model.points[j]);
      surf_idx.push_back(j);
    }
  }
  const detail::KdTree3 surf_tree(std::move(surf_pts));
  const detail::KdTree3 edge_tree(std::move(edge_pts));

  // Seeded uniform subset of scene points (all of them when k is larger).
  const std::size_t n = scene.points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  for (std::size_t i = 0; i < kk; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  const RotationMatrix Rt = quat_to_rotation(pose.q).transpose();
  std::vector<Correspondence> out;
  out.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    const std::size_t si = order[i];
    const bool edge = scene.is_edge(si);
    const detail::KdTree3& tree = edge ? edge_tree : surf_tree;
    if (tree.empty()) {
      throw InvalidInputError("EMPTY_CLASS: no model points in the scene point's class");
    }
    // Nearest model point under the pose == nearest to the back-transformed
    // scene point (rigid maps preserve distances).
    const Vec3 target = Rt * scene.points[si] - pose.t;
    const std::size_t mj = (edge ? edge_idx : surf_idx)[tree.nearest(target)];

    Correspondence c;
    c.model_point = model.points[mj];
    c.scene_point = scene.points[si];
    c.sigma = sigma;
    if (!edge && !model.frames.empty() && !scene.frames.empty() && model.frames[mj] &&
        scene.frames[si]) {
      c.orientation = OrientationMeasurement{model.frames[mj]->q, scene.frames[si]->q,
                                             scene.frames[si]->noise};
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

std::vector<TraceEntry> run_align(const OrientedCloud& model, const OrientedCloud& scene,
                                  const RigidPose& init, const AlignConfig& cfg,
                                  bool use_orientations) {
  cfg.validate();

  // Held-out probe set scoring acceptance, drawn once at the init pose.
  auto probe_rng = substream(cfg.seed, kProbeTag, 0);
  std::vector<Correspondence> probe = find_correspondences(
      model, scene, init, cfg.probe_size, cfg.correspondence_sigma, probe_rng);
  if (!use_orientations) probe = strip_orientations(std::move(probe));

  RigidPose current = init;
  double score = measurement_log_likelihood(probe, current.q, current.t);

  std::vector<TraceEntry> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    auto corr_rng = substream(cfg.seed, kCorrTag, it);
    std::vector<Correspondence> corrs = find_correspondences(
        model, scene, current, cfg.correspondences_per_step, cfg.correspondence_sigma, corr_rng);
    if (!use_orientations) corrs = strip_orientations(std::move(corrs));

    RigidPose proposal;
    if (use_orientations) {
      auto samp_rng = substream(cfg.seed, kSampleTag, it);
      const std::vector<PoseSample> samples = bpa_sample(corrs, cfg, samp_rng);
      std::size_t pick = 0;
      if (cfg.proposal_choice == ProposalChoice::kBestWeight) {
        for (std::size_t i = 1; i < samples.size(); ++i) {
          if (samples[i].log_weight > samples[pick].log_weight) pick = i;
        }
      } else {
        std::vector<double> w(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) w[i] = std::exp(samples[i].log_weight);
        std::discrete_distribution<std::size_t> dd(w.begin(), w.end());
        pick = dd(samp_rng);
      }
      proposal = {samples[pick].q, samples[pick].t};
    } else {
      proposal = horn_align(corrs);
    }

    const double s = measurement_log_likelihood(probe, proposal.q, proposal.t);
    const bool accepted = cfg.accept_mode == AcceptMode::kAlways || s > score;
    if (accepted) {
      current = proposal;
      score = s;
    }
    trace.push_back({current, probe_sse(probe, current), score, accepted});
  }
  return trace;
}

}  // namespace

std::vector<TraceEntry> icp_align(const OrientedCloud& model, const OrientedCloud& scene,
                                  const RigidPose& init, const AlignConfig& cfg) {
  return run_align(model, scene, init, cfg, /*use_orientations=*/false);
}

std::vector<TraceEntry> bpa_iterative_align(const OrientedCloud& model,
                                            const OrientedCloud& scene, const RigidPose& init,
                                            const AlignConfig& cfg) {
  return run_align(model, scene, init, cfg, /*use_orientations=*/true);
}

}  // namespace bpa
