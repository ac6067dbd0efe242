#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bpa/procrustes.hpp"

namespace bpa {

/// One weighted draw from the joint pose posterior.
struct PoseSample {
  UnitQuaternion q;
  Vec3 t = Vec3::Zero();
  double log_weight = 0.0;  // normalized so logsumexp over a batch is 0
};

enum class AcceptMode : std::uint8_t {
  kIfImproved,  // keep the new pose only when the probe score improves
  kAlways,      // keep every proposal
};

enum class ProposalChoice : std::uint8_t {
  kBestWeight,    // take the highest-weight sample (MAP-like)
  kDrawByWeight,  // draw a sample proportionally to its weight
};

struct AlignConfig {
  int iterations = 20;
  int samples_per_step = 10;
  /// Std-dev (m) of the Gaussian translation proposal. Unset means the
  /// default mean(sigma)/sqrt(n) for the correspondence set at hand.
  std::optional<double> translation_proposal_std;
  std::uint64_t seed = 0;
  AcceptMode accept_mode = AcceptMode::kIfImproved;
  ProposalChoice proposal_choice = ProposalChoice::kBestWeight;

  int correspondences_per_step = 10;   // scene points matched per iteration
  double correspondence_sigma = 0.01;  // position noise std assigned to matches (m)
  int probe_size = 32;                 // held-out correspondences scoring acceptance

  void validate() const;  // throws InvalidInputError
};

/// Per-point orientation estimate with its Bingham noise model
/// (identity-centered frame error).
struct PointFrame {
  UnitQuaternion q;
  BinghamDist noise = BinghamDist::uniform();
};

/// A point cloud with optional per-point frames and an optional edge mask
/// (edge points are orientation-less and only ever match edge points).
struct OrientedCloud {
  std::vector<Vec3> points;
  /// Per-point orientation estimates; leave empty when the cloud carries
  /// none. Individual points (e.g. edge points) may have no frame.
  std::vector<std::optional<PointFrame>> frames;
  /// Per-point edge flags; leave empty when every point is a surface point.
  std::vector<bool> edge_mask;

  void validate() const;  // length agreement; throws InvalidInputError
  bool is_edge(std::size_t i) const { return !edge_mask.empty() && edge_mask[i]; }
};

/// Joint measurement log-density at (q, t): Gaussian position residuals
/// plus the Bingham log-densities of any oriented measurements.
double measurement_log_likelihood(std::span<const Correspondence> corrs,
                                  const UnitQuaternion& q, const Vec3& t);

/// Importance sampler over poses: t from a Gaussian at the least-squares
/// translation, q from the fused conditional orientation posterior, and
/// log_weight = log posterior - log proposal, normalized to logsumexp = 0.
std::vector<PoseSample> bpa_sample(std::span<const Correspondence> corrs,
                                   const AlignConfig& cfg, std::mt19937_64& rng);

/// Draw k scene points (uniform, without replacement) and match each to its
/// exact nearest model point under the pose. Edge points match only edge
/// points, surface only surface. Orientation measurements are attached when
/// both clouds carry frames. Throws InvalidInputError when a scene point's
/// class has no model counterpart (EMPTY_CLASS).
std::vector<Correspondence> find_correspondences(const OrientedCloud& model,
                                                 const OrientedCloud& scene,
                                                 const RigidPose& pose, int k, double sigma,
                                                 std::mt19937_64& rng);

/// One accepted state per iteration.
struct TraceEntry {
  RigidPose pose;
  double probe_sse = 0.0;  // sum of squared position residuals on the probe set
  double score = 0.0;      // probe measurement_log_likelihood (the accept objective)
  bool accepted = false;   // whether this iteration's proposal was kept
};

/// Classic ICP: nearest-neighbor correspondences then closed-form alignment,
/// positions only. Shares all correspondence machinery (and, per seed, the
/// same scene-point draws) with bpa_iterative_align.
std::vector<TraceEntry> icp_align(const OrientedCloud& model, const OrientedCloud& scene,
                                  const RigidPose& init, const AlignConfig& cfg);

/// Iterative alignment where each step proposes a pose from bpa_sample on
/// the current correspondences (orientations included).
std::vector<TraceEntry> bpa_iterative_align(const OrientedCloud& model,
                                            const OrientedCloud& scene, const RigidPose& init,
                                            const AlignConfig& cfg);

}  // namespace bpa
