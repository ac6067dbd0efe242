#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bpa/align.hpp"

namespace bpa {

enum class Shape : std::uint8_t { kBox, kCylinder, kSphereCap, kComposite };

Shape shape_from_string(const std::string& s);  // throws InvalidInputError
std::string to_string(Shape s);

/// Configuration of the synthetic BPA-vs-ICP perturbation experiment.
/// Trial count and iteration count default to the reference protocol
/// (50 placements, 20 alignment steps); every other default is an artifact
/// choice, not a published value.
struct TrialConfig {
  int n_trials = 50;
  int n_points = 240;
  Shape shape = Shape::kComposite;
  double position_noise_std = 0.01;  // m; also the correspondence sigma
  double perturb_trans_std = 0.05;   // m
  double perturb_rot_std = 0.30;     // rad
  double frame_noise_kappa = -100.0;
  int iterations = 20;
  int samples_per_step = 10;
  int correspondences_per_step = 10;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidInputError
};

/// Points on the shape surface with analytic frames (normal, curvature
/// direction, curvature eigenvalues) and edge-masked crease points.
OrientedCloud generate_cloud(const TrialConfig& cfg, std::mt19937_64& rng);

/// Gaussian-perturbed pose: t offset by an isotropic Gaussian, q composed
/// with a rotation of Gaussian angle about a uniform random axis.
RigidPose perturb_pose(const RigidPose& truth, const TrialConfig& cfg, std::mt19937_64& rng);

/// Per-iteration running-minimum errors of one trial (monotone arrays).
struct TrialRecord {
  int trial_index = 0;
  bool ok = false;  // false when the trial hit a degenerate alignment
  std::vector<double> bpa_position;     // running-min |t - t_gt| per iteration
  std::vector<double> bpa_orientation;  // running-min angular distance per iteration
  std::vector<double> icp_position;
  std::vector<double> icp_orientation;
};

/// Mean running-minimum error curves over the non-degenerate trials.
struct ErrorCurves {
  std::vector<double> bpa_position;
  std::vector<double> bpa_orientation;
  std::vector<double> icp_position;
  std::vector<double> icp_orientation;
  int excluded_trials = 0;
};

struct BenchmarkResult {
  ErrorCurves curves;
  std::vector<TrialRecord> trials;
};

/// Runs the perturbation experiment: per trial, generate a cloud, place it
/// at a random ground-truth pose with measurement noise, perturb the truth
/// into an initial guess, and run both aligners from that guess with a
/// shared per-trial seed (accept_mode = always). Trials run concurrently;
/// per-trial generators are split deterministically from the root seed, so
/// records are bitwise reproducible and independent of n_trials.
BenchmarkResult run_benchmark(const TrialConfig& cfg);

/// ErrorCurves as CSV: header then one row per iteration
/// (iter, bpa_pos, icp_pos, bpa_rot, icp_rot). A leading comment line
/// carries the excluded-trial count.
std::string curves_to_csv(const ErrorCurves& curves);

}  // namespace bpa
