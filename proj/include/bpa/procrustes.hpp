#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bpa/bingham.hpp"
#include "bpa/quat.hpp"

namespace bpa {

/// Rigid pose: a model point x maps to R(q) * (x + t).
struct RigidPose {
  UnitQuaternion q;
  Vec3 t = Vec3::Zero();
};

/// An oriented-frame measurement attached to a correspondence. `noise` is a
/// Bingham over the frame error, centered at the identity quaternion
/// (its mode), expressed in the model feature's frame.
struct OrientationMeasurement {
  UnitQuaternion model_frame;  // q_x
  UnitQuaternion scene_frame;  // q_y
  BinghamDist noise = BinghamDist::uniform();
};

/// A paired model/scene point with isotropic position noise and an
/// optional oriented-frame measurement.
struct Correspondence {
  Vec3 model_point = Vec3::Zero();
  Vec3 scene_point = Vec3::Zero();
  double sigma = 1.0;  // > 0, meters
  std::optional<OrientationMeasurement> orientation;
};

/// Conditional orientation posterior at a supplied translation, plus the
/// least-squares translation for the correspondence set.
struct PosePosterior {
  Vec3 t_star = Vec3::Zero();
  BinghamDist q_given_t = BinghamDist::uniform();
  bool mode_degenerate = false;
};

/// Closed-form least-squares alignment: (q, t) minimizing
/// sum_i |R(q)(x_i + t) - y_i|^2 (sigmas ignored). The translation maps
/// the model centroid onto the scene centroid. Throws DegenerateError for
/// fewer than 3 points or collinear/coincident model configurations.
RigidPose horn_align(std::span<const Correspondence> corrs);

/// The Bingham over q induced by one correspondence at translation t:
/// Lambda = (-2ab/sigma^2, -2ab/sigma^2, 0) with a = |x+t|, b = |y|, and
/// direction columns s' * W * s built from the minimal rotations taking
/// x+t to the first axis and the first axis to y. Density is proportional
/// to exp(-|R(q)(x+t) - y|^2 / (2 sigma^2)) pointwise in q. Returns the
/// uniform distribution when a = 0 or b = 0.
BinghamDist correspondence_bingham(const Correspondence& c, const Vec3& t);

/// Product of the per-correspondence Binghams at the supplied t (times an
/// optional prior), plus the sigma-weighted least-squares translation.
/// Requires at least one correspondence. A non-unique posterior mode is
/// reported through the mode_degenerate flag, never resolved silently.
PosePosterior posterior_orientation(std::span<const Correspondence> corrs, const Vec3& t,
                                    const BinghamDist* prior = nullptr);

/// Multiplies the orientation-measurement Binghams of every oriented
/// correspondence into `base`. Each measurement contributes a Bingham over
/// q with mode q_y * q_x^-1 and directions q_y * v_j * q_x^-1 (noise
/// columns transported so the density is over the global rotation).
PosePosterior fuse_orientation_measurements(std::span<const Correspondence> corrs,
                                            const PosePosterior& base);

/// Maximum a posteriori pose: the fused posterior's mode together with the
/// least-squares translation consistent with it (short coordinate ascent;
/// for orientation-less input this is exactly the horn_align pair).
/// Throws DegenerateError when the posterior mode is not unique.
RigidPose map_pose(std::span<const Correspondence> corrs);

/// Sigma-weighted least-squares translation (centroid-aligning at the
/// weighted-Horn rotation); equals horn_align's translation when all
/// sigmas agree.
Vec3 least_squares_translation(std::span<const Correspondence> corrs);

namespace detail {

/// Exponent matrix V diag(Lambda) V^T of correspondence_bingham(c, t)
/// without computing the normalizer.
Eigen::Matrix4d correspondence_exponent(const Correspondence& c, const Vec3& t);

/// Direction columns of the orientation-measurement Bingham over the
/// global rotation q (noise columns transported by q_y on the left and
/// q_x^-1 on the right).
Eigen::Matrix<double, 4, 3> measurement_dirs(const OrientationMeasurement& m);

/// Log-density of the orientation measurement at q (shares the noise
/// Bingham's normalizer).
double measurement_log_pdf(const OrientationMeasurement& m, const UnitQuaternion& q);

}  // namespace detail

}  // namespace bpa
