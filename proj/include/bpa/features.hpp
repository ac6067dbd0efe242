#pragma once

#include "bpa/bingham.hpp"
#include "bpa/quat.hpp"

namespace bpa {

/// Local surface frame at a feature: unit normal, unit principal-curvature
/// direction orthogonal to it, and the two curvature eigenvalues c1 >= c2 >= 0
/// (from the eigen-decomposition of the neighborhood normal covariance).
struct SurfaceFrame {
  Vec3 normal = Vec3::UnitX();
  Vec3 principal_dir = Vec3::UnitY();
  double c1 = 0.0;
  double c2 = 0.0;

  void validate() const;  // unit/orthogonality within 1e-10, c1 >= c2 >= 0
};

/// Quaternion of the rotation matrix [n  p  n x p].
/// Throws InvalidInputError (INVALID_FRAME) when the frame is not orthonormal.
UnitQuaternion orientation_from_frame(const SurfaceFrame& f);

/// The quaternion of [n  -p  -p'] given the quaternion of [n  p  p']:
/// (q1, q2, q3, q4) -> (-q2, q1, q4, -q3). Involutive up to antipodal sign.
UnitQuaternion flip_principal_curvature(const UnitQuaternion& q);

/// Orientation-uncertainty Bingham for a surface feature: mode is the frame
/// quaternion, v3 its curvature flip, lambda_1 = lambda_2 = kappa and
/// lambda_3 = max{10 (1 - c1/c2), kappa}. A flat patch (c1 = c2) leaves the
/// curvature direction fully uniform (lambda_3 = 0); c2 = 0 with c1 > 0
/// pins it at kappa.
BinghamDist feature_orientation_bingham(const SurfaceFrame& f, double kappa);

/// Same concentrations but centered at the identity (directions j, k, i):
/// the frame-error noise model used by orientation measurements.
BinghamDist feature_noise_bingham(const SurfaceFrame& f, double kappa);

}  // namespace bpa
