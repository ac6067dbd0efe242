#include "bpa/features.hpp"

#include <algorithm>
#include <cmath>

#include "bpa/errors.hpp"

namespace bpa {

void SurfaceFrame::validate() const {
  if (std::abs(normal.norm() - 1.0) > 1e-10 || std::abs(principal_dir.norm() - 1.0) > 1e-10 ||
      std::abs(normal.dot(principal_dir)) > 1e-10) {
    throw InvalidInputError("INVALID_FRAME: normal/principal_dir not an orthonormal pair");
  }
  if (!(c1 >= c2 && c2 >= 0.0)) {
    throw InvalidInputError("INVALID_FRAME: curvature eigenvalues need c1 >= c2 >= 0");
  }
}

UnitQuaternion orientation_from_frame(const SurfaceFrame& f) {
  f.validate();
  RotationMatrix R;
  R.col(0) = f.normal;
  R.col(1) = f.principal_dir;
  R.col(2) = f.normal.cross(f.principal_dir);
  return rotation_to_quat(R);
}

UnitQuaternion flip_principal_curvature(const UnitQuaternion& q) {
  return UnitQuaternion::from_components(-q.x, q.w, q.z, -q.y).canonical();
}

namespace {

double lambda3_heuristic(const SurfaceFrame& f, double kappa) {
  if (f.c2 <= 0.0) {
    // ZERO_CURVATURE: perfectly flat patch when c1 is zero too, otherwise
    // the curvature direction is fully determined.
    return f.c1 <= 0.0 ? 0.0 : kappa;
  }
  return std::max(10.0 * (1.0 - f.c1 / f.c2), kappa);
}

}  // namespace

BinghamDist feature_orientation_bingham(const SurfaceFrame& f, double kappa) {
  if (kappa > 0.0) {
    throw InvalidInputError("kappa must be non-positive");
  }
  const UnitQuaternion mode = orientation_from_frame(f);
  const UnitQuaternion v3 = flip_principal_curvature(mode);
  // v1, v2 complete the basis: the mode left-translated by j and k.
  const UnitQuaternion v1 = quat_multiply(mode, UnitQuaternion{0, 0, 1, 0});
  const UnitQuaternion v2 = quat_multiply(mode, UnitQuaternion{0, 0, 0, 1});
  BinghamDist::Dirs dirs;
  dirs.col(0) = v1.coeffs();
  dirs.col(1) = v2.coeffs();
  dirs.col(2) = v3.coeffs();
  return BinghamDist::make(Eigen::Vector3d(kappa, kappa, lambda3_heuristic(f, kappa)), dirs);
}

BinghamDist feature_noise_bingham(const SurfaceFrame& f, double kappa) {
  if (kappa > 0.0) {
    throw InvalidInputError("kappa must be non-positive");
  }
  f.validate();
  BinghamDist::Dirs dirs = BinghamDist::Dirs::Zero();
  dirs(2, 0) = 1.0;  // j
  dirs(3, 1) = 1.0;  // k
  dirs(1, 2) = 1.0;  // i = flip of the identity mode
  return BinghamDist::make(Eigen::Vector3d(kappa, kappa, lambda3_heuristic(f, kappa)), dirs);
}

}  // namespace bpa
