#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bpa {

using Vec3 = Eigen::Vector3d;
using RotationMatrix = Eigen::Matrix3d;

/// Unit quaternion, scalar-first (w, x, y, z). q and -q denote the same
/// rotation; every distance/equality helper below respects that.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  /// Normalizes the given components. Throws InvalidInputError on a
  /// (near-)zero vector or when the norm is too far from 1 to be a
  /// rounding artifact (tol = 1e-3).
  static UnitQuaternion from_components(double w, double x, double y, double z);

  /// Rotation by `angle` (radians) about `axis` (need not be unit).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

  static UnitQuaternion identity() { return {}; }

  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
  static UnitQuaternion from_coeffs_normalized(const Eigen::Vector4d& c);

  UnitQuaternion conjugate() const { return UnitQuaternion{w, -x, -y, -z}.canonical(); }
  UnitQuaternion inverse() const { return conjugate(); }

  /// Canonical antipodal representative: w >= 0, ties resolved by the
  /// first nonzero component being positive.
  UnitQuaternion canonical() const;

  double dot(const UnitQuaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
};

/// Hamilton product q1 * q2, renormalized and canonicalized.
/// rotate_vector(quat_multiply(a, b), v) == rotate_vector(a, rotate_vector(b, v)).
UnitQuaternion quat_multiply(const UnitQuaternion& q1, const UnitQuaternion& q2);

/// The 3x3 rotation matrix of q (R(q) == R(-q)).
RotationMatrix quat_to_rotation(const UnitQuaternion& q);

/// Inverse of quat_to_rotation; validates orthonormality and det = +1
/// (tol 1e-10 per axis, throws InvalidInputError otherwise). Canonical output.
UnitQuaternion rotation_to_quat(const RotationMatrix& R);

/// Apply the rotation of q to v.
Vec3 rotate_vector(const UnitQuaternion& q, const Vec3& v);

/// Minimal-angle rotation taking direction u to direction v. For
/// antiparallel inputs a fixed 180-degree rotation about a deterministic
/// axis orthogonal to u is returned. Throws InvalidInputError on zero input.
UnitQuaternion quat_between_axes(const Vec3& u, const Vec3& v);

/// Rotation-angle distance 2*acos(|q1 . q2|) in [0, pi]; invariant under
/// antipodal flips of either argument.
double angular_distance(const UnitQuaternion& q1, const UnitQuaternion& q2);

}  // namespace bpa
