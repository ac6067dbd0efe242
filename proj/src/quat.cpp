#include "bpa/quat.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "bpa/errors.hpp"

namespace bpa {

namespace {

UnitQuaternion normalized(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) {
    throw InvalidInputError("ZERO_VECTOR: quaternion components have (near-)zero norm");
  }
  return UnitQuaternion{w / n, x / n, y / n, z / n};
}

}  // namespace

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(std::abs(n - 1.0) < 1e-3)) {
    throw InvalidInputError("quaternion norm " + std::to_string(n) + " too far from 1");
  }
  return UnitQuaternion{w / n, x / n, y / n, z / n};
}

UnitQuaternion UnitQuaternion::from_coeffs_normalized(const Eigen::Vector4d& c) {
  return normalized(c(0), c(1), c(2), c(3));
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-15) {
    throw InvalidInputError("ZERO_VECTOR: rotation axis has zero norm");
  }
  const double s = std::sin(0.5 * angle) / n;
  return normalized(std::cos(0.5 * angle), s * axis.x(), s * axis.y(), s * axis.z());
}

UnitQuaternion UnitQuaternion::canonical() const {
  const double c[4] = {w, x, y, z};
  for (double v : c) {
    if (v > 0.0) return *this;
    if (v < 0.0) return UnitQuaternion{-w, -x, -y, -z};
  }
  return *this;
}

UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  return normalized(a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                    a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                    a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                    a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w)
      .canonical();
}

RotationMatrix quat_to_rotation(const UnitQuaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  RotationMatrix R;
  R << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return R;
}

UnitQuaternion rotation_to_quat(const RotationMatrix& R) {
  if ((R.transpose() * R - RotationMatrix::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(R.determinant() - 1.0) > 1e-10) {
    throw InvalidInputError("matrix is not a rotation (orthonormality or det violated)");
  }
  // Shepperd's method: branch on the largest of trace/diagonal pivots.
  const double t = R.trace();
  double w, x, y, z;
  if (t > R(0, 0) && t > R(1, 1) && t > R(2, 2)) {
    const double r = std::sqrt(1.0 + t);
    w = 0.5 * r;
    x = 0.5 * (R(2, 1) - R(1, 2)) / r;
    y = 0.5 * (R(0, 2) - R(2, 0)) / r;
    z = 0.5 * (R(1, 0) - R(0, 1)) / r;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    const double r = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
    x = 0.5 * r;
    w = 0.5 * (R(2, 1) - R(1, 2)) / r;
    y = 0.5 * (R(0, 1) + R(1, 0)) / r;
    z = 0.5 * (R(0, 2) + R(2, 0)) / r;
  } else if (R(1, 1) > R(2, 2)) {
    const double r = std::sqrt(1.0 - R(0, 0) + R(1, 1) - R(2, 2));
    y = 0.5 * r;
    w = 0.5 * (R(0, 2) - R(2, 0)) / r;
    x = 0.5 * (R(0, 1) + R(1, 0)) / r;
    z = 0.5 * (R(1, 2) + R(2, 1)) / r;
  } else {
    const double r = std::sqrt(1.0 - R(0, 0) - R(1, 1) + R(2, 2));
    z = 0.5 * r;
    w = 0.5 * (R(1, 0) - R(0, 1)) / r;
    x = 0.5 * (R(0, 2) + R(2, 0)) / r;
    y = 0.5 * (R(1, 2) + R(2, 1)) / r;
  }
  return normalized(w, x, y, z).canonical();
}

Vec3 rotate_vector(const UnitQuaternion& q, const Vec3& v) {
  // v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z)
  const Vec3 u(q.x, q.y, q.z);
  const Vec3 uv = u.cross(v);
  return v + 2.0 * (q.w * uv + u.cross(uv));
}

UnitQuaternion quat_between_axes(const Vec3& u, const Vec3& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu < 1e-15 || nv < 1e-15) {
    throw InvalidInputError("ZERO_VECTOR: quat_between_axes requires nonzero directions");
  }
  const Vec3 a = u / nu, b = v / nv;
  const double c = a.dot(b);
  if (c < -1.0 + 1e-12) {
    // Antiparallel: 180 degrees about a fixed orthogonal axis.
    Vec3 ref = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 axis = a.cross(ref).normalized();
    return UnitQuaternion::from_axis_angle(axis, M_PI).canonical();
  }
  const Vec3 axis = a.cross(b);
  return normalized(1.0 + c, axis.x(), axis.y(), axis.z()).canonical();
}

double angular_distance(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const double d = std::min(1.0, std::abs(q1.dot(q2)));
  return 2.0 * std::acos(d);
}

}  // namespace bpa
