#include "bpa/procrustes.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "bpa/errors.hpp"

namespace bpa {

namespace {

void check_sigma(const Correspondence& c) {
  if (!(c.sigma > 0.0)) {
    throw InvalidInputError("correspondence sigma must be positive");
  }
}

struct WeightedHorn {
  UnitQuaternion q;
  Vec3 t;
};

// Least-squares rotation via the maximal eigenvector of the 4x4
// cross-covariance quaternion matrix, then the centroid-aligning
// translation for it. Weights w_i = 1/sigma_i^2 (pass unit_weights to get
// the classical unweighted problem).
WeightedHorn weighted_horn(std::span<const Correspondence> corrs, bool unit_weights) {
  double W = 0.0;
  Vec3 xc = Vec3::Zero(), yc = Vec3::Zero();
  for (const Correspondence& c : corrs) {
    check_sigma(c);
    const double w = unit_weights ? 1.0 : 1.0 / (c.sigma * c.sigma);
    W += w;
    xc += w * c.model_point;
    yc += w * c.scene_point;
  }
  xc /= W;
  yc /= W;

  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (const Correspondence& c : corrs) {
    const double w = unit_weights ? 1.0 : 1.0 / (c.sigma * c.sigma);
    S += w * (c.model_point - xc) * (c.scene_point - yc).transpose();
  }

  Eigen::Matrix4d N;
  N << S(0, 0) + S(1, 1) + S(2, 2), S(1, 2) - S(2, 1), S(2, 0) - S(0, 2), S(0, 1) - S(1, 0),
      S(1, 2) - S(2, 1), S(0, 0) - S(1, 1) - S(2, 2), S(0, 1) + S(1, 0), S(2, 0) + S(0, 2),
      S(2, 0) - S(0, 2), S(0, 1) + S(1, 0), -S(0, 0) + S(1, 1) - S(2, 2), S(1, 2) + S(2, 1),
      S(0, 1) - S(1, 0), S(2, 0) + S(0, 2), S(1, 2) + S(2, 1), -S(0, 0) - S(1, 1) + S(2, 2);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const UnitQuaternion q =
      UnitQuaternion::from_coeffs_normalized(es.eigenvectors().col(3)).canonical();
  const Vec3 t = quat_to_rotation(q).transpose() * yc - xc;
  return {q, t};
}

Vec3 translation_for(std::span<const Correspondence> corrs, const UnitQuaternion& q) {
  double W = 0.0;
  Vec3 xc = Vec3::Zero(), yc = Vec3::Zero();
  for (const Correspondence& c : corrs) {
    const double w = 1.0 / (c.sigma * c.sigma);
    W += w;
    xc += w * c.model_point;
    yc += w * c.scene_point;
  }
  return quat_to_rotation(q).transpose() * (yc / W) - xc / W;
}

// Claim direction columns s' * W * s for the minimal rotations s: x+t -> e1
// and s': e1 -> y. Columns of W as quaternions are j, k, i.
BinghamDist::Dirs claim_dirs(const Vec3& xt, const Vec3& y) {
  const UnitQuaternion s = quat_between_axes(xt, Vec3::UnitX());
  const UnitQuaternion sp = quat_between_axes(Vec3::UnitX(), y);
  const UnitQuaternion w[3] = {UnitQuaternion{0, 0, 1, 0}, UnitQuaternion{0, 0, 0, 1},
                               UnitQuaternion{0, 1, 0, 0}};
  BinghamDist::Dirs dirs;
  for (int m = 0; m < 3; ++m) {
    dirs.col(m) = quat_multiply(sp, quat_multiply(w[m], s)).coeffs();
  }
  return dirs;
}

}  // namespace

RigidPose horn_align(std::span<const Correspondence> corrs) {
  if (corrs.size() < 3) {
    throw DegenerateError("DEGENERATE: horn_align needs at least 3 correspondences");
  }
  Vec3 xc = Vec3::Zero();
  for (const Correspondence& c : corrs) xc += c.model_point;
  xc /= static_cast<double>(corrs.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const Correspondence& c : corrs) {
    const Vec3 d = c.model_point - xc;
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  if (es.eigenvalues()(1) <= 1e-10 * es.eigenvalues()(2)) {
    throw DegenerateError("DEGENERATE: model points (nearly) collinear or coincident");
  }
  const WeightedHorn h = weighted_horn(corrs, /*unit_weights=*/true);
  return {h.q, h.t};
}

BinghamDist correspondence_bingham(const Correspondence& c, const Vec3& t) {
  check_sigma(c);
  const Vec3 xt = c.model_point + t;
  const double a = xt.norm(), b = c.scene_point.norm();
  if (a < 1e-15 || b < 1e-15) {
    return BinghamDist::uniform();
  }
  const double k = 2.0 * a * b / (c.sigma * c.sigma);
  return BinghamDist::make(Eigen::Vector3d(-k, -k, 0.0), claim_dirs(xt, c.scene_point));
}

namespace detail {

Eigen::Matrix4d correspondence_exponent(const Correspondence& c, const Vec3& t) {
  check_sigma(c);
  const Vec3 xt = c.model_point + t;
  const double a = xt.norm(), b = c.scene_point.norm();
  if (a < 1e-15 || b < 1e-15) {
    return Eigen::Matrix4d::Zero();
  }
  const double k = 2.0 * a * b / (c.sigma * c.sigma);
  const BinghamDist::Dirs dirs = claim_dirs(xt, c.scene_point);
  return -k * (dirs.col(0) * dirs.col(0).transpose() + dirs.col(1) * dirs.col(1).transpose());
}

Eigen::Matrix<double, 4, 3> measurement_dirs(const OrientationMeasurement& m) {
  const UnitQuaternion x_inv = m.model_frame.inverse();
  Eigen::Matrix<double, 4, 3> out;
  for (int j = 0; j < 3; ++j) {
    const auto v = UnitQuaternion::from_coeffs_normalized(m.noise.dirs().col(j));
    out.col(j) = quat_multiply(m.scene_frame, quat_multiply(v, x_inv)).coeffs();
  }
  return out;
}

double measurement_log_pdf(const OrientationMeasurement& m, const UnitQuaternion& q) {
  const Eigen::Matrix<double, 4, 3> dirs = measurement_dirs(m);
  const Eigen::Vector4d c = q.coeffs();
  double e = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double d = dirs.col(j).dot(c);
    e += m.noise.lambdas()(j) * d * d;
  }
  return e - m.noise.log_normalizer();
}

}  // namespace detail

Vec3 least_squares_translation(std::span<const Correspondence> corrs) {
  if (corrs.empty()) {
    throw InvalidInputError("least_squares_translation needs at least one correspondence");
  }
  return weighted_horn(corrs, /*unit_weights=*/false).t;
}

PosePosterior posterior_orientation(std::span<const Correspondence> corrs, const Vec3& t,
                                    const BinghamDist* prior) {
  if (corrs.empty()) {
    throw InvalidInputError("posterior_orientation needs at least one correspondence");
  }
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  for (const Correspondence& c : corrs) {
    C += detail::correspondence_exponent(c, t);
  }
  if (prior != nullptr) {
    C += prior->dirs() * prior->lambdas().asDiagonal() * prior->dirs().transpose();
  }
  BinghamProduct prod = bingham_from_exponent(C);
  return {least_squares_translation(corrs), std::move(prod.dist), prod.mode_degenerate};
}

PosePosterior fuse_orientation_measurements(std::span<const Correspondence> corrs,
                                            const PosePosterior& base) {
  Eigen::Matrix4d C = base.q_given_t.dirs() * base.q_given_t.lambdas().asDiagonal() *
                      base.q_given_t.dirs().transpose();
  bool any = false;
  for (const Correspondence& c : corrs) {
    if (!c.orientation) continue;
    any = true;
    const Eigen::Matrix<double, 4, 3> dirs = detail::measurement_dirs(*c.orientation);
    C += dirs * c.orientation->noise.lambdas().asDiagonal() * dirs.transpose();
  }
  if (!any) {
    return base;
  }
  BinghamProduct prod = bingham_from_exponent(C);
  return {base.t_star, std::move(prod.dist), prod.mode_degenerate};
}

RigidPose map_pose(std::span<const Correspondence> corrs) {
  if (corrs.empty()) {
    throw InvalidInputError("map_pose needs at least one correspondence");
  }
  UnitQuaternion q = weighted_horn(corrs, /*unit_weights=*/false).q;
  PosePosterior post;
  for (int it = 0; it < 20; ++it) {
    const Vec3 t = translation_for(corrs, q);
    post = fuse_orientation_measurements(corrs, posterior_orientation(corrs, t));
    const UnitQuaternion q_new = bingham_mode(post.q_given_t);
    const bool done = angular_distance(q, q_new) < 1e-13;
    q = q_new;
    if (done) break;
  }
  if (!post.q_given_t.mode_is_unique()) {
    throw DegenerateError("DEGENERATE: MAP orientation is not unique");
  }
  return {q, translation_for(corrs, q)};
}

}  // namespace bpa
