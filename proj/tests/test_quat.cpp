#include <doctest.h>

#include <cmath>
#include <random>

#include "bpa/errors.hpp"
#include "bpa/quat.hpp"
#include "oracles.hpp"

using namespace bpa;
namespace bt = bpa::testing;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// Component-wise antipodal distance; resolves far below the acos floor of
// angular_distance.
double qdist(const UnitQuaternion& a, const UnitQuaternion& b) {
  return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  return qdist(a, b) < tol;
}
}  // namespace

TEST_SUITE_BEGIN("quat");

TEST_CASE("multiply: identity and inverse") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const UnitQuaternion q = bt::random_quat(rng);
    CHECK(same_rotation(quat_multiply(UnitQuaternion::identity(), q), q, 1e-13));
    CHECK(same_rotation(quat_multiply(q, q.inverse()), UnitQuaternion::identity(), 1e-13));
  }
}

TEST_CASE("multiply: two 90-degree z rotations make a half turn") {
  const UnitQuaternion qz90{kInvSqrt2, 0, 0, kInvSqrt2};
  const UnitQuaternion prod = quat_multiply(qz90, qz90);
  CHECK(prod.w == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(prod.z) == doctest::Approx(1.0).epsilon(1e-12));
  // and the rotation matrices compose to the same thing
  const RotationMatrix composed = quat_to_rotation(qz90) * quat_to_rotation(qz90);
  CHECK((quat_to_rotation(prod) - composed).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multiply: associativity and composition order") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion a = bt::random_quat(rng), b = bt::random_quat(rng),
                         c = bt::random_quat(rng);
    CHECK(same_rotation(quat_multiply(quat_multiply(a, b), c),
                        quat_multiply(a, quat_multiply(b, c)), 1e-12));
    const Vec3 v = Vec3::Random();
    const Vec3 lhs = rotate_vector(quat_multiply(a, b), v);
    const Vec3 rhs = rotate_vector(a, rotate_vector(b, v));
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("quat_to_rotation fixtures") {
  CHECK((quat_to_rotation(UnitQuaternion::identity()) - RotationMatrix::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  RotationMatrix flip = RotationMatrix::Identity();
  flip(0, 0) = flip(1, 1) = -1.0;
  CHECK((quat_to_rotation(UnitQuaternion{0, 0, 0, 1}) - flip).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("quat_to_rotation: antipodal symmetry") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion q = bt::random_quat(rng);
    const UnitQuaternion nq{-q.w, -q.x, -q.y, -q.z};
    CHECK((quat_to_rotation(q) - quat_to_rotation(nq)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("rotation_to_quat fixtures and round trip") {
  const UnitQuaternion id = rotation_to_quat(RotationMatrix::Identity());
  CHECK(id.w == doctest::Approx(1.0));

  RotationMatrix flip = RotationMatrix::Identity();
  flip(0, 0) = flip(1, 1) = -1.0;
  const UnitQuaternion qf = rotation_to_quat(flip);
  CHECK(qf.z == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix R = bt::random_rotation(rng);
    const RotationMatrix back = quat_to_rotation(rotation_to_quat(R));
    CHECK((back - R).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("rotation_to_quat rejects non-rotations") {
  RotationMatrix bad = RotationMatrix::Identity();
  bad(0, 1) = 0.1;
  CHECK_THROWS_AS(rotation_to_quat(bad), InvalidInputError);
  RotationMatrix reflect = RotationMatrix::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS_AS(rotation_to_quat(reflect), InvalidInputError);
}

TEST_CASE("rotate_vector fixtures") {
  CHECK((rotate_vector(UnitQuaternion::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() <
        1e-15);
  const UnitQuaternion qz90{kInvSqrt2, 0, 0, kInvSqrt2};
  CHECK((rotate_vector(qz90, Vec3::UnitX()) - Vec3::UnitY()).norm() < 1e-14);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion q = bt::random_quat(rng);
    const Vec3 v = Vec3::Random();
    CHECK(rotate_vector(q, v).norm() == doctest::Approx(v.norm()).epsilon(1e-12));
    CHECK((rotate_vector(q, v) - quat_to_rotation(q) * v).norm() < 1e-12);
  }
}

TEST_CASE("quat_between_axes") {
  CHECK(same_rotation(quat_between_axes(Vec3::UnitX(), Vec3::UnitX()),
                      UnitQuaternion::identity(), 1e-14));

  const UnitQuaternion q = quat_between_axes(Vec3::UnitX(), Vec3::UnitY());
  CHECK(same_rotation(q, UnitQuaternion{kInvSqrt2, 0, 0, kInvSqrt2}, 1e-12));

  // antiparallel: some half turn taking u to -u
  const UnitQuaternion h = quat_between_axes(Vec3::UnitX(), -Vec3::UnitX());
  CHECK((rotate_vector(h, Vec3::UnitX()) + Vec3::UnitX()).norm() < 1e-10);

  std::mt19937_64 rng(6);
  for (int i = 0; i < 300; ++i) {
    Vec3 u = Vec3::Random(), v = Vec3::Random();
    if (u.norm() < 1e-6 || v.norm() < 1e-6) continue;
    const UnitQuaternion r = quat_between_axes(u, v);
    CHECK((rotate_vector(r, u.normalized()) - v.normalized()).norm() < 1e-10);
  }

  CHECK_THROWS_AS(quat_between_axes(Vec3::Zero(), Vec3::UnitX()), InvalidInputError);
}

TEST_CASE("angular_distance") {
  std::mt19937_64 rng(7);
  const UnitQuaternion q = bt::random_quat(rng);
  CHECK(angular_distance(q, q) == doctest::Approx(0.0));
  CHECK(angular_distance(q, UnitQuaternion{-q.w, -q.x, -q.y, -q.z}) ==
        doctest::Approx(0.0));
  CHECK(angular_distance(UnitQuaternion::identity(),
                         UnitQuaternion{std::cos(M_PI / 4), 0, 0, std::sin(M_PI / 4)}) ==
        doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("angular_distance is a metric") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    const UnitQuaternion a = bt::random_quat(rng), b = bt::random_quat(rng),
                         c = bt::random_quat(rng);
    CHECK(angular_distance(a, b) == doctest::Approx(angular_distance(b, a)).epsilon(1e-12));
    CHECK(angular_distance(a, c) <= angular_distance(a, b) + angular_distance(b, c) + 1e-9);
    CHECK(angular_distance(a, b) >= 0.0);
    CHECK(angular_distance(a, b) <= M_PI + 1e-12);
  }
}

TEST_CASE("canonical representative") {
  CHECK(UnitQuaternion{-1, 0, 0, 0}.canonical().w == 1.0);
  const UnitQuaternion tie{0, -kInvSqrt2, kInvSqrt2, 0};
  CHECK(tie.canonical().x == doctest::Approx(kInvSqrt2));
}

TEST_SUITE_END();
