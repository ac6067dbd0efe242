#pragma once

// Independent numerical oracles for the test suites. Everything here is
// deliberately brute force and shares no code path with the library
// implementations it checks.

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "bpa/quat.hpp"

namespace bpa::testing {

/// Adaptive-Simpson integral of f over [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 22);

/// Integral of f(q) over the unit hypersphere S^3 by nested adaptive
/// Simpson in hyperspherical coordinates. base_panels seeds each 1-D
/// subdivision; pick it large enough that the narrowest density peak spans
/// a panel (concentration -900 needs about 50).
double integrate_s3(const std::function<double(const Eigen::Vector4d&)>& f,
                    double rel_tol = 1e-7, int base_panels = 24);

/// Quadrature oracle for the Bingham normalizer (V-independent).
double normalizer_oracle(const Eigen::Vector3d& lambdas, double rel_tol = 1e-7);

/// Quadrature oracle for E[(v_i . q)^2] under an axis-aligned Bingham with
/// the given concentrations (component i of the result corresponds to
/// lambda_i; component 3 to the mode).
Eigen::Vector4d moment_oracle(const Eigen::Vector3d& lambdas, double rel_tol = 1e-7);

/// Uniform draw on S^3.
UnitQuaternion random_quat(std::mt19937_64& rng);

/// Uniform random rotation matrix (through a uniform quaternion).
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

/// Rejection sampler from the uniform envelope: exact draws from the
/// Bingham density exp(sum lambda_i (v_i . q)^2). Practical for
/// concentrations down to roughly -60.
std::vector<UnitQuaternion> rejection_sample_bingham(
    const Eigen::Vector3d& lambdas, const Eigen::Matrix<double, 4, 3>& dirs,
    std::mt19937_64& rng, std::size_t n);

/// Exhaustive nearest-neighbor scan with lowest-index tie breaking.
std::size_t brute_force_nearest(const std::vector<Vec3>& pts, const Vec3& query);

}  // namespace bpa::testing
