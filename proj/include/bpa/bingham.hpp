#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bpa/quat.hpp"

namespace bpa {

/// Bingham distribution on the unit quaternion hypersphere:
///   p(q) = (1/F) exp( sum_i lambda_i (v_i . q)^2 ),   lambda_i <= 0.
///
/// Concentrations are kept sorted ascending (most negative first) with the
/// direction columns permuted consistently. The mode is the unit 4-vector
/// orthogonal to all three columns (unique up to sign; canonicalized).
class BinghamDist {
public:
  using Dirs = Eigen::Matrix<double, 4, 3>;

  /// Validates invariants (lambdas <= 0, orthonormal columns), sorts, and
  /// computes the log normalizer. Throws InvalidInputError on violation.
  static BinghamDist make(const Eigen::Vector3d& lambdas, const Dirs& dirs);

  /// Lambda = 0 with a fixed direction basis (e2, e3, e4); mode = identity.
  static BinghamDist uniform();

  const Eigen::Vector3d& lambdas() const { return lambdas_; }
  const Dirs& dirs() const { return dirs_; }
  double log_normalizer() const { return log_normalizer_; }

  /// Canonicalized representative of the +/- mode pair.
  const Eigen::Vector4d& mode_coeffs() const { return mode_; }

  /// False when the density maximum is attained on a great circle rather
  /// than a point pair (lambda_3 within tol of 0).
  bool mode_is_unique(double tol = 1e-9) const { return lambdas_(2) < -tol; }

private:
  BinghamDist() = default;

  Eigen::Vector3d lambdas_ = Eigen::Vector3d::Zero();
  Dirs dirs_ = Dirs::Zero();
  double log_normalizer_ = 0.0;
  Eigen::Vector4d mode_ = Eigen::Vector4d::UnitW();  // placeholder, set in make()
};

double bingham_pdf(const BinghamDist& B, const UnitQuaternion& q);
double bingham_log_pdf(const BinghamDist& B, const UnitQuaternion& q);

/// Normalizer F = integral of exp(sum lambda_i (v_i . q)^2) over S^3.
/// Symmetric in the lambdas and independent of V. Supported concentration
/// range is lambda in [-900, 0]; values below raise InvalidInputError
/// (use bingham_log_normalizer for the unchecked full-range computation).
double bingham_normalizer(const Eigen::Vector3d& lambdas);

/// log F without the documented range check; accurate for arbitrarily
/// negative concentrations. Internally reduces the S^3 integral to a 1-D
/// integral of Bessel-I0 factors evaluated in log space.
double bingham_log_normalizer(const Eigen::Vector3d& lambdas);

struct BinghamProduct {
  BinghamDist dist;
  /// Set when the shifted exponent spectrum has a repeated zero eigenvalue
  /// beyond tolerance 1e-9 (the product's mode is a great circle, not a
  /// point pair). The distribution itself is still valid.
  bool mode_degenerate = false;
};

/// Pointwise product of densities, renormalized (exponent matrices add;
/// the spectrum is shifted so its maximum eigenvalue is zero).
BinghamProduct bingham_multiply(const BinghamDist& B1, const BinghamDist& B2);

/// Product of any number of factors in one spectral decomposition;
/// identical to folding bingham_multiply pairwise.
BinghamProduct bingham_multiply_many(std::span<const BinghamDist> factors);

/// Distribution whose density is proportional to exp(q^T C q) for a
/// symmetric exponent matrix C (spectrum shifted so its maximum is zero).
BinghamProduct bingham_from_exponent(const Eigen::Matrix4d& C);

/// Canonical representative of the density maximum. See mode_is_unique()
/// for the great-circle case; this still returns the direction orthogonal
/// to all V columns.
UnitQuaternion bingham_mode(const BinghamDist& B);

/// As bingham_mode but throws DegenerateError when the mode is not unique
/// (lambda_3 > -1e-9).
UnitQuaternion bingham_mode_strict(const BinghamDist& B);

/// n draws via Metropolis-Hastings with an angular-central-Gaussian
/// proposal matched to B (burn-in 100, thinning 5). Deterministic given
/// the generator state.
std::vector<UnitQuaternion> bingham_sample(const BinghamDist& B, std::mt19937_64& rng,
                                           std::size_t n);

}  // namespace bpa
