#include "bpa/bingham.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "bpa/errors.hpp"

namespace bpa {

namespace {

constexpr double kTwoPiSq = 2.0 * std::numbers::pi * std::numbers::pi;

double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 15.0) {
    const double t = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 80; ++k) {
      term *= t / (static_cast<double>(k) * static_cast<double>(k));
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::log(sum);
  }
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double m = 2.0 * k - 1.0;
    term *= m * m / (8.0 * k * x);
    sum += term;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

struct GaussRule {
  std::array<double, 24> nodes{};    // on (-1, 1)
  std::array<double, 24> weights{};
};

// 24-point Gauss-Legendre rule via Newton iteration on the Legendre recurrence.
GaussRule make_gauss_rule() {
  GaussRule r;
  const int n = 24;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const GaussRule& gauss_rule() {
  static const GaussRule rule = make_gauss_rule();
  return rule;
}

// Integrates exp(G(t) - shift) over [a, b]; splits while the log-integrand
// varies by more than ~3 across a panel that still carries mass.
template <typename F>
double panel_integral(const F& G, double a, double b, double shift, int depth) {
  const double ga = G(a), gb = G(b);
  if (depth < 60 && std::abs(ga - gb) > 3.0 && std::max(ga, gb) - shift > -45.0) {
    const double m = 0.5 * (a + b);
    return panel_integral(G, a, m, shift, depth + 1) + panel_integral(G, m, b, shift, depth + 1);
  }
  const GaussRule& r = gauss_rule();
  const double hw = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < 24; ++i) {
    s += r.weights[i] * std::exp(G(mid + hw * r.nodes[i]) - shift);
  }
  return s * hw;
}

Eigen::Vector3d sorted_ascending(Eigen::Vector3d l) {
  std::sort(l.data(), l.data() + 3);
  return l;
}

Eigen::Vector4d canonical_sign(Eigen::Vector4d v) {
  for (int i = 0; i < 4; ++i) {
    if (v(i) > 0.0) return v;
    if (v(i) < 0.0) return -v;
  }
  return v;
}

// Per-coordinate variances of the angular-central-Gaussian proposal matched
// to concentrations lfull (Mardia-style tuning: sum_i 1/(b - 2 l_i) = 1).
Eigen::Vector4d acg_variances(const Eigen::Vector4d& lfull) {
  const auto f = [&](double b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += 1.0 / (b - 2.0 * lfull(i));
    return s - 1.0;
  };
  double lo = 1e-12, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  Eigen::Vector4d psi;
  for (int i = 0; i < 4; ++i) psi(i) = 1.0 / (b - 2.0 * lfull(i));
  return psi;
}

}  // namespace

double bingham_log_normalizer(const Eigen::Vector3d& lambdas) {
  const Eigen::Vector3d l = sorted_ascending(lambdas);
  if (l(2) > 1e-9) {
    throw InvalidInputError("Bingham concentrations must be non-positive");
  }
  const double l0 = std::min(l(0), 0.0), l1 = std::min(l(1), 0.0), l2 = std::min(l(2), 0.0);

  // Hopf-coordinate reduction of the S^3 integral:
  //   F = 2 pi^2 int_0^1 exp(t (l0+l1)/2) I0(t (l1-l0)/2)
  //                    * exp((1-t) l2/2)  I0((1-t) l2/2) dt
  const auto G = [&](double t) {
    return 0.5 * t * (l0 + l1) + 0.5 * (1.0 - t) * l2 + log_bessel_i0(0.5 * t * (l1 - l0)) +
           log_bessel_i0(0.5 * (1.0 - t) * l2);
  };
  // G is convex (log I0 is convex), so its maximum sits at an endpoint.
  const double shift = std::max(G(0.0), G(1.0));

  // Geometric panels from both endpoints at the scale of the log-slope bound.
  const double slope = -l0 - l2 + 1.0;
  std::vector<double> cuts{0.0};
  for (double p = 1.0 / slope; p < 0.5; p *= 2.0) cuts.push_back(p);
  cuts.push_back(0.5);
  for (double p = 1.0 / slope; p < 0.5; p *= 2.0) cuts.push_back(1.0 - p);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());

  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    integral += panel_integral(G, cuts[i], cuts[i + 1], shift, 0);
  }
  return std::log(kTwoPiSq) + shift + std::log(integral);
}

double bingham_normalizer(const Eigen::Vector3d& lambdas) {
  if (lambdas.minCoeff() < -900.0) {
    throw InvalidInputError(
        "OUT_OF_RANGE: bingham_normalizer supports concentrations in [-900, 0]");
  }
  return std::exp(bingham_log_normalizer(lambdas));
}

BinghamDist BinghamDist::make(const Eigen::Vector3d& lambdas, const Dirs& dirs) {
  if (lambdas.maxCoeff() > 1e-9) {
    throw InvalidInputError("Bingham concentrations must be non-positive");
  }
  if ((dirs.transpose() * dirs - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidInputError("Bingham direction columns must be orthonormal");
  }

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lambdas(a) < lambdas(b); });

  BinghamDist B;
  for (int i = 0; i < 3; ++i) {
    B.lambdas_(i) = std::min(lambdas(order[i]), 0.0);
    B.dirs_.col(i) = dirs.col(order[i]);
  }
  const Eigen::HouseholderQR<Eigen::Matrix<double, 4, 3>> qr(B.dirs_);
  const Eigen::Matrix4d Q = qr.householderQ();
  B.mode_ = canonical_sign(Q.col(3));
  B.log_normalizer_ = bingham_log_normalizer(B.lambdas_);
  return B;
}

BinghamDist BinghamDist::uniform() {
  Dirs d = Dirs::Zero();
  d(1, 0) = d(2, 1) = d(3, 2) = 1.0;
  return make(Eigen::Vector3d::Zero(), d);
}

double bingham_log_pdf(const BinghamDist& B, const UnitQuaternion& q) {
  const Eigen::Vector4d c = q.coeffs();
  double e = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = B.dirs().col(i).dot(c);
    e += B.lambdas()(i) * d * d;
  }
  return e - B.log_normalizer();
}

double bingham_pdf(const BinghamDist& B, const UnitQuaternion& q) {
  return std::exp(bingham_log_pdf(B, q));
}

BinghamProduct bingham_from_exponent(const Eigen::Matrix4d& C) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(0.5 * (C + C.transpose()));
  // Shift the spectrum so its largest eigenvalue is zero; the three
  // remaining eigenpairs are the product's concentrations and directions.
  const Eigen::Vector4d ev = es.eigenvalues();
  const Eigen::Vector3d lam = ev.head<3>().array() - ev(3);
  const BinghamDist::Dirs dirs = es.eigenvectors().leftCols<3>();
  BinghamProduct out{BinghamDist::make(lam, dirs), lam(2) > -1e-9};
  return out;
}

BinghamProduct bingham_multiply_many(std::span<const BinghamDist> factors) {
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  for (const BinghamDist& f : factors) {
    C += f.dirs() * f.lambdas().asDiagonal() * f.dirs().transpose();
  }
  return bingham_from_exponent(C);
}

BinghamProduct bingham_multiply(const BinghamDist& B1, const BinghamDist& B2) {
  const std::array<BinghamDist, 2> fs{B1, B2};
  return bingham_multiply_many(fs);
}

UnitQuaternion bingham_mode(const BinghamDist& B) {
  const Eigen::Vector4d m = B.mode_coeffs();
  return UnitQuaternion::from_coeffs_normalized(m).canonical();
}

UnitQuaternion bingham_mode_strict(const BinghamDist& B) {
  if (!B.mode_is_unique()) {
    throw DegenerateError("DEGENERATE: Bingham mode is a great circle (lambda_3 ~ 0)");
  }
  return bingham_mode(B);
}

std::vector<UnitQuaternion> bingham_sample(const BinghamDist& B, std::mt19937_64& rng,
                                           std::size_t n) {
  Eigen::Matrix4d frame;
  frame.leftCols<3>() = B.dirs();
  frame.col(3) = B.mode_coeffs();

  Eigen::Vector4d lfull;
  lfull << B.lambdas(), 0.0;
  const Eigen::Vector4d psi = acg_variances(lfull);
  const Eigen::Vector4d sd = psi.cwiseSqrt();

  const auto log_target = [&](const Eigen::Vector4d& c) {
    return lfull.dot(c.cwiseProduct(c));
  };
  const auto log_proposal = [&](const Eigen::Vector4d& c) {
    return -2.0 * std::log(c.cwiseProduct(c).cwiseQuotient(psi).sum());
  };

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::Vector4d state(0.0, 0.0, 0.0, 1.0);  // start at the mode
  double state_f = log_target(state), state_g = log_proposal(state);

  const auto step = [&] {
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) z(i) = sd(i) * normal(rng);
    const double u = unif(rng);
    const double nz = z.norm();
    if (nz < 1e-300) return;
    const Eigen::Vector4d cand = z / nz;
    const double f = log_target(cand), g = log_proposal(cand);
    if (std::log(u) < (f - state_f) + (state_g - g)) {
      state = cand;
      state_f = f;
      state_g = g;
    }
  };

  constexpr int kBurnIn = 100;
  constexpr int kThin = 5;
  for (int i = 0; i < kBurnIn; ++i) step();

  std::vector<UnitQuaternion> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (int i = 0; i < kThin; ++i) step();
    out.push_back(UnitQuaternion::from_coeffs_normalized(frame * state).canonical());
  }
  return out;
}

}  // namespace bpa
