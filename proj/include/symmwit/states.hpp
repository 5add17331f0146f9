// states.hpp
// Pure symmetric states over the Dicke basis, product-state Bloch
// configurations, measurement settings and witness coefficients.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace symmwit {

using Complex = std::complex<double>;

/// Tolerance on unit-norm invariants (state amplitudes, measurement axes).
inline constexpr double kNormTol = 1e-12;

namespace detail {

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

/// Pure permutation-symmetric state of N qubits, stored as the N+1 complex
/// amplitudes over the Dicke basis; entry k multiplies |D^k_N>.
/// Immutable after construction.
class SymmetricState {
 public:
  SymmetricState(int n_qubits, Eigen::VectorXcd amplitudes)
      : n_(n_qubits), amp_(std::move(amplitudes)) {
    if (n_ < 2) {
      throw std::domain_error("SymmetricState: need n_qubits >= 2, got " +
                              std::to_string(n_));
    }
    if (amp_.size() != n_ + 1) {
      throw std::invalid_argument(
          "SymmetricState: amplitude vector must have length n_qubits + 1 = " +
          std::to_string(n_ + 1) + ", got " + std::to_string(amp_.size()));
    }
    const double nrm2 = amp_.squaredNorm();
    if (std::abs(nrm2 - 1.0) > kNormTol) {
      throw std::invalid_argument(
          "SymmetricState: amplitudes not normalized (|norm^2 - 1| = " +
          std::to_string(std::abs(nrm2 - 1.0)) + ")");
    }
  }

  int n_qubits() const { return n_; }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  Complex amplitude(int k) const { return amp_(k); }

 private:
  int n_;
  Eigen::VectorXcd amp_;
};

/// Dicke state |D^k_N>: amplitude 1 at index k.
inline SymmetricState dicke(int n, int k) {
  if (n < 2) {
    throw std::domain_error("dicke: need N >= 2, got N = " + std::to_string(n));
  }
  if (k < 0 || k > n) {
    throw std::domain_error("dicke: k must lie in [0, " + std::to_string(n) +
                            "], got k = " + std::to_string(k));
  }
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n + 1);
  a(k) = 1.0;
  return SymmetricState(n, std::move(a));
}

/// GHZ state (|D^0_N> + |D^N_N>)/sqrt(2). Requires N >= 3 so that the
/// components stay orthogonal to the k=2 Dicke state used elsewhere.
inline SymmetricState ghz(int n) {
  if (n < 3) {
    throw std::domain_error("ghz: need N >= 3, got N = " + std::to_string(n));
  }
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n + 1);
  a(0) = a(n) = 1.0 / std::numbers::sqrt2;
  return SymmetricState(n, std::move(a));
}

/// Spin-squeezed state: amplitude_k = sqrt(C(N,k)/2^N) exp(-i chi (k-N/2)^2).
/// Binomial weights go through log-gamma so N ~ 10^3 stays finite; the
/// result is renormalized to absorb the last-digit rounding of lgamma.
inline SymmetricState spin_squeezed(int n, double chi) {
  if (n < 2) {
    throw std::domain_error("spin_squeezed: need N >= 2, got N = " +
                            std::to_string(n));
  }
  Eigen::VectorXcd a(n + 1);
  const double log2 = std::numbers::ln2;
  for (int k = 0; k <= n; ++k) {
    const double mag = std::exp(0.5 * (detail::log_binomial(n, k) - n * log2));
    const double d = k - 0.5 * n;
    const double phase = -chi * d * d;
    a(k) = std::polar(mag, phase);
  }
  a /= a.norm();
  return SymmetricState(n, std::move(a));
}

/// cos(Omega) |D^2_N> + sin(Omega) |GHZ_N>. Requires N >= 3.
inline SymmetricState dicke_ghz_superposition(int n, double omega) {
  if (n < 3) {
    throw std::domain_error("dicke_ghz_superposition: need N >= 3, got N = " +
                            std::to_string(n));
  }
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n + 1);
  const double s = std::sin(omega) / std::numbers::sqrt2;
  a(2) = std::cos(omega);
  a(0) = s;
  a(n) = s;
  a /= a.norm();
  return SymmetricState(n, std::move(a));
}

/// Product-state description: one Bloch vector per qubit, norm <= 1.
/// Pure product states sit on the unit sphere.
struct BlochConfig {
  std::vector<Eigen::Vector3d> vectors;

  explicit BlochConfig(std::vector<Eigen::Vector3d> v) : vectors(std::move(v)) {
    for (const auto& b : vectors) {
      if (b.norm() > 1.0 + kNormTol) {
        throw std::domain_error("BlochConfig: vector norm " +
                                std::to_string(b.norm()) + " exceeds 1");
      }
    }
  }

  int n_qubits() const { return static_cast<int>(vectors.size()); }
};

enum class MeasMode { planar, general };

/// The two per-qubit measurement axes. Planar mode pins m0 = z and
/// m1 = (sin theta, 0, cos theta); general mode takes both axes from
/// spherical angles.
class MeasurementSettings {
 public:
  static MeasurementSettings planar(double theta) {
    MeasurementSettings m;
    m.mode_ = MeasMode::planar;
    m.angles_ = {0.0, 0.0, theta, 0.0};
    m.m0_ = Eigen::Vector3d(0, 0, 1);
    m.m1_ = Eigen::Vector3d(std::sin(theta), 0, std::cos(theta));
    return m;
  }

  static MeasurementSettings general(double theta0, double phi0, double theta1,
                                     double phi1) {
    MeasurementSettings m;
    m.mode_ = MeasMode::general;
    m.angles_ = {theta0, phi0, theta1, phi1};
    m.m0_ = direction(theta0, phi0);
    m.m1_ = direction(theta1, phi1);
    return m;
  }

  static Eigen::Vector3d direction(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta)};
  }

  MeasMode mode() const { return mode_; }
  bool is_planar() const { return mode_ == MeasMode::planar; }
  const Eigen::Vector3d& m0() const { return m0_; }
  const Eigen::Vector3d& m1() const { return m1_; }
  /// Planar tilt of m1 against z (only meaningful in planar mode).
  double theta() const { return angles_[2]; }
  /// (theta0, phi0, theta1, phi1); planar settings report (0, 0, theta, 0).
  const std::array<double, 4>& angles() const { return angles_; }

 private:
  MeasurementSettings() = default;
  MeasMode mode_ = MeasMode::planar;
  std::array<double, 4> angles_{};
  Eigen::Vector3d m0_{0, 0, 1};
  Eigen::Vector3d m1_{0, 0, 1};
};

/// Witness coefficients (alpha, beta, gamma). Scale-invariant downstream;
/// normalized() maps onto the unit sphere before optimization.
struct WitnessParams {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;

  WitnessParams() = default;
  WitnessParams(double a, double b, double g) : alpha(a), beta(b), gamma(g) {
    if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) {
      throw std::domain_error("WitnessParams: (0, 0, 0) is not a witness");
    }
  }

  WitnessParams normalized() const {
    const double r = std::sqrt(alpha * alpha + beta * beta + gamma * gamma);
    return WitnessParams(alpha / r, beta / r, gamma / r);
  }

  WitnessParams negated() const { return WitnessParams(-alpha, -beta, -gamma); }

  double max_abs() const {
    return std::max({std::abs(alpha), std::abs(beta), std::abs(gamma)});
  }
};

}  // namespace symmwit
