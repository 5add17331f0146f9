// oracle.hpp
// Brute-force full-Hilbert-space reference implementations. Everything here
// is deliberately literal (sums over ordered qubit pairs, explicit tensor
// factors) so it can vouch for the fast symmetric-subspace paths at small N.

#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "symmwit/states.hpp"
#include "symmwit/witness.hpp"

namespace symmwit::oracle {

inline constexpr int kMaxOracleQubits = 8;

/// Pure state over the full 2^N-dimensional computational basis,
/// bit i of the index = state of qubit i.
struct FullState {
  int n_qubits = 0;
  Eigen::VectorXcd amplitudes;
};

namespace detail {

inline void check_size(int n, const char* who) {
  if (n < 1 || n > kMaxOracleQubits) {
    throw std::domain_error(std::string(who) + ": oracle paths are limited "
                            "to 1 <= N <= " +
                            std::to_string(kMaxOracleQubits) + ", got N = " +
                            std::to_string(n));
  }
}

/// Single-qubit operator m . sigma.
inline Eigen::Matrix2cd axis_op(const Eigen::Vector3d& m) {
  Eigen::Matrix2cd s;
  s(0, 0) = m.z();
  s(0, 1) = Complex(m.x(), -m.y());
  s(1, 0) = Complex(m.x(), m.y());
  s(1, 1) = -m.z();
  return s;
}

}  // namespace detail

/// Expand a symmetric state over the computational basis: every weight-k
/// bitstring carries amplitude a_k / sqrt(C(N, k)).
inline FullState embed_symmetric(const SymmetricState& s) {
  const int n = s.n_qubits();
  detail::check_size(n, "embed_symmetric");
  const int dim = 1 << n;
  FullState f;
  f.n_qubits = n;
  f.amplitudes.resize(dim);
  std::vector<double> weight(n + 1);
  for (int k = 0; k <= n; ++k) {
    weight[k] = std::exp(-0.5 * symmwit::detail::log_binomial(n, k));
  }
  for (int b = 0; b < dim; ++b) {
    const int k = std::popcount(static_cast<unsigned>(b));
    f.amplitudes(b) = s.amplitude(k) * weight[k];
  }
  return f;
}

enum class PairLabel { s00, s01, s11 };

/// S_ab as a literal sum over ordered pairs i != j of
/// (m_a.sigma)^(i) (m_b.sigma)^(j) on the full space.
inline Eigen::MatrixXcd full_correlation_operator(int n,
                                                  const MeasurementSettings& meas,
                                                  PairLabel label) {
  detail::check_size(n, "full_correlation_operator");
  const Eigen::Vector3d ma = (label == PairLabel::s11) ? meas.m1() : meas.m0();
  const Eigen::Vector3d mb = (label == PairLabel::s00) ? meas.m0() : meas.m1();
  const Eigen::Matrix2cd oa = detail::axis_op(ma);
  const Eigen::Matrix2cd ob = detail::axis_op(mb);
  const int dim = 1 << n;
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int col = 0; col < dim; ++col) {
        const int bi = (col >> i) & 1, bj = (col >> j) & 1;
        for (int ri = 0; ri < 2; ++ri) {
          for (int rj = 0; rj < 2; ++rj) {
            const Complex c = oa(ri, bi) * ob(rj, bj);
            if (c == Complex(0, 0)) continue;
            int row = col & ~(1 << i) & ~(1 << j);
            row |= (ri << i) | (rj << j);
            op(row, col) += c;
          }
        }
      }
    }
  }
  return op;
}

/// Tr(rho S_ab) against the literal pair-sum operator.
inline CorrelationPoint full_correlation_point(const Eigen::MatrixXcd& rho,
                                               const MeasurementSettings& meas) {
  const int dim = static_cast<int>(rho.rows());
  int n = 0;
  while ((1 << n) < dim) ++n;
  CorrelationPoint c;
  c.s00 = (rho * full_correlation_operator(n, meas, PairLabel::s00)).trace().real();
  c.s01 = (rho * full_correlation_operator(n, meas, PairLabel::s01)).trace().real();
  c.s11 = (rho * full_correlation_operator(n, meas, PairLabel::s11)).trace().real();
  return c;
}

inline CorrelationPoint full_correlation_point(const FullState& s,
                                               const MeasurementSettings& meas) {
  const Eigen::MatrixXcd rho = s.amplitudes * s.amplitudes.adjoint();
  return full_correlation_point(rho, meas);
}

/// Four-qubit Smolin state: the equal mixture of the four Bell-pair
/// products Psi_mu(1,2) x Psi_mu(3,4).
inline Eigen::MatrixXcd smolin_state() {
  const double r = 1.0 / std::numbers::sqrt2;
  // Bell states in the (b1 b0) two-qubit basis ordering used here:
  // phi+- = (|00> +- |11>)/sqrt2, psi+- = (|01> +- |10>)/sqrt2.
  Eigen::Matrix<Complex, 4, 4> bell;
  bell.setZero();
  bell.col(0) << r, 0, 0, r;
  bell.col(1) << r, 0, 0, -r;
  bell.col(2) << 0, r, r, 0;
  bell.col(3) << 0, r, -r, 0;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(16, 16);
  for (int mu = 0; mu < 4; ++mu) {
    Eigen::VectorXcd v(16);
    for (int hi = 0; hi < 4; ++hi) {
      for (int lo = 0; lo < 4; ++lo) {
        v(hi * 4 + lo) = bell(hi, mu) * bell(lo, mu);
      }
    }
    rho += 0.25 * (v * v.adjoint());
  }
  return rho;
}

/// Maximum of the witness combination (alpha/2) s00 + beta s01 + (gamma/2)
/// s11 over sampled pure product states. Always includes the structured
/// aligned / anti-aligned configurations, so for even N the reported
/// maximum attains the separability bound F.
inline double brute_max_separable(int n, const WitnessParams& p,
                                  const MeasurementSettings& meas,
                                  int samples, std::uint64_t seed = 0x5eedULL) {
  if (n < 2 || n > 5) {
    throw std::domain_error("brute_max_separable: supported for 2 <= N <= 5, "
                            "got N = " + std::to_string(n));
  }
  if (samples < 1000) {
    throw std::domain_error("brute_max_separable: sample budget must be >= "
                            "1000, got " + std::to_string(samples));
  }
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const BlochConfig& cfg) {
    best = std::max(best,
                    witness_combination(p, separable_correlations(cfg, meas)));
  };
  // Structured candidates: eigendirections of the bound's quadratic form.
  const auto [vmin, vmax] = symmwit::detail::bound_eigenvectors(p, meas);
  consider(BlochConfig(std::vector<Eigen::Vector3d>(n, vmax)));
  consider(BlochConfig(std::vector<Eigen::Vector3d>(n, vmin)));
  {
    std::vector<Eigen::Vector3d> half(n);
    for (int i = 0; i < n; ++i) half[i] = (2 * i < n) ? vmin : (-vmin).eval();
    consider(BlochConfig(half));
    for (int i = 0; i < n; ++i) half[i] = (2 * i < n) ? vmax : (-vmax).eval();
    consider(BlochConfig(half));
  }
  for (const auto& axis : {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0),
                           Eigen::Vector3d(0, 1, 0)}) {
    consider(BlochConfig(std::vector<Eigen::Vector3d>(n, axis)));
    consider(BlochConfig(std::vector<Eigen::Vector3d>(n, -axis)));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::Vector3d> vecs(n);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) {
      Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
      while (v.norm() < 1e-12) v = {gauss(rng), gauss(rng), gauss(rng)};
      vecs[i] = v.normalized();
    }
    consider(BlochConfig(vecs));
  }
  return best;
}

}  // namespace symmwit::oracle
