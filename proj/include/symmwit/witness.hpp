// witness.hpp
// Separability bound F, symmetric-subspace correlation operators, the
// witness operator itself, correlation points and the saturating product
// configurations.
//
// Everything runs on the symmetric subspace: the collective spin identity
//   S_ab = 2 (J_a J_b + J_b J_a) - N (m_a . m_b) I
// turns every two-body correlation sum into products of tridiagonal
// spin-N/2 matrices, and every expectation into a 3x3 second-moment form.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "symmwit/states.hpp"

namespace symmwit {

/// Expectation of the witness on the maximally mixed state (all two-body
/// correlations vanish there, so the normalization pins it to 1).
inline constexpr double kMaximallyMixedExpectation = 1.0;

// ---------------------------------------------------------------------------
// Quadratic form of the Bloch-vector bound
// ---------------------------------------------------------------------------

/// Coefficients of the quadratic form entering the separability bound.
/// Planar mode keeps the (A_zz, A_zx, A_xx) pair form; general mode holds
/// the full 3x3 symmetric matrix B. Eigenvalues are sorted ascending.
struct QuadraticForm {
  MeasMode mode = MeasMode::planar;
  double a_zz = 0, a_zx = 0, a_xx = 0;  // planar coefficients
  Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
  std::vector<double> eigenvalues;  // size 2 (planar) or 3 (general)

  double lambda_min() const { return eigenvalues.front(); }
  double lambda_max() const { return eigenvalues.back(); }
};

enum class BoundBranch { aligned, anti_aligned };

/// Separable bound F = max{ (N^2-N) lambda_max, -N lambda_min } >= 0.
struct SeparableBound {
  double value = 0;
  BoundBranch active_branch = BoundBranch::aligned;
};

/// The triple (<S00>, <S01>, <S11>) locating a state in correlation space.
struct CorrelationPoint {
  double s00 = 0, s01 = 0, s11 = 0;
};

namespace detail {

inline void require_unit(const Eigen::Vector3d& m, const char* who) {
  if (std::abs(m.norm() - 1.0) > kNormTol) {
    throw std::domain_error(std::string(who) + ": measurement axis not unit "
                            "length (|m| = " + std::to_string(m.norm()) + ")");
  }
}

/// Eigenvalues of [[a, c], [c, d]], ascending. Exact closed form.
inline std::pair<double, double> eig2_sym(double a, double c, double d) {
  const double tr = a + d;
  const double disc = std::hypot(a - d, 2.0 * c);
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending; trigonometric closed
/// form (fast path for the optimizer grids; quad_form() itself re-derives
/// them with the iterative solver).
inline void eig3_sym(const Eigen::Matrix3d& m, double out[3]) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  if (p1 == 0.0) {
    out[0] = m(0, 0);
    out[1] = m(1, 1);
    out[2] = m(2, 2);
    std::sort(out, out + 3);
    return;
  }
  const double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
  const double p2 = (m(0, 0) - q) * (m(0, 0) - q) +
                    (m(1, 1) - q) * (m(1, 1) - q) +
                    (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Eigen::Matrix3d a = (m - q * Eigen::Matrix3d::Identity()) / p;
  double r = 0.5 * a.determinant();
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double hi = q + 2.0 * p * std::cos(phi);
  const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  out[0] = lo;
  out[1] = 3.0 * q - hi - lo;
  out[2] = hi;
}

/// B = (alpha/2) m0 m0^T + (beta/2)(m0 m1^T + m1 m0^T) + (gamma/2) m1 m1^T.
inline Eigen::Matrix3d quad_matrix(const WitnessParams& p,
                                   const Eigen::Vector3d& m0,
                                   const Eigen::Vector3d& m1) {
  return 0.5 * p.alpha * (m0 * m0.transpose()) +
         0.5 * p.beta * (m0 * m1.transpose() + m1 * m0.transpose()) +
         0.5 * p.gamma * (m1 * m1.transpose());
}

}  // namespace detail

/// Quadratic-form coefficients and eigenvalues for the given witness
/// coefficients and measurement settings.
inline QuadraticForm quad_form(const WitnessParams& p,
                               const MeasurementSettings& meas) {
  QuadraticForm q;
  q.mode = meas.mode();
  if (meas.is_planar()) {
    const double th = meas.theta();
    q.a_zz = 0.5 * p.alpha + p.beta * std::cos(th) +
             0.5 * p.gamma * std::cos(th) * std::cos(th);
    q.a_zx = p.beta * std::sin(th) + 0.5 * p.gamma * std::sin(2.0 * th);
    q.a_xx = 0.5 * p.gamma * std::sin(th) * std::sin(th);
    auto [lo, hi] = detail::eig2_sym(q.a_zz, 0.5 * q.a_zx, q.a_xx);
    q.eigenvalues = {lo, hi};
  } else {
    q.b = detail::quad_matrix(p, meas.m0(), meas.m1());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(q.b,
                                                      Eigen::EigenvaluesOnly);
    q.eigenvalues = {es.eigenvalues()(0), es.eigenvalues()(1),
                     es.eigenvalues()(2)};
  }
  return q;
}

/// F(alpha, beta, gamma, meas, N): the maximum of the witness combination
/// over all separable states.
inline SeparableBound separable_bound(const WitnessParams& p,
                                      const MeasurementSettings& meas, int n) {
  if (n < 2) {
    throw std::domain_error("separable_bound: need N >= 2");
  }
  const QuadraticForm q = quad_form(p, meas);
  const double pairs = static_cast<double>(n) * n - n;
  const double aligned = pairs * q.lambda_max();
  const double anti = -static_cast<double>(n) * q.lambda_min();
  SeparableBound b;
  if (aligned >= anti) {
    b.value = aligned;
    b.active_branch = BoundBranch::aligned;
  } else {
    b.value = anti;
    b.active_branch = BoundBranch::anti_aligned;
  }
  return b;
}

/// Witness normalizations below this are rejected as degenerate.
inline double bound_epsilon(const WitnessParams& p, int n) {
  return 1e-9 * p.max_abs() * static_cast<double>(n) * n;
}

struct degenerate_bound_error : std::domain_error {
  explicit degenerate_bound_error(const WitnessParams& p, double f)
      : std::domain_error("degenerate separability bound F = " +
                          std::to_string(f) + " for (alpha, beta, gamma) = (" +
                          std::to_string(p.alpha) + ", " +
                          std::to_string(p.beta) + ", " +
                          std::to_string(p.gamma) + ")") {}
};

// ---------------------------------------------------------------------------
// Symmetric-subspace operators
// ---------------------------------------------------------------------------

/// Hermitian operator restricted to the symmetric (Dicke) subspace:
/// an (N+1) x (N+1) matrix.
struct SubspaceOperator {
  int n_qubits = 0;
  Eigen::MatrixXcd matrix;

  /// <psi| op |psi>; dimension-checked.
  double expectation(const SymmetricState& s) const {
    if (s.n_qubits() != n_qubits) {
      throw std::invalid_argument(
          "SubspaceOperator::expectation: state has N = " +
          std::to_string(s.n_qubits()) + ", operator has N = " +
          std::to_string(n_qubits));
    }
    const Complex v = s.amplitudes().dot(matrix * s.amplitudes());
    return v.real();
  }
};

namespace detail {

/// Collective spin component m . (Jx, Jy, Jz) as a tridiagonal in the Dicke
/// basis, index k = number of excitations (Jz eigenvalue (N-2k)/2).
struct TriDiag {
  Eigen::VectorXcd sub;   // sub(k)  = <k|J|k-1>, k = 1..N
  Eigen::VectorXcd diag;  // diag(k) = <k|J|k>
  Eigen::VectorXcd sup;   // sup(k)  = <k|J|k+1>, k = 0..N-1

  Complex at(int i, int j) const {
    if (i == j) return diag(i);
    if (i == j + 1) return sub(i);
    if (i + 1 == j) return sup(i);
    return 0.0;
  }
};

inline TriDiag collective_component(int n, const Eigen::Vector3d& m) {
  TriDiag t;
  t.sub.resize(n + 1);
  t.diag.resize(n + 1);
  t.sup.resize(n + 1);
  t.sub.setZero();
  t.sup.setZero();
  const Complex up(m.x() / 2.0, m.y() / 2.0);    // pairs with J- transitions
  const Complex dn(m.x() / 2.0, -m.y() / 2.0);   // pairs with J+ transitions
  for (int k = 0; k <= n; ++k) {
    t.diag(k) = m.z() * 0.5 * (n - 2.0 * k);
    if (k >= 1) {
      t.sub(k) = up * std::sqrt(static_cast<double>(k) * (n - k + 1.0));
    }
    if (k + 1 <= n) {
      t.sup(k) = dn * std::sqrt((k + 1.0) * static_cast<double>(n - k));
    }
  }
  return t;
}

/// Dense (N+1)^2 matrix of a tridiagonal.
inline Eigen::MatrixXcd to_dense(const TriDiag& t) {
  const int d = static_cast<int>(t.diag.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    m(k, k) = t.diag(k);
    if (k >= 1) m(k, k - 1) = t.sub(k);
    if (k + 1 < d) m(k, k + 1) = t.sup(k);
  }
  return m;
}

/// Product of two tridiagonals: pentadiagonal, filled band-wise.
inline Eigen::MatrixXcd tri_product(const TriDiag& a, const TriDiag& b) {
  const int d = static_cast<int>(a.diag.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const int jlo = std::max(0, i - 2), jhi = std::min(d - 1, i + 2);
    for (int j = jlo; j <= jhi; ++j) {
      const int mlo = std::max({0, i - 1, j - 1});
      const int mhi = std::min({d - 1, i + 1, j + 1});
      Complex acc = 0.0;
      for (int k = mlo; k <= mhi; ++k) acc += a.at(i, k) * b.at(k, j);
      m(i, j) = acc;
    }
  }
  return m;
}

/// y = J x in O(N).
inline Eigen::VectorXcd tri_apply(const TriDiag& t, const Eigen::VectorXcd& x) {
  const int d = static_cast<int>(t.diag.size());
  Eigen::VectorXcd y(d);
  for (int k = 0; k < d; ++k) {
    Complex acc = t.diag(k) * x(k);
    if (k >= 1) acc += t.sub(k) * x(k - 1);
    if (k + 1 < d) acc += t.sup(k) * x(k + 1);
    y(k) = acc;
  }
  return y;
}

}  // namespace detail

/// Collective spin operators (Jx, Jy, Jz) in the spin-N/2 representation on
/// the Dicke basis.
inline std::array<SubspaceOperator, 3> collective_spin(int n) {
  if (n < 1) {
    throw std::domain_error("collective_spin: need N >= 1");
  }
  std::array<SubspaceOperator, 3> ops;
  const Eigen::Vector3d axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int p = 0; p < 3; ++p) {
    ops[p].n_qubits = n;
    ops[p].matrix = detail::to_dense(detail::collective_component(n, axes[p]));
  }
  return ops;
}

/// Symmetric-subspace restriction of S_ab = sum_{i != j} (m_a.sigma)^(i)
/// (m_b.sigma)^(j), i.e. 2(J_a J_b + J_b J_a) - N (m_a.m_b) I. Pentadiagonal.
inline SubspaceOperator correlation_operator(int n, const Eigen::Vector3d& m_a,
                                             const Eigen::Vector3d& m_b) {
  if (n < 2) {
    throw std::domain_error("correlation_operator: need N >= 2");
  }
  detail::require_unit(m_a, "correlation_operator");
  detail::require_unit(m_b, "correlation_operator");
  const detail::TriDiag ja = detail::collective_component(n, m_a);
  const detail::TriDiag jb = detail::collective_component(n, m_b);
  Eigen::MatrixXcd prod = detail::tri_product(ja, jb);
  SubspaceOperator s;
  s.n_qubits = n;
  s.matrix = 2.0 * (prod + prod.adjoint().eval());
  s.matrix -= static_cast<double>(n) * m_a.dot(m_b) *
              Eigen::MatrixXcd::Identity(n + 1, n + 1);
  return s;
}

/// The three correlation operators (S00, S01, S11) for the given settings.
inline std::array<SubspaceOperator, 3> correlation_operators(
    int n, const MeasurementSettings& meas) {
  return {correlation_operator(n, meas.m0(), meas.m0()),
          correlation_operator(n, meas.m0(), meas.m1()),
          correlation_operator(n, meas.m1(), meas.m1())};
}

/// Witness operator A = I - [ (alpha/2) S00 + beta S01 + (gamma/2) S11 ] / F
/// on the symmetric subspace. Throws degenerate_bound_error when F is too
/// small to normalize against.
inline SubspaceOperator witness_operator(int n, const WitnessParams& p,
                                         const MeasurementSettings& meas) {
  const SeparableBound f = separable_bound(p, meas, n);
  if (f.value <= bound_epsilon(p, n)) {
    throw degenerate_bound_error(p, f.value);
  }
  const auto s = correlation_operators(n, meas);
  SubspaceOperator a;
  a.n_qubits = n;
  a.matrix = Eigen::MatrixXcd::Identity(n + 1, n + 1) -
             (0.5 * p.alpha * s[0].matrix + p.beta * s[1].matrix +
              0.5 * p.gamma * s[2].matrix) /
                 f.value;
  a.matrix = 0.5 * (a.matrix + a.matrix.adjoint().eval());
  return a;
}

// ---------------------------------------------------------------------------
// Correlation profiles: the 3x3 second-moment reduction
// ---------------------------------------------------------------------------

/// Everything the witness ever asks of a state: N and the second moments
/// M_pq = <J_p J_q + J_q J_p>. Correlations follow for any axes via
/// s_ab = 2 m_a^T M m_b - N m_a.m_b, making parameter scans O(1) per point.
struct CorrelationProfile {
  int n_qubits = 0;
  Eigen::Matrix3d second_moment = Eigen::Matrix3d::Zero();

  double correlation(const Eigen::Vector3d& m_a,
                     const Eigen::Vector3d& m_b) const {
    return 2.0 * m_a.dot(second_moment * m_b) -
           static_cast<double>(n_qubits) * m_a.dot(m_b);
  }
};

inline CorrelationProfile correlation_profile(const SymmetricState& s) {
  const int n = s.n_qubits();
  const Eigen::Vector3d axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::array<Eigen::VectorXcd, 3> w;
  for (int p = 0; p < 3; ++p) {
    w[p] = detail::tri_apply(detail::collective_component(n, axes[p]),
                             s.amplitudes());
  }
  CorrelationProfile prof;
  prof.n_qubits = n;
  for (int p = 0; p < 3; ++p) {
    for (int q = p; q < 3; ++q) {
      const double v = 2.0 * w[p].dot(w[q]).real();
      prof.second_moment(p, q) = v;
      prof.second_moment(q, p) = v;
    }
  }
  return prof;
}

inline CorrelationPoint correlation_point(const CorrelationProfile& prof,
                                          const MeasurementSettings& meas) {
  return {prof.correlation(meas.m0(), meas.m0()),
          prof.correlation(meas.m0(), meas.m1()),
          prof.correlation(meas.m1(), meas.m1())};
}

/// (<S00>, <S01>, <S11>) of a symmetric state.
inline CorrelationPoint correlation_point(const SymmetricState& s,
                                          const MeasurementSettings& meas) {
  return correlation_point(correlation_profile(s), meas);
}

/// The witness combination (alpha/2) s00 + beta s01 + (gamma/2) s11.
inline double witness_combination(const WitnessParams& p,
                                  const CorrelationPoint& c) {
  return 0.5 * p.alpha * c.s00 + p.beta * c.s01 + 0.5 * p.gamma * c.s11;
}

inline double witness_expectation(const CorrelationProfile& prof,
                                  const WitnessParams& p,
                                  const MeasurementSettings& meas) {
  const SeparableBound f = separable_bound(p, meas, prof.n_qubits);
  if (f.value <= bound_epsilon(p, prof.n_qubits)) {
    throw degenerate_bound_error(p, f.value);
  }
  return 1.0 - witness_combination(p, correlation_point(prof, meas)) / f.value;
}

/// <A> for a symmetric state; negative values certify entanglement.
inline double witness_expectation(const SymmetricState& s,
                                  const WitnessParams& p,
                                  const MeasurementSettings& meas) {
  return witness_expectation(correlation_profile(s), p, meas);
}

// ---------------------------------------------------------------------------
// Product states: correlations, saturating configurations, noise threshold
// ---------------------------------------------------------------------------

/// Correlation point of a product configuration:
/// s_ab = N^2 (m_a.nbar)(m_b.nbar) - N avg_i (m_a.n_i)(m_b.n_i).
inline CorrelationPoint separable_correlations(const BlochConfig& config,
                                               const MeasurementSettings& meas) {
  double su = 0, sv = 0, suu = 0, suv = 0, svv = 0;
  for (const auto& b : config.vectors) {
    const double u = meas.m0().dot(b);
    const double v = meas.m1().dot(b);
    su += u;
    sv += v;
    suu += u * u;
    suv += u * v;
    svv += v * v;
  }
  CorrelationPoint c;
  c.s00 = su * su - suu;
  c.s01 = su * sv - suv;
  c.s11 = sv * sv - svv;
  return c;
}

namespace detail {

inline void fix_sign(Eigen::Vector3d& v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v(i)) > 1e-14) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

/// Unit Bloch vectors spanning the extreme eigendirections of the bound's
/// quadratic form, in the original (x, y, z) frame. Returns {v_min, v_max}.
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> bound_eigenvectors(
    const WitnessParams& p, const MeasurementSettings& meas) {
  if (meas.is_planar()) {
    const QuadraticForm q = quad_form(p, meas);
    // 2x2 eigenvectors of [[a_zz, a_zx/2], [a_zx/2, a_xx]] in (z, x) coords.
    const double a = q.a_zz, c = 0.5 * q.a_zx, d = q.a_xx;
    auto vec_for = [&](double lam) {
      Eigen::Vector2d v;
      const Eigen::Vector2d r1(a - lam, c), r2(c, d - lam);
      // null-space direction of (Q - lam I)
      if (r1.norm() >= r2.norm() && r1.norm() > 1e-300) {
        v = Eigen::Vector2d(-r1(1), r1(0)).normalized();
      } else if (r2.norm() > 1e-300) {
        v = Eigen::Vector2d(-r2(1), r2(0)).normalized();
      } else {
        v = Eigen::Vector2d(1, 0);
      }
      return v;
    };
    const Eigen::Vector2d lo = vec_for(q.eigenvalues[0]);
    const Eigen::Vector2d hi = vec_for(q.eigenvalues[1]);
    Eigen::Vector3d vmin(lo(1), 0.0, lo(0));  // (z, x) -> bloch (x, y, z)
    Eigen::Vector3d vmax(hi(1), 0.0, hi(0));
    fix_sign(vmin);
    fix_sign(vmax);
    return {vmin, vmax};
  }
  const Eigen::Matrix3d b = quad_matrix(p, meas.m0(), meas.m1());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(b);
  Eigen::Vector3d vmin = es.eigenvectors().col(0);
  Eigen::Vector3d vmax = es.eigenvectors().col(2);
  fix_sign(vmin);
  fix_sign(vmax);
  return {vmin, vmax};
}

}  // namespace detail

/// Product configuration achieving the bound F (even N only): all qubits on
/// the top eigendirection for the aligned branch, a half/half split along
/// the bottom eigendirection for the anti-aligned branch.
inline BlochConfig saturating_config(const WitnessParams& p,
                                     const MeasurementSettings& meas, int n) {
  if (n % 2 != 0) {
    throw std::domain_error(
        "saturating_config: the bound is only exactly saturable for even N "
        "(got N = " + std::to_string(n) + ")");
  }
  const SeparableBound f = separable_bound(p, meas, n);
  if (f.value <= bound_epsilon(p, n)) {
    throw degenerate_bound_error(p, f.value);
  }
  const auto [vmin, vmax] = detail::bound_eigenvectors(p, meas);
  std::vector<Eigen::Vector3d> vecs(n);
  if (f.active_branch == BoundBranch::aligned) {
    std::fill(vecs.begin(), vecs.end(), vmax);
  } else {
    for (int i = 0; i < n; ++i) vecs[i] = (i < n / 2) ? vmin : (-vmin).eval();
  }
  return BlochConfig(std::move(vecs));
}

/// White-noise fraction P* = Q/(Q+1) at which a detection of depth -Q is
/// washed out.
inline double white_noise_threshold(double q) {
  if (q < 0) {
    throw std::domain_error("white_noise_threshold: Q must be >= 0, got " +
                            std::to_string(q));
  }
  return q / (q + 1.0);
}

}  // namespace symmwit
