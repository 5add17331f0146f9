// optimizer.hpp
// Parameter optimization of the witness: deterministic multi-start grids,
// simplex refinement, the minimum symmetric eigenstate, and the theta / chi
// / Omega scans.
//
// All state dependence enters through CorrelationProfile, so a single grid
// evaluation costs a handful of flops no matter how many qubits the state
// has. Grids are evaluated in parallel with an ordered reduction keyed on
// the flat grid index; results are identical for any worker count.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "symmwit/states.hpp"
#include "symmwit/witness.hpp"

namespace symmwit {

struct OptimizeOptions {
  int sphere_points = 26;         // grid per spherical angle of (a, b, g)
  int planar_theta_points = 64;   // theta grid on (0, pi)
  int general_angle_points = 16;  // grid per measurement angle (4 angles)
  int refine_seeds = 10;          // simplex starts taken from the best seeds
  int refine_max_evals = 500;     // per-seed simplex budget
  double refine_tol = 1e-8;
  int workers = 1;                // 0 = hardware concurrency
  double near_optimal_window = 1e-3;
  bool skip_grid = false;         // refine extra_seeds only (warm restarts)
  std::vector<std::pair<WitnessParams, MeasurementSettings>> extra_seeds;

  int effective_workers() const {
    if (workers > 0) return workers;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
  }
};

struct GridSeed {
  double value = 0;
  WitnessParams params{1, 0, 0};
  MeasurementSettings meas = MeasurementSettings::planar(0);
};

struct OptResult {
  double best_value = 0;
  WitnessParams best_params{1, 0, 0};
  MeasurementSettings best_meas = MeasurementSettings::planar(0);
  long evaluations = 0;
  bool converged = false;
  /// Grid seeds landing within near_optimal_window of the optimum
  /// (capped at 64 entries).
  std::vector<GridSeed> near_optimal;
};

namespace detail {

constexpr double kBadValue = 1e30;

/// (alpha, beta, gamma) on the unit sphere from two angles.
inline void sphere_params(double u, double v, double& a, double& b,
                          double& g) {
  const double su = std::sin(u);
  a = su * std::cos(v);
  b = su * std::sin(v);
  g = std::cos(u);
}

/// Witness value for a planar setting, fast closed-form path.
/// Returns kBadValue when the bound degenerates.
inline double planar_value(int n, double s00, double s01, double s11,
                           double ct, double st, double a, double b,
                           double g) {
  const double azz = 0.5 * a + b * ct + 0.5 * g * ct * ct;
  const double azx = b * st + g * st * ct;
  const double axx = 0.5 * g * st * st;
  const double tr = azz + axx;
  const double disc = std::sqrt((azz - axx) * (azz - axx) + azx * azx);
  const double lo = 0.5 * (tr - disc);
  const double hi = 0.5 * (tr + disc);
  const double pairs = static_cast<double>(n) * n - n;
  const double f = std::max(pairs * hi, -static_cast<double>(n) * lo);
  const double eps =
      1e-9 * std::max({std::abs(a), std::abs(b), std::abs(g)}) * n *
      static_cast<double>(n);
  if (f <= eps) return kBadValue;
  return 1.0 - (0.5 * a * s00 + b * s01 + 0.5 * g * s11) / f;
}

/// Same for arbitrary measurement axes; b6 entries of the symmetric form
/// are assembled from the precomputed outer products.
struct GeneralGeom {
  double s00, s01, s11;
  double g00[6], g01[6], g11[6];  // xx, yy, zz, xy, xz, yz
};

inline void outer6(const Eigen::Vector3d& p, const Eigen::Vector3d& q,
                   double out[6]) {
  out[0] = p.x() * q.x();
  out[1] = p.y() * q.y();
  out[2] = p.z() * q.z();
  out[3] = 0.5 * (p.x() * q.y() + p.y() * q.x());
  out[4] = 0.5 * (p.x() * q.z() + p.z() * q.x());
  out[5] = 0.5 * (p.y() * q.z() + p.z() * q.y());
}

inline GeneralGeom make_geom(const CorrelationProfile& prof,
                             const Eigen::Vector3d& m0,
                             const Eigen::Vector3d& m1) {
  GeneralGeom ge;
  ge.s00 = prof.correlation(m0, m0);
  ge.s01 = prof.correlation(m0, m1);
  ge.s11 = prof.correlation(m1, m1);
  outer6(m0, m0, ge.g00);
  outer6(m0, m1, ge.g01);
  outer6(m1, m1, ge.g11);
  return ge;
}

inline double general_value(int n, const GeneralGeom& ge, double a, double b,
                            double g) {
  Eigen::Matrix3d m;
  double c[6];
  for (int i = 0; i < 6; ++i) {
    c[i] = 0.5 * a * ge.g00[i] + b * ge.g01[i] + 0.5 * g * ge.g11[i];
  }
  m(0, 0) = c[0];
  m(1, 1) = c[1];
  m(2, 2) = c[2];
  m(0, 1) = m(1, 0) = c[3];
  m(0, 2) = m(2, 0) = c[4];
  m(1, 2) = m(2, 1) = c[5];
  double eig[3];
  eig3_sym(m, eig);
  const double pairs = static_cast<double>(n) * n - n;
  const double f = std::max(pairs * eig[2], -static_cast<double>(n) * eig[0]);
  const double eps =
      1e-9 * std::max({std::abs(a), std::abs(b), std::abs(g)}) * n *
      static_cast<double>(n);
  if (f <= eps) return kBadValue;
  return 1.0 - (0.5 * a * ge.s00 + b * ge.s01 + 0.5 * g * ge.s11) / f;
}

/// Witness value at a simplex point x: (u, v, theta) in planar mode,
/// (u, v, theta0, phi0, theta1, phi1) in general mode.
inline double point_value(const CorrelationProfile& prof, MeasMode mode,
                          const Eigen::VectorXd& x) {
  double a, b, g;
  sphere_params(x(0), x(1), a, b, g);
  if (mode == MeasMode::planar) {
    return planar_value(prof.n_qubits, prof.correlation({0, 0, 1}, {0, 0, 1}),
                        prof.correlation({0, 0, 1},
                                         {std::sin(x(2)), 0, std::cos(x(2))}),
                        prof.correlation({std::sin(x(2)), 0, std::cos(x(2))},
                                         {std::sin(x(2)), 0, std::cos(x(2))}),
                        std::cos(x(2)), std::sin(x(2)), a, b, g);
  }
  const Eigen::Vector3d m0 = MeasurementSettings::direction(x(2), x(3));
  const Eigen::Vector3d m1 = MeasurementSettings::direction(x(4), x(5));
  return general_value(prof.n_qubits, make_geom(prof, m0, m1), a, b, g);
}

inline Eigen::VectorXd seed_to_point(const WitnessParams& p,
                                     const MeasurementSettings& meas) {
  const WitnessParams pn = p.normalized();
  const double u = std::acos(std::clamp(pn.gamma, -1.0, 1.0));
  const double v = std::atan2(pn.beta, pn.alpha);
  if (meas.is_planar()) {
    Eigen::VectorXd x(3);
    x << u, v, meas.theta();
    return x;
  }
  Eigen::VectorXd x(6);
  x << u, v, meas.angles()[0], meas.angles()[1], meas.angles()[2],
      meas.angles()[3];
  return x;
}

inline std::pair<WitnessParams, MeasurementSettings> point_to_seed(
    MeasMode mode, const Eigen::VectorXd& x) {
  double a, b, g;
  sphere_params(x(0), x(1), a, b, g);
  WitnessParams p(a, b, g);
  if (mode == MeasMode::planar) {
    return {p, MeasurementSettings::planar(x(2))};
  }
  return {p, MeasurementSettings::general(x(2), x(3), x(4), x(5))};
}

/// Deterministic Nelder-Mead simplex descent. Tolerates the kinks of the
/// max-branch bound. Returns the best point found within the budget.
template <typename F>
inline std::pair<Eigen::VectorXd, double> nelder_mead(F&& f,
                                                      const Eigen::VectorXd& x0,
                                                      double step,
                                                      int max_evals, double tol,
                                                      long& evals,
                                                      bool& converged) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  for (int i = 1; i <= d; ++i) xs[i](i - 1) += step;
  int used = 0;
  for (int i = 0; i <= d; ++i) {
    fs[i] = f(xs[i]);
    ++used;
  }
  converged = false;
  auto order = [&] {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int l, int r) { return fs[l] < fs[r]; });
    std::vector<Eigen::VectorXd> x2(d + 1);
    std::vector<double> f2(d + 1);
    for (int i = 0; i <= d; ++i) {
      x2[i] = xs[idx[i]];
      f2[i] = fs[idx[i]];
    }
    xs.swap(x2);
    fs.swap(f2);
  };
  order();
  while (used < max_evals) {
    if (std::abs(fs[d] - fs[0]) < tol &&
        (xs[d] - xs[0]).cwiseAbs().maxCoeff() < tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= d;
    const Eigen::VectorXd xr = centroid + (centroid - xs[d]);
    const double fr = f(xr);
    ++used;
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[d]);
      const double fe = f(xe);
      ++used;
      if (fe < fr) {
        xs[d] = xe;
        fs[d] = fe;
      } else {
        xs[d] = xr;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      xs[d] = xr;
      fs[d] = fr;
    } else {
      const bool outside = fr < fs[d];
      const Eigen::VectorXd xc =
          centroid + 0.5 * ((outside ? xr : xs[d]) - centroid);
      const double fc = f(xc);
      ++used;
      if (fc < (outside ? fr : fs[d])) {
        xs[d] = xc;
        fs[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = f(xs[i]);
          ++used;
          if (used >= max_evals) break;
        }
      }
    }
    order();
  }
  evals += used;
  return {xs[0], fs[0]};
}

struct Candidate {
  double value;
  long flat;
};

struct CandidateHeapLess {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.value < b.value || (a.value == b.value && a.flat < b.flat);
  }
};

/// Bounded best-K collector, deterministically ordered by (value, index).
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}
  void push(double value, long flat) {
    items_.push_back({value, flat});
    std::push_heap(items_.begin(), items_.end(), CandidateHeapLess{});
    if (items_.size() > k_) {
      std::pop_heap(items_.begin(), items_.end(), CandidateHeapLess{});
      items_.pop_back();
    }
  }
  std::vector<Candidate> sorted() && {
    std::sort_heap(items_.begin(), items_.end(), CandidateHeapLess{});
    return std::move(items_);
  }
  const std::vector<Candidate>& raw() const { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

}  // namespace detail

/// Minimize <A> over witness coefficients and measurement angles for a
/// fixed correlation profile. Deterministic for fixed options; the worker
/// count never changes the result.
inline OptResult minimize_witness(const CorrelationProfile& prof,
                                  MeasMode mode,
                                  const OptimizeOptions& opt = {}) {
  const int n = prof.n_qubits;
  const int su = std::max(2, opt.sphere_points);
  const int sv = su;
  const int nsphere = su * sv;
  std::vector<double> pa(nsphere), pb(nsphere), pg(nsphere);
  for (int i = 0; i < su; ++i) {
    const double u = std::numbers::pi * (i + 0.5) / su;
    for (int j = 0; j < sv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / sv;
      detail::sphere_params(u, v, pa[i * sv + j], pb[i * sv + j],
                            pg[i * sv + j]);
    }
  }

  const std::size_t keep = std::max<std::size_t>(64, opt.refine_seeds);
  std::vector<detail::Candidate> grid_best;
  long grid_evals = 0;
  std::vector<MeasurementSettings> outer_meas;

  if (!opt.skip_grid) {
    if (mode == MeasMode::planar) {
      const int nt = std::max(2, opt.planar_theta_points);
      outer_meas.reserve(nt);
      for (int t = 0; t < nt; ++t) {
        outer_meas.push_back(MeasurementSettings::planar(
            std::numbers::pi * (t + 0.5) / nt));
      }
    } else {
      const int ng = std::max(3, opt.general_angle_points);
      outer_meas.reserve(static_cast<std::size_t>(ng) * ng * ng * ng);
      // m0 is restricted to the upper hemisphere: flipping m0 only flips
      // the sign of beta, which the sphere grid already covers.
      for (int a = 0; a < ng; ++a) {
        const double t0 = 0.5 * std::numbers::pi * (a + 1.0) / ng;
        for (int b = 0; b < ng; ++b) {
          const double p0 = 2.0 * std::numbers::pi * b / ng;
          for (int c = 0; c < ng; ++c) {
            const double t1 = std::numbers::pi * (c + 0.5) / ng;
            for (int d = 0; d < ng; ++d) {
              const double p1 = 2.0 * std::numbers::pi * d / ng;
              outer_meas.push_back(
                  MeasurementSettings::general(t0, p0, t1, p1));
            }
          }
        }
      }
    }

    const int workers = std::min<int>(opt.effective_workers(),
                                      static_cast<int>(outer_meas.size()));
    std::vector<detail::TopK> tops(workers, detail::TopK(keep));
    std::vector<long> counts(workers, 0);
    auto run = [&](int w) {
      detail::TopK& top = tops[w];
      long cnt = 0;
      for (std::size_t oi = w; oi < outer_meas.size();
           oi += static_cast<std::size_t>(workers)) {
        const MeasurementSettings& meas = outer_meas[oi];
        if (mode == MeasMode::planar) {
          const double ct = std::cos(meas.theta()), st = std::sin(meas.theta());
          const double s00 = prof.correlation(meas.m0(), meas.m0());
          const double s01 = prof.correlation(meas.m0(), meas.m1());
          const double s11 = prof.correlation(meas.m1(), meas.m1());
          for (int s = 0; s < nsphere; ++s) {
            const double val = detail::planar_value(n, s00, s01, s11, ct, st,
                                                    pa[s], pb[s], pg[s]);
            ++cnt;
            if (val < detail::kBadValue) {
              top.push(val, static_cast<long>(oi) * nsphere + s);
            }
          }
        } else {
          const detail::GeneralGeom ge =
              detail::make_geom(prof, meas.m0(), meas.m1());
          for (int s = 0; s < nsphere; ++s) {
            const double val =
                detail::general_value(n, ge, pa[s], pb[s], pg[s]);
            ++cnt;
            if (val < detail::kBadValue) {
              top.push(val, static_cast<long>(oi) * nsphere + s);
            }
          }
        }
      }
      counts[w] = cnt;
    };
    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
      for (auto& t : pool) t.join();
    }
    for (int w = 0; w < workers; ++w) {
      grid_evals += counts[w];
      for (const auto& c : tops[w].raw()) grid_best.push_back(c);
    }
    std::sort(grid_best.begin(), grid_best.end(),
              detail::CandidateHeapLess{});
    if (grid_best.size() > keep) grid_best.resize(keep);
    if (grid_best.empty() && opt.extra_seeds.empty()) {
      throw std::runtime_error(
          "minimize_witness: every grid point produced a degenerate bound");
    }
  }

  // Refinement: simplex descent from the best grid seeds plus warm starts.
  auto objective = [&](const Eigen::VectorXd& x) {
    return detail::point_value(prof, mode, x);
  };
  std::vector<Eigen::VectorXd> starts;
  for (std::size_t i = 0;
       i < grid_best.size() && i < static_cast<std::size_t>(opt.refine_seeds);
       ++i) {
    const long flat = grid_best[i].flat;
    const long oi = flat / nsphere;
    const long s = flat % nsphere;
    starts.push_back(detail::seed_to_point(
        WitnessParams(pa[s], pb[s], pg[s]), outer_meas[oi]));
  }
  for (const auto& [p, meas] : opt.extra_seeds) {
    starts.push_back(detail::seed_to_point(p, meas));
  }
  if (starts.empty()) {
    throw std::runtime_error("minimize_witness: no usable starting points");
  }

  long evals = grid_evals;
  Eigen::VectorXd best_x = starts.front();
  double best_val = objective(best_x);
  ++evals;
  bool any_converged = false;
  for (const auto& s : starts) {
    bool conv = false;
    auto [x, v] = detail::nelder_mead(objective, s, 0.08, opt.refine_max_evals,
                                      opt.refine_tol, evals, conv);
    any_converged = any_converged || conv;
    if (v < best_val) {
      best_val = v;
      best_x = x;
    }
  }

  auto [bp, bm] = detail::point_to_seed(mode, best_x);
  OptResult res;
  res.best_params = bp;
  res.best_meas = bm;
  res.best_value = witness_expectation(prof, bp, bm);
  res.evaluations = evals;
  res.converged = any_converged;
  for (const auto& c : grid_best) {
    if (c.value <= res.best_value + opt.near_optimal_window) {
      const long oi = c.flat / nsphere;
      const long s = c.flat % nsphere;
      res.near_optimal.push_back(
          {c.value, WitnessParams(pa[s], pb[s], pg[s]), outer_meas[oi]});
    }
  }
  return res;
}

inline OptResult minimize_witness(const SymmetricState& state, MeasMode mode,
                                  const OptimizeOptions& opt = {}) {
  return minimize_witness(correlation_profile(state), mode, opt);
}

// ---------------------------------------------------------------------------
// Minimum eigenvalue of the witness on the symmetric subspace
// ---------------------------------------------------------------------------

struct EigenMinResult {
  double value = 0;
  SymmetricState eigenstate;
};

namespace detail {

/// Pentadiagonal Hermitian bands of a SubspaceOperator.
struct PentaBands {
  Eigen::VectorXd d0;
  Eigen::VectorXcd d1;  // d1(i) = m(i, i-1)
  Eigen::VectorXcd d2;  // d2(i) = m(i, i-2)

  static PentaBands from(const Eigen::MatrixXcd& m) {
    const int d = static_cast<int>(m.rows());
    PentaBands b;
    b.d0.resize(d);
    b.d1 = Eigen::VectorXcd::Zero(d);
    b.d2 = Eigen::VectorXcd::Zero(d);
    for (int i = 0; i < d; ++i) {
      b.d0(i) = m(i, i).real();
      if (i >= 1) b.d1(i) = m(i, i - 1);
      if (i >= 2) b.d2(i) = m(i, i - 2);
    }
    return b;
  }

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    const int d = static_cast<int>(d0.size());
    for (int i = 0; i < d; ++i) {
      Complex acc = d0(i) * x(i);
      if (i >= 1) acc += d1(i) * x(i - 1);
      if (i >= 2) acc += d2(i) * x(i - 2);
      if (i + 1 < d) acc += std::conj(d1(i + 1)) * x(i + 1);
      if (i + 2 < d) acc += std::conj(d2(i + 2)) * x(i + 2);
      y(i) = acc;
    }
  }
};

/// Lanczos with full reorthogonalization for the smallest eigenpair of a
/// pentadiagonal Hermitian matrix. Deterministic start vector.
inline bool lanczos_smallest(const PentaBands& bands, double& value,
                             Eigen::VectorXcd& vec) {
  const int d = static_cast<int>(bands.d0.size());
  const int max_iter = std::min(d, 380);
  std::mt19937_64 rng(0x51a7c05bULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd basis(d, max_iter);
  Eigen::VectorXcd v(d), w(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  v /= v.norm();
  std::vector<double> alpha, beta;
  double scale = 1.0;
  int m = 0;
  for (int j = 0; j < max_iter; ++j) {
    basis.col(j) = v;
    bands.apply(v, w);
    const double a = v.dot(w).real();
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= beta.back() * basis.col(j - 1);
    // two rounds of classical Gram-Schmidt against the whole basis
    for (int r = 0; r < 2; ++r) {
      w -= basis.leftCols(j + 1) *
           (basis.leftCols(j + 1).adjoint() * w).eval();
    }
    const double b = w.norm();
    m = j + 1;
    scale = std::max(scale, std::abs(a) + b);
    const bool breakdown = b < 1e-13 * scale;
    const bool check = breakdown || m == max_iter || (m % 32 == 0 && m >= 32);
    if (check) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta.size() > static_cast<std::size_t>(i) ? beta[i] : 0.0;
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      const double theta = es.eigenvalues()(0);
      const double resid = std::abs(b * es.eigenvectors()(m - 1, 0));
      if (breakdown || resid < 1e-11 * std::max(1.0, scale)) {
        value = theta;
        vec = basis.leftCols(m) * es.eigenvectors().col(0);
        vec /= vec.norm();
        return true;
      }
      if (m == max_iter) return false;
    }
    beta.push_back(b);
    v = w / b;
  }
  return false;
}

}  // namespace detail

/// Smallest eigenvalue of the witness operator on the symmetric subspace
/// and its eigenstate. Dense solve for small dimensions, Lanczos above.
inline EigenMinResult min_eigen_witness(int n, const WitnessParams& p,
                                        const MeasurementSettings& meas) {
  const SubspaceOperator a = witness_operator(n, p, meas);
  const int dim = n + 1;
  if (dim <= 400) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.matrix);
    Eigen::VectorXcd v = es.eigenvectors().col(0);
    v /= v.norm();
    return {es.eigenvalues()(0), SymmetricState(n, std::move(v))};
  }
  const auto bands = detail::PentaBands::from(a.matrix);
  double value = 0;
  Eigen::VectorXcd vec;
  if (detail::lanczos_smallest(bands, value, vec)) {
    return {value, SymmetricState(n, std::move(vec))};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.matrix);
  Eigen::VectorXcd v = es.eigenvectors().col(0);
  v /= v.norm();
  return {es.eigenvalues()(0), SymmetricState(n, std::move(v))};
}

struct EigenOptResult {
  double value = 0;
  WitnessParams params{1, 0, 0};
  MeasurementSettings meas = MeasurementSettings::planar(0);
  SymmetricState eigenstate;
  int rounds = 0;
  bool converged = false;
};

/// Most negative <A> over both the witness parameters and all symmetric
/// states: alternate between optimizing the parameters for the current
/// state and replacing the state by the minimum eigenstate. Each half-step
/// is non-increasing, so the sequence converges.
inline EigenOptResult optimize_min_eigen(int n, MeasMode mode,
                                         const OptimizeOptions& opt = {},
                                         int max_rounds = 40) {
  SymmetricState state = dicke(n, (n + 1) / 2);
  OptimizeOptions round_opt = opt;
  double prev = std::numeric_limits<double>::infinity();
  EigenOptResult out;
  for (int round = 0; round < max_rounds; ++round) {
    const OptResult r = minimize_witness(correlation_profile(state), mode,
                                         round_opt);
    const EigenMinResult em = min_eigen_witness(n, r.best_params, r.best_meas);
    out.value = em.value;
    out.params = r.best_params;
    out.meas = r.best_meas;
    out.eigenstate = em.eigenstate;
    out.rounds = round + 1;
    if (em.value > prev - 1e-9) {
      out.converged = true;
      break;
    }
    prev = em.value;
    state = em.eigenstate;
    // later rounds only polish from the tracked optimum
    round_opt.skip_grid = true;
    round_opt.extra_seeds = {{r.best_params, r.best_meas}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

struct WindowOptions {
  int grid = 512;
  double tol = 1e-4;
};

struct ThetaWindow {
  bool detected = false;
  double lo = 0, hi = 0;
  /// All disjoint negativity intervals found, widest first copied to lo/hi.
  std::vector<std::pair<double, double>> windows;
  /// +1 if the caller's coefficients detect as given, -1 if only their
  /// global negation does (the witness family covers both orientations).
  int orientation = +1;
};

namespace detail {

inline std::vector<std::pair<double, double>> negativity_windows(
    const std::function<double(double)>& f, double lo, double hi, int grid,
    double tol) {
  std::vector<double> xs(grid + 2), vs(grid + 2);
  for (int i = 0; i < grid + 2; ++i) {
    xs[i] = lo + (hi - lo) * i / (grid + 1.0);
    vs[i] = f(xs[i]);
  }
  auto bisect = [&](double a, double fa, double b, double fb) {
    // refine the sign change between a and b
    while (b - a > tol) {
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      if ((fa < 0) == (fm < 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
    }
    return 0.5 * (a + b);
  };
  std::vector<std::pair<double, double>> out;
  int i = 0;
  while (i < grid + 2) {
    if (vs[i] < 0) {
      double wlo = xs[i];
      if (i > 0) wlo = bisect(xs[i - 1], vs[i - 1], xs[i], vs[i]);
      int j = i;
      while (j + 1 < grid + 2 && vs[j + 1] < 0) ++j;
      double whi = xs[j];
      if (j + 1 < grid + 2) whi = bisect(xs[j + 1], vs[j + 1], xs[j], vs[j]);
      out.emplace_back(wlo, whi);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace detail

/// Maximal interval of theta in (0, pi/2) where <A(theta)> < 0 for the given
/// coefficients. Both orientations of the coefficient triple are scanned,
/// since published triples fix only the half-space family, not its sign.
inline ThetaWindow theta_window(const SymmetricState& state,
                                const WitnessParams& params,
                                const WindowOptions& wopt = {}) {
  const CorrelationProfile prof = correlation_profile(state);
  ThetaWindow best;
  for (int orient : {+1, -1}) {
    const WitnessParams p =
        (orient > 0 ? params : params.negated()).normalized();
    auto f = [&](double th) {
      const double v = detail::planar_value(
          prof.n_qubits, prof.correlation({0, 0, 1}, {0, 0, 1}),
          prof.correlation({0, 0, 1}, {std::sin(th), 0, std::cos(th)}),
          prof.correlation({std::sin(th), 0, std::cos(th)},
                           {std::sin(th), 0, std::cos(th)}),
          std::cos(th), std::sin(th), p.alpha, p.beta, p.gamma);
      return v;
    };
    auto windows = detail::negativity_windows(f, 0.0, 0.5 * std::numbers::pi,
                                              wopt.grid, wopt.tol);
    if (windows.empty()) continue;
    auto widest = *std::max_element(
        windows.begin(), windows.end(), [](const auto& a, const auto& b) {
          return a.second - a.first < b.second - b.first;
        });
    const double width = widest.second - widest.first;
    if (!best.detected || width > best.hi - best.lo) {
      best.detected = true;
      best.lo = widest.first;
      best.hi = widest.second;
      best.windows = std::move(windows);
      best.orientation = orient;
    }
  }
  return best;
}

struct ScanRecord {
  double scan_value = 0;
  double min_expectation = 0;
  WitnessParams params{1, 0, 0};
  MeasurementSettings meas = MeasurementSettings::planar(0);
};

namespace detail {

template <typename StateFn>
inline std::vector<ScanRecord> family_scan(StateFn&& make_state,
                                           const std::vector<double>& grid,
                                           MeasMode mode,
                                           const OptimizeOptions& opt) {
  std::vector<double> xs = grid;
  std::sort(xs.begin(), xs.end());
  std::vector<ScanRecord> records;
  records.reserve(xs.size());
  OptimizeOptions o = opt;
  for (const double x : xs) {
    const OptResult r = minimize_witness(
        correlation_profile(make_state(x)), mode, o);
    records.push_back({x, r.best_value, r.best_params, r.best_meas});
    o.extra_seeds = {{r.best_params, r.best_meas}};  // warm start
  }
  return records;
}

}  // namespace detail

/// Per-chi minimum of <A> over witness parameters for spin-squeezed states.
inline std::vector<ScanRecord> chi_scan(int n, const std::vector<double>& grid,
                                        MeasMode mode = MeasMode::general,
                                        const OptimizeOptions& opt = {}) {
  return detail::family_scan([n](double chi) { return spin_squeezed(n, chi); },
                             grid, mode, opt);
}

/// Per-Omega minimum of <A> for the Dicke-GHZ superposition family.
inline std::vector<ScanRecord> omega_scan(int n,
                                          const std::vector<double>& grid,
                                          MeasMode mode = MeasMode::planar,
                                          const OptimizeOptions& opt = {}) {
  if (n < 6) {
    throw std::domain_error("omega_scan: need N >= 6, got N = " +
                            std::to_string(n));
  }
  return detail::family_scan(
      [n](double om) { return dicke_ghz_superposition(n, om); }, grid, mode,
      opt);
}

/// Golden-section polish of a scan minimum around the best grid record.
/// eval(x) re-minimizes the witness at scan coordinate x.
template <typename EvalFn>
inline ScanRecord refine_scan_minimum(const std::vector<ScanRecord>& records,
                                      EvalFn&& eval, int iterations = 30) {
  if (records.empty()) {
    throw std::invalid_argument("refine_scan_minimum: empty scan");
  }
  std::size_t bi = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].min_expectation < records[bi].min_expectation) bi = i;
  }
  double lo = records[bi > 0 ? bi - 1 : bi].scan_value;
  double hi = records[bi + 1 < records.size() ? bi + 1 : bi].scan_value;
  ScanRecord best = records[bi];
  if (hi <= lo) return best;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  ScanRecord r1 = eval(x1), r2 = eval(x2);
  for (int it = 0; it < iterations; ++it) {
    if (r1.min_expectation < r2.min_expectation) {
      hi = x2;
      x2 = x1;
      r2 = r1;
      x1 = hi - inv_phi * (hi - lo);
      r1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      r1 = r2;
      x2 = lo + inv_phi * (hi - lo);
      r2 = eval(x2);
    }
  }
  for (const auto& r : {r1, r2}) {
    if (r.min_expectation < best.min_expectation) best = r;
  }
  return best;
}

}  // namespace symmwit
