#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/parallel.hpp"
#include "atprep/pauli.hpp"
#include "atprep/schedule.hpp"

namespace atprep {

struct band_selector {
  enum class mode_t { lowest_k, energy_window };
  mode_t mode = mode_t::lowest_k;
  int k = 1;
  double window_lo = 0.0, window_hi = 0.0;
  // < 0 means automatic: 1e-9 * ||H(s)||
  double degeneracy_tol = -1.0;

  double tol_for(double h_norm) const {
    return degeneracy_tol >= 0.0 ? degeneracy_tol : 1e-9 * h_norm;
  }

  void validate() const {
    if (mode == mode_t::lowest_k) {
      if (k < 1) throw config_error("band: k must be >= 1");
    } else if (!(window_lo <= window_hi)) {
      throw config_error("band: energy window bounds out of order");
    }
  }
};

struct spectral_snapshot {
  double s = 0.0;
  Eigen::VectorXd eigenvalues;  // sorted; full spectrum on the dense path
  std::vector<int> band_indices;
  double d = 0.0;  // gap between the band and the rest, min(d+, d-)
  double D = 0.0;  // bandwidth
};

struct s_grid {
  int points = 51;
  double refine_tol = 1e-3;
  void validate() const {
    if (points < 2) throw config_error("grid: needs at least 2 points");
    if (!(refine_tol > 0)) throw config_error("grid: refine_tol must be > 0");
  }
};

struct gap_profile_result {
  std::vector<spectral_snapshot> snapshots;
  double d_min = 0.0, D_max = 0.0;
  double delta_norm = 0.0;
  double g_tilde = 0.0;
};

// ---------------------------------------------------------------- eigensolvers

template <typename Scalar>
real_vector_t<Scalar> spectrum(const matrix_t<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<matrix_t<Scalar>> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("dense eigensolver failed");
  return es.eigenvalues();
}

template <typename Scalar>
std::pair<real_vector_t<Scalar>, matrix_t<Scalar>> eigensystem(const matrix_t<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<matrix_t<Scalar>> es(m);
  if (es.info() != Eigen::Success) throw numerical_error("dense eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

template <typename Scalar = double>
struct ritz_result {
  real_vector_t<Scalar> values;
  matrix_t<Scalar> vectors;
};

// Lanczos with full reorthogonalization for the lowest n_pairs eigenpairs of a
// Hermitian Pauli sum, matrix-free. Deterministic for a fixed seed.
template <typename Scalar = double>
ritz_result<Scalar> lanczos_lowest(const pauli_sum<Scalar>& h, int n_pairs,
                                   Scalar tol = Scalar(1e-10), std::uint64_t seed = 0x9e3779b97f4a7c15ull) {
  const std::uint64_t dim = std::uint64_t{1} << h.qubits();
  if (n_pairs < 1 || static_cast<std::uint64_t>(n_pairs) > dim)
    throw numerical_error("lanczos: invalid pair count");
  const int m_max = static_cast<int>(std::min<std::uint64_t>(dim, std::max(4 * n_pairs + 28, 64)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto random_vec = [&] {
    vector_t<Scalar> v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v[i] = complex_t<Scalar>(static_cast<Scalar>(gauss(rng)), static_cast<Scalar>(gauss(rng)));
    return v;
  };

  matrix_t<Scalar> V(static_cast<Eigen::Index>(dim), m_max);
  std::vector<Scalar> alpha, beta;  // beta[j] couples j and j+1
  auto reorthogonalize = [&](vector_t<Scalar>& w, int cols) {
    for (int pass = 0; pass < 2; ++pass)
      for (int c = 0; c < cols; ++c) w -= (V.col(c).adjoint() * w)(0, 0) * V.col(c);
  };

  vector_t<Scalar> v = random_vec();
  v.normalize();
  V.col(0) = v;
  int m = 0;
  Scalar scale = Scalar(1);
  for (const auto& t : h.terms()) scale += std::abs(t.coeff);

  for (int j = 0; j < m_max; ++j) {
    vector_t<Scalar> w = atprep::apply(h, vector_t<Scalar>(V.col(j)));
    Scalar a = (V.col(j).adjoint() * w)(0, 0).real();
    alpha.push_back(a);
    m = j + 1;

    // converged? check residuals of the wanted Ritz pairs
    if (m >= n_pairs) {
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> T =
          Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(T);
      if (es.info() != Eigen::Success) throw numerical_error("lanczos: tridiagonal solve failed");
      // residual estimate |beta_m * u[m-1]| needs the next beta; compute it below
      w -= a * V.col(j);
      reorthogonalize(w, m);
      Scalar b = w.norm();
      bool done = true;
      for (int p = 0; p < n_pairs && done; ++p)
        if (std::abs(b * es.eigenvectors()(m - 1, p)) > tol * scale) done = false;
      if (done || m == static_cast<int>(dim) || j + 1 == m_max) {
        ritz_result<Scalar> out;
        out.values = es.eigenvalues().head(n_pairs);
        out.vectors = V.leftCols(m) * es.eigenvectors().leftCols(n_pairs);
        for (int p = 0; p < n_pairs; ++p) out.vectors.col(p).normalize();
        if (!done)
          throw numerical_error("lanczos: no convergence after " + std::to_string(m) + " iterations");
        return out;
      }
      if (j + 1 < m_max) {
        if (b < Scalar(1e-14) * scale) {  // invariant subspace: restart direction
          vector_t<Scalar> r = random_vec();
          reorthogonalize(r, m);
          Scalar rn = r.norm();
          if (rn < Scalar(1e-12)) throw numerical_error("lanczos: restart failed");
          V.col(j + 1) = r / rn;
          beta.push_back(Scalar(0));
        } else {
          V.col(j + 1) = w / b;
          beta.push_back(b);
        }
      }
    } else {
      w -= a * V.col(j);
      if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * V.col(j - 1);
      reorthogonalize(w, m);
      Scalar b = w.norm();
      if (b < Scalar(1e-14) * scale) {
        vector_t<Scalar> r = random_vec();
        reorthogonalize(r, m);
        V.col(j + 1) = r / r.norm();
        beta.push_back(Scalar(0));
      } else {
        V.col(j + 1) = w / b;
        beta.push_back(b);
      }
    }
  }
  throw numerical_error("lanczos: no convergence");
}

inline constexpr int kDenseEigenCap = 10;  // dense eigensolvers up to 2^10

template <typename Scalar = double>
Scalar operator_norm(const pauli_sum<Scalar>& h, int dense_cap = kDenseEigenCap) {
  if (h.size() == 0) return Scalar(0);
  if (h.qubits() <= dense_cap) {
    real_vector_t<Scalar> ev = spectrum(to_matrix(h));
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  }
  Scalar lo = lanczos_lowest(h, 1).values[0];
  Scalar hi = -lanczos_lowest(Scalar(-1) * h, 1).values[0];
  return std::max(std::abs(lo), std::abs(hi));
}

// ---------------------------------------------------------------- band selection

struct band_info {
  std::vector<int> indices;
  double d = 0.0, D = 0.0;
};

// Selects the band and verifies it is separated from the rest by more than the
// degeneracy tolerance; a boundary inside a level (or a closed gap) is an error.
inline band_info select_band(const Eigen::VectorXd& ev, const band_selector& sel, double h_norm,
                             const std::string& context = "") {
  sel.validate();
  const int dim = static_cast<int>(ev.size());
  const double inf = std::numeric_limits<double>::infinity();
  const double tol = sel.tol_for(h_norm);
  band_info out;
  int lo = 0, hi = -1;  // inclusive index range
  if (sel.mode == band_selector::mode_t::lowest_k) {
    if (sel.k > dim) throw numerical_error("band: k exceeds spectrum size" + context);
    lo = 0;
    hi = sel.k - 1;
  } else {
    while (lo < dim && ev[lo] < sel.window_lo) ++lo;
    hi = lo - 1;
    while (hi + 1 < dim && ev[hi + 1] <= sel.window_hi) ++hi;
    if (hi < lo) throw numerical_error("band: empty energy window" + context);
  }
  double d_minus = lo > 0 ? ev[lo] - ev[lo - 1] : inf;
  double d_plus = hi + 1 < dim ? ev[hi + 1] - ev[hi] : inf;
  out.d = std::min(d_minus, d_plus);
  if (!(out.d > tol)) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "gap closure: band separation d = %.6g is within the degeneracy tolerance %.6g",
                  out.d, tol);
    throw numerical_error(msg + context);
  }
  out.D = ev[hi] - ev[lo];
  out.indices.resize(static_cast<std::size_t>(hi - lo + 1));
  for (int i = lo; i <= hi; ++i) out.indices[static_cast<std::size_t>(i - lo)] = i;
  return out;
}

// ------------------------------------------------------- characteristic times

// W(d, D) = [2^8 (1 + 2D/(pi d))^2 (pi^2/3 + 4/d)]^(7/3)
inline double w_factor(double d, double D) {
  if (!(d > 0)) throw numerical_error("w_factor: d must be > 0");
  if (!(D >= 0)) throw numerical_error("w_factor: D must be >= 0");
  const double pi = std::numbers::pi;
  const double a = 1.0 + 2.0 * D / (pi * d);
  return std::pow(256.0 * a * a * (pi * pi / 3.0 + 4.0 / d), 7.0 / 3.0);
}

// Largest r such that |f(s + rho) - f(s)| < x for all complex |rho| <= r.
// Linear schedules give exactly x. Otherwise bisection on r, testing the
// circle |rho| = r (maximum-modulus principle) by dense sampling.
inline double rho_radius(const schedule& f, double s, double x) {
  if (std::isinf(x)) return std::numeric_limits<double>::infinity();
  if (!(x > 0)) throw numerical_error("rho_radius: threshold must be > 0");
  if (f.is_linear()) return x;

  const std::complex<double> fs = f.eval({s, 0.0});
  const int n_samples = std::max<int>(256, 64 * static_cast<int>(f.coefficients().size()));
  auto circle_max = [&](double r) {
    double mx = 0.0;
    for (int k = 0; k < n_samples; ++k) {
      double th = 2.0 * std::numbers::pi * k / n_samples;
      std::complex<double> z(s + r * std::cos(th), r * std::sin(th));
      mx = std::max(mx, std::abs(f.eval(z) - fs));
    }
    return mx;
  };

  double lo = 0.0, hi = std::max(x, 1e-6);
  while (circle_max(hi) < x) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return hi;  // schedule is flat on any reachable scale
  }
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    (circle_max(mid) < x ? lo : hi) = mid;
  }
  return lo;
}

inline double g_of_s(double d, double D, const schedule& f, double s, double delta_norm) {
  if (delta_norm == 0.0) return 0.0;  // no perturbation: instantaneous preparation
  if (!(delta_norm > 0)) throw numerical_error("g_of_s: delta_norm must be >= 0");
  return 4.0 * w_factor(d, D) / rho_radius(f, s, d / (4.0 * delta_norm));
}

// Closed form for linear schedules (Eq. form: 16 (||Delta||/d_min) W).
inline double g_tilde_linear(double d_min, double D_max, double delta_norm) {
  if (delta_norm == 0.0) return 0.0;
  if (!(d_min > 0)) throw numerical_error("g_tilde: gap closure (d_min <= 0)");
  return 16.0 * (delta_norm / d_min) * w_factor(d_min, D_max);
}

// General path: 4 W(d_min, D_max) / inf_s rho(s, d_min / (4||Delta||)).
inline double g_tilde_general(const schedule& f, double d_min, double D_max, double delta_norm,
                              const std::vector<double>& s_points) {
  if (delta_norm == 0.0) return 0.0;
  if (!(d_min > 0)) throw numerical_error("g_tilde: gap closure (d_min <= 0)");
  if (s_points.empty()) throw numerical_error("g_tilde: empty s grid");
  const double x = d_min / (4.0 * delta_norm);
  double rho_inf = std::numeric_limits<double>::infinity();
  for (double s : s_points) rho_inf = std::min(rho_inf, rho_radius(f, s, x));
  return 4.0 * w_factor(d_min, D_max) / rho_inf;
}

// ---------------------------------------------------------------- gap profile

namespace detail {

// Golden-section extremum refinement; phi is evaluated through a snapshot
// functor so gap-closure checks also run at every refined point. An iteration
// that improved nothing carries no convergence information (the bracket may
// still be closing in on an unresolved narrow feature, e.g. an avoided
// crossing a few 1e-8 wide), so only a nonzero relative improvement below
// refine_tol terminates early; otherwise the bracket shrinks to 1e-12.
template <typename Phi>
std::pair<double, double> golden_refine(Phi&& phi, double a, double b, double refine_tol, bool maximize) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  auto eval = [&](double s) { return maximize ? -phi(s) : phi(s); };
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = eval(c), fd = eval(d);
  double best_s = fc <= fd ? c : d;
  double best = std::min(fc, fd);
  for (int iter = 0; iter < 200 && (b - a) > 1e-12; ++iter) {
    double prev = best;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = eval(d);
    }
    if (fc <= fd && fc < best) best = fc, best_s = c;
    if (fd < fc && fd < best) best = fd, best_s = d;
    const double change = prev - best;
    if (iter >= 12 && change > 0 && change <= refine_tol * std::max(std::abs(best), 1e-300)) break;
  }
  return {best_s, maximize ? -best : best};
}

}  // namespace detail

// Profile of the tracked band along the schedule. Dense eigensolves for
// L <= dense_cap; otherwise matrix-free Lanczos with band-size + 4 Ritz pairs
// (lowest-k selection only on that path).
inline gap_profile_result gap_profile(const pauli_sum<double>& h0, const pauli_sum<double>& h1,
                                      const schedule& f, const band_selector& sel, const s_grid& grid,
                                      int threads = 0, int dense_cap = kDenseEigenCap) {
  if (h0.qubits() != h1.qubits()) throw config_error("gap_profile: register size mismatch");
  sel.validate();
  grid.validate();
  const bool dense = h0.qubits() <= dense_cap;
  if (!dense && sel.mode != band_selector::mode_t::lowest_k)
    throw numerical_error("gap_profile: energy-window selection needs the dense path");

  std::optional<matrix_t<double>> m0, m1;
  if (dense) {
    m0 = to_matrix(h0);
    m1 = to_matrix(h1);
  }
  double coeff_norm0 = 0, coeff_norm1 = 0;
  for (const auto& t : h0.terms()) coeff_norm0 += std::abs(t.coeff);
  for (const auto& t : h1.terms()) coeff_norm1 += std::abs(t.coeff);

  auto snapshot_at = [&](double s) {
    const double fs = f(s);
    spectral_snapshot snap;
    snap.s = s;
    double h_norm = 0;
    if (dense) {
      matrix_t<double> hs = (1.0 - fs) * *m0 + fs * *m1;
      snap.eigenvalues = spectrum(hs);
      h_norm = std::max(std::abs(snap.eigenvalues[0]),
                        std::abs(snap.eigenvalues[snap.eigenvalues.size() - 1]));
    } else {
      pauli_sum<double> hs = (1.0 - fs) * h0 + fs * h1;
      int want = sel.k + 4;
      auto ritz = lanczos_lowest(hs, static_cast<int>(std::min<std::uint64_t>(
                                         want, std::uint64_t{1} << h0.qubits())));
      snap.eigenvalues = ritz.values;
      h_norm = (1.0 - fs) * coeff_norm0 + fs * coeff_norm1;  // upper bound for the auto tolerance
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, " at s = %.12g", s);
    band_info band = select_band(snap.eigenvalues, sel, h_norm, buf);
    snap.band_indices = std::move(band.indices);
    snap.d = band.d;
    snap.D = band.D;
    return snap;
  };

  const int P = grid.points;
  std::vector<double> ss(static_cast<std::size_t>(P));
  for (int i = 0; i < P; ++i) ss[static_cast<std::size_t>(i)] = static_cast<double>(i) / (P - 1);

  std::vector<spectral_snapshot> snaps(static_cast<std::size_t>(P));
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(P));
  parallel_for(static_cast<std::size_t>(P), threads, [&](std::size_t i) {
    try {
      snaps[i] = snapshot_at(ss[i]);
    } catch (...) {
      errs[i] = std::current_exception();
    }
  });
  for (auto& e : errs)  // deterministic: surface the lowest-s failure
    if (e) std::rethrow_exception(e);

  gap_profile_result out;
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    if (snaps[i].d < snaps[imin].d) imin = i;
    if (snaps[i].D > snaps[imax].D) imax = i;
  }

  auto bracket = [&](std::size_t i) {
    double a = ss[i > 0 ? i - 1 : 0];
    double b = ss[i + 1 < ss.size() ? i + 1 : ss.size() - 1];
    return std::pair{a, b};
  };
  std::vector<spectral_snapshot> extra;
  {
    auto [a, b] = bracket(imin);
    auto [s_star, d_star] = detail::golden_refine([&](double s) { return snapshot_at(s).d; }, a, b,
                                                  grid.refine_tol, false);
    (void)d_star;
    extra.push_back(snapshot_at(s_star));
  }
  {
    auto [a, b] = bracket(imax);
    auto [s_star, D_star] = detail::golden_refine([&](double s) { return snapshot_at(s).D; }, a, b,
                                                  grid.refine_tol, true);
    (void)D_star;
    extra.push_back(snapshot_at(s_star));
  }
  out.snapshots = std::move(snaps);
  for (auto& e : extra) out.snapshots.push_back(std::move(e));
  std::sort(out.snapshots.begin(), out.snapshots.end(),
            [](const spectral_snapshot& x, const spectral_snapshot& y) { return x.s < y.s; });
  out.snapshots.erase(std::unique(out.snapshots.begin(), out.snapshots.end(),
                                  [](const spectral_snapshot& x, const spectral_snapshot& y) {
                                    return x.s == y.s;
                                  }),
                      out.snapshots.end());

  out.d_min = std::numeric_limits<double>::infinity();
  out.D_max = 0.0;
  for (const auto& sn : out.snapshots) {
    out.d_min = std::min(out.d_min, sn.d);
    out.D_max = std::max(out.D_max, sn.D);
  }
  out.delta_norm = operator_norm(h1 - h0, dense_cap);
  out.g_tilde = g_tilde_general(f, out.d_min, out.D_max, out.delta_norm, ss);
  return out;
}

}  // namespace atprep
