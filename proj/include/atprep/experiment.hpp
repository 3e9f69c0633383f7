#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/evolution.hpp"
#include "atprep/lattice.hpp"
#include "atprep/optimize.hpp"
#include "atprep/parallel.hpp"
#include "atprep/pauli.hpp"
#include "atprep/preconditioner.hpp"
#include "atprep/schedule.hpp"
#include "atprep/spectral.hpp"

namespace atprep {

struct sweep_config {
  std::vector<double> taus;
  double dt = 0.01;
  stepper_t stepper = stepper_t::trotter2;
  double dt_max = 0.01;
  int threads = 0;

  void validate() const {
    if (taus.empty()) throw config_error("sweep: empty tau list");
    for (double t : taus)
      if (!std::isfinite(t) || t < 0) throw config_error("sweep: tau values must be finite and >= 0");
    if (!(dt > 0)) throw config_error("sweep: dt must be > 0");
  }
};

struct sweep_row {
  double tau = 0.0;
  double epsilon = 0.0;
  int n_steps = 0;
  double dt = 0.0;
};

struct sweep_result {
  std::vector<sweep_row> rows;  // sorted by tau
  double max_norm_drift = 0.0;  // max |  ||psi|| - 1 | over every evolved column
  int band_rank = 0;
};

// epsilon_AT(tau) over the tau grid: both band projectors once, then one
// independent evolution of the V(0) basis per tau.
inline sweep_result sweep_tau(const pauli_sum<double>& h0, const pauli_sum<double>& h1,
                              const schedule& f, const band_selector& sel, const sweep_config& cfg,
                              int dense_cap = kDenseEigenCap) {
  cfg.validate();
  projector<double> p0 = ground_band_projector(h0, sel, dense_cap);
  projector<double> p1 = ground_band_projector(h1, sel, dense_cap);
  if (p0.rank() != p1.rank())
    throw numerical_error("sweep: band rank differs between the endpoints");

  std::vector<double> taus = cfg.taus;
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  sweep_result out;
  out.band_rank = p0.rank();
  out.rows.resize(taus.size());
  std::vector<double> drifts(taus.size(), 0.0);
  std::vector<std::exception_ptr> errs(taus.size());
  parallel_for(taus.size(), cfg.threads, [&](std::size_t i) {
    try {
      evolution_plan plan = evolution_plan::for_tau(taus[i], cfg.dt, cfg.stepper, cfg.dt_max);
      matrix_t<double> ev = evolve_basis(h0, h1, f, plan, p0.basis, /*threads=*/1);
      for (Eigen::Index c = 0; c < ev.cols(); ++c)
        drifts[i] = std::max(drifts[i], std::abs(ev.col(c).norm() - 1.0));
      out.rows[i] = {taus[i], epsilon_at(p1, ev), plan.n_steps, plan.dt()};
    } catch (...) {
      errs[i] = std::current_exception();
    }
  });
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  for (double d : drifts) out.max_norm_drift = std::max(out.max_norm_drift, d);
  return out;
}

// ---------------------------------------------------------------------- fits

struct fit_result {
  double g = 0.0;       // characteristic time, -1/slope of ln(eps) vs tau
  double sigma_g = 0.0; // standard error propagated from the slope
  double intercept = 0.0;
  double r2 = 0.0;
  int n_points = 0;
  double eps_floor = 0.0, eps_ceil = 0.0;
};

// OLS of ln(eps) against tau over the decaying window eps in (floor, ceil),
// both ends exclusive: saturated points (~1) and noise-floor points would
// otherwise bias the slope.
inline fit_result fit_exponential(const std::vector<sweep_row>& rows, double eps_floor = 1e-12,
                                  double eps_ceil = 0.5) {
  if (!(eps_floor > 0) || !(eps_ceil > eps_floor))
    throw config_error("fit: window must satisfy 0 < floor < ceil");
  std::vector<double> x, y;
  for (const auto& r : rows)
    if (r.epsilon > eps_floor && r.epsilon < eps_ceil) {
      x.push_back(r.tau);
      y.push_back(std::log(r.epsilon));
    }
  const int n = static_cast<int>(x.size());
  if (n < 3)
    throw numerical_error("fit: only " + std::to_string(n) +
                          " points inside the window (need at least 3)");
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw numerical_error("fit: degenerate tau values");
  const double slope = sxy / sxx;
  if (slope >= 0) throw numerical_error("fit: no decay (slope >= 0)");
  const double intercept = my - slope * mx;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    ssr += e * e;
  }
  fit_result out;
  out.g = -1.0 / slope;
  const double var_slope = n > 2 ? ssr / (n - 2) / sxx : 0.0;
  out.sigma_g = std::sqrt(var_slope) / (slope * slope);
  out.intercept = intercept;
  out.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  out.n_points = n;
  out.eps_floor = eps_floor;
  out.eps_ceil = eps_ceil;
  return out;
}

// -------------------------------------------------------------- ratio sweeps

struct ratio_row {
  double ratio = 0.0;
  Eigen::VectorXd alphas;  // preconditioner actually used at this ratio
  double g_fit = std::numeric_limits<double>::quiet_NaN();
  double sigma_g = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double g_tilde = std::numeric_limits<double>::quiet_NaN();
  double delta_norm = std::numeric_limits<double>::quiet_NaN();
  double d_min = std::numeric_limits<double>::quiet_NaN();
  double D_max = std::numeric_limits<double>::quiet_NaN();
  std::vector<sweep_row> sweep;
  std::string status = "ok";  // or the first numerical failure for this ratio
};

enum class approach_t { none, delta_norm, g_tilde };

inline const char* approach_name(approach_t a) {
  switch (a) {
    case approach_t::none: return "none";
    case approach_t::delta_norm: return "delta-norm";
    default: return "g-tilde";
  }
}

inline approach_t approach_from_name(const std::string& name) {
  if (name == "none") return approach_t::none;
  if (name == "delta-norm") return approach_t::delta_norm;
  if (name == "g-tilde") return approach_t::g_tilde;
  throw config_error("unknown approach '" + name + "' (expected none, delta-norm or g-tilde)");
}

struct ratio_sweep_config {
  std::vector<double> ratios;  // jx / jz per point
  approach_t approach = approach_t::none;
  preconditioner base_m;  // used directly for approach none; search shape otherwise
  optimize_spec opt;
  sweep_config sweep;
  band_selector sel;
  s_grid grid;
  double fit_floor = 1e-12, fit_ceil = 0.5;
};

// For each coupling ratio: pick M per the approach, profile the gap, sweep
// tau and fit. A numerical failure marks that ratio's row and the sweep
// continues; configuration errors still propagate.
inline std::vector<ratio_row> sweep_coupling_ratio(lattice_spec base, const schedule& f,
                                                   const ratio_sweep_config& cfg,
                                                   int dense_cap = kDenseEigenCap) {
  if (cfg.ratios.empty()) throw config_error("ratio sweep: empty ratio list");
  std::vector<ratio_row> rows;
  for (double ratio : cfg.ratios) {
    if (!std::isfinite(ratio) || ratio < 0) throw config_error("ratio sweep: ratios must be >= 0");
    ratio_row row;
    row.ratio = ratio;
    lattice_spec lat = base;
    lat.jx = ratio * lat.jz;
    try {
      const pauli_sum<double> h1 = build_heisenberg_xz<double>(lat);
      preconditioner m = cfg.base_m;
      if (static_cast<int>(m.alphas.size()) != h1.qubits())
        throw config_error("ratio sweep: preconditioner size does not match register");
      if (cfg.approach == approach_t::delta_norm) {
        optimize_spec sp = cfg.opt;
        sp.objective = optimize_spec::objective_t::delta_norm;
        sp.translation_invariant = m.translation_invariant;
        m = minimize_delta_norm(h1, sp, dense_cap).best;
      } else if (cfg.approach == approach_t::g_tilde) {
        optimize_spec sp = cfg.opt;
        sp.objective = optimize_spec::objective_t::g_tilde;
        sp.translation_invariant = m.translation_invariant;
        m = minimize_g_tilde(h1, f, cfg.sel, cfg.grid, sp, dense_cap).best;
      }
      row.alphas = m.alphas;
      const pauli_sum<double> h0 = build_h0<double>(h1, m);
      gap_profile_result prof = gap_profile(h0, h1, f, cfg.sel, cfg.grid, cfg.sweep.threads, dense_cap);
      row.g_tilde = prof.g_tilde;
      row.delta_norm = prof.delta_norm;
      row.d_min = prof.d_min;
      row.D_max = prof.D_max;
      sweep_result sw = sweep_tau(h0, h1, f, cfg.sel, cfg.sweep, dense_cap);
      row.sweep = sw.rows;
      fit_result fit = fit_exponential(sw.rows, cfg.fit_floor, cfg.fit_ceil);
      row.g_fit = fit.g;
      row.sigma_g = fit.sigma_g;
      row.r2 = fit.r2;
    } catch (const numerical_error& e) {
      row.status = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace atprep
