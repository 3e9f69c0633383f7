#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/parallel.hpp"
#include "atprep/pauli.hpp"
#include "atprep/preconditioner.hpp"
#include "atprep/schedule.hpp"
#include "atprep/spectral.hpp"

namespace atprep {

struct optimize_spec {
  enum class objective_t { delta_norm, g_tilde };
  objective_t objective = objective_t::g_tilde;
  double bound = -1.0;  // <= 0: automatic, 2 ||H1|| / L
  int grid_points = 9;
  int rounds = 3;
  bool translation_invariant = false;
  int threads = 0;

  void validate() const {
    if (grid_points < 2) throw config_error("optimize: grid_points must be >= 2");
    if (rounds < 0) throw config_error("optimize: rounds must be >= 0");
  }
};

inline const char* objective_name(optimize_spec::objective_t o) {
  return o == optimize_spec::objective_t::delta_norm ? "delta-norm" : "g-tilde";
}

struct optimize_eval {
  Eigen::VectorXd alphas;  // full per-qubit coefficients
  double value = 0.0;
  bool feasible = true;
};

struct optimize_result {
  preconditioner best;
  double best_value = std::numeric_limits<double>::infinity();
  std::string objective;
  std::vector<optimize_eval> trace;  // every fresh evaluation, in search order
  std::size_t n_evaluations() const { return trace.size(); }
};

namespace detail {

// Ties resolve to the smaller l1 norm, then lexicographically; together with
// sequential reduction this makes the search fully deterministic.
inline bool candidate_better(double va, const Eigen::VectorXd& a, double vb, const Eigen::VectorXd& b) {
  if (va != vb) return va < vb;
  const double la = a.lpNorm<1>(), lb = b.lpNorm<1>();
  if (la != lb) return la < lb;
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Axis-grid seeding around the origin followed by coordinate descent with
// window halving. Objective values are computed in parallel batches but
// reduced in candidate order. Infeasible candidates score +inf.
template <typename Objective>
optimize_result coordinate_search(int n_qubits, const optimize_spec& spec, double bound,
                                  Objective&& objective) {
  const int dims = spec.translation_invariant ? 1 : n_qubits;
  const int G = spec.grid_points;
  auto expand = [&](const Eigen::VectorXd& v) {
    preconditioner m;
    m.translation_invariant = spec.translation_invariant;
    m.alphas = spec.translation_invariant ? Eigen::VectorXd::Constant(n_qubits, v[0]).eval() : v;
    return m;
  };

  optimize_result out;
  std::map<std::vector<double>, double> seen;
  Eigen::VectorXd best = Eigen::VectorXd::Zero(dims);
  bool have_best = false;

  auto run_batch = [&](const std::vector<Eigen::VectorXd>& cands) {
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      std::vector<double> key(cands[i].data(), cands[i].data() + dims);
      if (!seen.count(key)) {
        seen.emplace(std::move(key), 0.0);  // reserve; filled below
        fresh.push_back(i);
      }
    }
    std::vector<double> vals(fresh.size());
    std::vector<std::exception_ptr> errs(fresh.size());
    parallel_for(fresh.size(), spec.threads, [&](std::size_t k) {
      try {
        vals[k] = objective(expand(cands[fresh[k]]));
      } catch (const numerical_error&) {
        vals[k] = std::numeric_limits<double>::infinity();
      } catch (...) {
        errs[k] = std::current_exception();
      }
    });
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      const Eigen::VectorXd& v = cands[fresh[k]];
      seen[std::vector<double>(v.data(), v.data() + dims)] = vals[k];
      out.trace.push_back({expand(v).alphas, vals[k], std::isfinite(vals[k])});
    }
    for (const auto& v : cands) {
      const double val = seen.at(std::vector<double>(v.data(), v.data() + dims));
      if (!have_best || candidate_better(val, v, out.best_value, best)) {
        best = v;
        out.best_value = val;
        have_best = true;
      }
    }
  };

  // seeding: the origin plus a grid along each axis
  std::vector<Eigen::VectorXd> seeds;
  seeds.push_back(best);
  for (int d = 0; d < dims; ++d)
    for (int t = 0; t < G; ++t) {
      const double x = -bound + 2.0 * bound * t / (G - 1);
      if (x == 0.0) continue;
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dims);
      v[d] = x;
      seeds.push_back(std::move(v));
    }
  run_batch(seeds);

  for (int r = 0; r < spec.rounds; ++r) {
    const double w = bound / static_cast<double>(1 << (r + 1));
    for (int d = 0; d < dims; ++d) {
      std::vector<Eigen::VectorXd> cands;
      for (int t = 0; t < G; ++t) {
        double x = best[d] - w + 2.0 * w * t / (G - 1);
        x = std::clamp(x, -bound, bound);
        Eigen::VectorXd v = best;
        v[d] = x;
        cands.push_back(std::move(v));
      }
      run_batch(cands);
    }
  }

  if (!std::isfinite(out.best_value))
    throw numerical_error("optimize: every candidate preconditioner in the search region was infeasible");
  out.best = expand(best);
  return out;
}

}  // namespace detail

inline double search_bound(const pauli_sum<double>& h1, const optimize_spec& spec,
                           int dense_cap = kDenseEigenCap) {
  if (spec.bound > 0) return spec.bound;
  return 2.0 * operator_norm(h1, dense_cap) / h1.qubits();
}

// argmin over alpha of ||Delta(alpha)|| = ||offdiag(H1) - M(alpha)||.
inline optimize_result minimize_delta_norm(const pauli_sum<double>& h1, const optimize_spec& spec,
                                           int dense_cap = kDenseEigenCap) {
  spec.validate();
  const double bound = search_bound(h1, spec, dense_cap);
  const pauli_sum<double> off = offdiagonal_part(h1);
  auto obj = [&](const preconditioner& m) {
    return operator_norm(off - preconditioner_pauli<double>(m), dense_cap);
  };
  optimize_result out = detail::coordinate_search(h1.qubits(), spec, bound, obj);
  out.objective = objective_name(optimize_spec::objective_t::delta_norm);
  return out;
}

// argmin over alpha of g_tilde for H0(alpha) = diag(H1) + M(alpha); candidates
// whose band develops a crossing (or any other numerical failure) are
// infeasible rather than fatal.
inline optimize_result minimize_g_tilde(const pauli_sum<double>& h1, const schedule& f,
                                        const band_selector& sel, const s_grid& grid,
                                        const optimize_spec& spec, int dense_cap = kDenseEigenCap) {
  spec.validate();
  const double bound = search_bound(h1, spec, dense_cap);
  auto obj = [&](const preconditioner& m) {
    const pauli_sum<double> h0 = build_h0<double>(h1, m);
    return gap_profile(h0, h1, f, sel, grid, /*threads=*/1, dense_cap).g_tilde;
  };
  optimize_result out = detail::coordinate_search(h1.qubits(), spec, bound, obj);
  out.objective = objective_name(optimize_spec::objective_t::g_tilde);
  return out;
}

}  // namespace atprep
