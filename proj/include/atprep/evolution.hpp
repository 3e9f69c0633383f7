#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/parallel.hpp"
#include "atprep/pauli.hpp"
#include "atprep/schedule.hpp"
#include "atprep/spectral.hpp"

namespace atprep {

enum class stepper_t { trotter2, exact_step };

inline const char* stepper_name(stepper_t s) {
  return s == stepper_t::trotter2 ? "trotter2" : "exact-step";
}

inline stepper_t stepper_from_name(const std::string& name) {
  if (name == "trotter2") return stepper_t::trotter2;
  if (name == "exact-step") return stepper_t::exact_step;
  throw config_error("unknown stepper '" + name + "' (expected trotter2 or exact-step)");
}

struct evolution_plan {
  double tau = 0.0;
  int n_steps = 1;
  stepper_t stepper = stepper_t::trotter2;
  double dt_max = 0.01;

  double dt() const { return tau / n_steps; }

  // Smallest step count with tau/n <= dt_target (up to roundoff slack).
  static evolution_plan for_tau(double tau, double dt_target, stepper_t st = stepper_t::trotter2,
                                double dt_max = 0.01) {
    if (!std::isfinite(tau) || tau < 0) throw config_error("evolution: tau must be finite and >= 0");
    if (!(dt_target > 0)) throw config_error("evolution: dt must be > 0");
    evolution_plan p;
    p.tau = tau;
    p.n_steps = tau > 0 ? std::max(1, static_cast<int>(std::ceil(tau / dt_target * (1.0 - 1e-12)))) : 1;
    p.stepper = st;
    p.dt_max = dt_max;
    return p;
  }

  void validate() const {
    if (!std::isfinite(tau) || tau < 0) throw config_error("evolution: tau must be finite and >= 0");
    if (n_steps < 1) throw config_error("evolution: n_steps must be >= 1");
    if (!(dt_max > 0)) throw config_error("evolution: dt_max must be > 0");
    if (tau > 0 && dt() > dt_max * (1.0 + 1e-12))
      throw config_error("evolution: step size " + std::to_string(dt()) + " exceeds dt_max " +
                         std::to_string(dt_max));
  }
};

// exp(-i theta P) psi for a single Pauli string: P^2 = 1, so the rotation is
// cos(theta) - i sin(theta) P, applied pairwise in place.
template <typename Scalar>
void apply_pauli_rotation(vector_t<Scalar>& psi, const string_masks& m, Scalar theta) {
  using C = complex_t<Scalar>;
  const std::uint64_t dim = static_cast<std::uint64_t>(psi.size());
  const Scalar c = std::cos(theta), s = std::sin(theta);
  if (m.x == 0) {  // I/Z string: eigenphases only
    const C e_minus(c, -s), e_plus(c, s);
    for (std::uint64_t i = 0; i < dim; ++i)
      psi[static_cast<Eigen::Index>(i)] *= (std::popcount(i & m.z) & 1) ? e_plus : e_minus;
    return;
  }
  const C mis(0, -s);
  for (std::uint64_t i = 0; i < dim; ++i) {
    const std::uint64_t j = i ^ m.x;
    if (j < i) continue;
    const C li = string_phase<Scalar>(m, i);  // P|i> = li |j>
    const C lj = string_phase<Scalar>(m, j);
    const C pi = psi[static_cast<Eigen::Index>(i)], pj = psi[static_cast<Eigen::Index>(j)];
    psi[static_cast<Eigen::Index>(i)] = c * pi + mis * lj * pj;
    psi[static_cast<Eigen::Index>(j)] = c * pj + mis * li * pi;
  }
}

namespace detail {

// Interpolation-ready split of H(s) = (1-f) H0 + f H1 into the diagonal part A
// (a dense 2^L vector) and off-diagonal strings grouped into mutually
// commuting layers (greedy, in canonical term order).
template <typename Scalar>
struct trotter_context {
  real_vector_t<Scalar> a0, a1;
  struct offterm {
    string_masks m;
    Scalar c0{}, c1{};
    Scalar at(Scalar f) const { return (Scalar(1) - f) * c0 + f * c1; }
  };
  std::vector<std::vector<offterm>> layers;

  trotter_context(const pauli_sum<Scalar>& h0, const pauli_sum<Scalar>& h1) {
    a0 = diagonal_vector(diagonal_part(h0));
    a1 = diagonal_vector(diagonal_part(h1));
    const pauli_sum<Scalar> off0 = offdiagonal_part(h0);
    const pauli_sum<Scalar> off1 = offdiagonal_part(h1);
    std::vector<std::pair<std::string, std::pair<Scalar, Scalar>>> merged;
    for (const auto& t : off0.terms()) merged.push_back({t.letters, {t.coeff, Scalar(0)}});
    for (const auto& t : off1.terms()) {
      auto it = std::lower_bound(merged.begin(), merged.end(), t.letters,
                                 [](const auto& a, const std::string& l) { return a.first < l; });
      if (it != merged.end() && it->first == t.letters)
        it->second.second = t.coeff;
      else
        merged.insert(it, {t.letters, {Scalar(0), t.coeff}});
    }
    std::vector<std::vector<std::string>> layer_letters;
    for (const auto& [letters, cc] : merged) {
      std::size_t placed = layer_letters.size();
      for (std::size_t l = 0; l < layer_letters.size(); ++l) {
        bool ok = true;
        for (const auto& other : layer_letters[l])
          if (!strings_commute(letters, other)) {
            ok = false;
            break;
          }
        if (ok) {
          placed = l;
          break;
        }
      }
      if (placed == layer_letters.size()) {
        layer_letters.emplace_back();
        layers.emplace_back();
      }
      layer_letters[placed].push_back(letters);
      layers[placed].push_back({masks_of(letters), cc.first, cc.second});
    }
  }

  void apply_diag_half(vector_t<Scalar>& psi, Scalar f, Scalar half_dt) const {
    using C = complex_t<Scalar>;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      const Scalar th = half_dt * ((Scalar(1) - f) * a0[i] + f * a1[i]);
      psi[i] *= C(std::cos(th), -std::sin(th));
    }
  }

  void apply_layer(vector_t<Scalar>& psi, const std::vector<offterm>& layer, Scalar f, Scalar dt) const {
    for (const auto& t : layer) {
      const Scalar th = dt * t.at(f);
      if (th != Scalar(0)) apply_pauli_rotation(psi, t.m, th);
    }
  }

  // Strang-symmetric step at fixed f: A/2, then the B layers palindromically
  // (exact within a layer since its strings commute), then A/2.
  void step(vector_t<Scalar>& psi, Scalar f, Scalar dt) const {
    apply_diag_half(psi, f, dt / 2);
    const std::size_t n = layers.size();
    if (n == 1) {
      apply_layer(psi, layers[0], f, dt);
    } else if (n > 1) {
      for (std::size_t l = 0; l + 1 < n; ++l) apply_layer(psi, layers[l], f, dt / 2);
      apply_layer(psi, layers[n - 1], f, dt);
      for (std::size_t l = n - 1; l-- > 0;) apply_layer(psi, layers[l], f, dt / 2);
    }
    apply_diag_half(psi, f, dt / 2);
  }
};

}  // namespace detail

// Integrates the interpolated evolution over s in [0, 1] with the midpoint
// rule: step k uses f((k - 1/2)/n). The result is not renormalized; any norm
// drift is part of the numerical error budget and is audited by callers.
template <typename Scalar = double>
vector_t<Scalar> evolve(const pauli_sum<Scalar>& h0, const pauli_sum<Scalar>& h1, const schedule& f,
                        const evolution_plan& plan, vector_t<Scalar> psi) {
  if (h0.qubits() != h1.qubits()) throw config_error("evolve: register size mismatch");
  plan.validate();
  const std::uint64_t dim = std::uint64_t{1} << h0.qubits();
  if (psi.size() != static_cast<Eigen::Index>(dim))
    throw numerical_error("evolve: state dimension mismatch");
  if (std::abs(psi.norm() - Scalar(1)) > Scalar(1e-8))
    throw numerical_error("evolve: input state is not normalized");
  if (plan.tau == 0) return psi;

  const Scalar dt = static_cast<Scalar>(plan.dt());
  const int n = plan.n_steps;
  if (plan.stepper == stepper_t::trotter2) {
    detail::trotter_context<Scalar> ctx(h0, h1);
    for (int k = 1; k <= n; ++k) {
      const Scalar fs = static_cast<Scalar>(f((k - 0.5) / n));
      ctx.step(psi, fs, dt);
    }
  } else {
    if (h0.qubits() > kDenseQubitCap)
      throw numerical_error("exact-step: register too large for dense eigensolves");
    const matrix_t<Scalar> m0 = to_matrix(h0), m1 = to_matrix(h1);
    for (int k = 1; k <= n; ++k) {
      const Scalar fs = static_cast<Scalar>(f((k - 0.5) / n));
      auto [ev, U] = eigensystem<Scalar>((Scalar(1) - fs) * m0 + fs * m1);
      vector_t<Scalar> y = U.adjoint() * psi;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Scalar th = dt * ev[i];
        y[i] *= complex_t<Scalar>(std::cos(th), -std::sin(th));
      }
      psi = U * y;
    }
  }
  return psi;
}

// ------------------------------------------------------------------ projectors

template <typename Scalar = double>
struct projector {
  matrix_t<Scalar> basis;  // orthonormal columns spanning the band
  int rank() const { return static_cast<int>(basis.cols()); }
  vector_t<Scalar> project(const vector_t<Scalar>& v) const { return basis * (basis.adjoint() * v); }
  matrix_t<Scalar> matrix() const { return basis * basis.adjoint(); }
};

template <typename Scalar = double>
projector<Scalar> ground_band_projector(const pauli_sum<Scalar>& h, const band_selector& sel,
                                        int dense_cap = kDenseEigenCap) {
  sel.validate();
  if (h.qubits() <= dense_cap) {
    auto [ev, U] = eigensystem(to_matrix(h));
    Eigen::VectorXd evd = ev.template cast<double>();
    const double h_norm = std::max(std::abs(evd[0]), std::abs(evd[evd.size() - 1]));
    band_info band = select_band(evd, sel, h_norm);
    projector<Scalar> p;
    p.basis.resize(U.rows(), static_cast<Eigen::Index>(band.indices.size()));
    for (std::size_t c = 0; c < band.indices.size(); ++c)
      p.basis.col(static_cast<Eigen::Index>(c)) = U.col(band.indices[c]);
    return p;
  }
  if (sel.mode != band_selector::mode_t::lowest_k)
    throw numerical_error("projector: energy-window selection needs the dense path");
  const std::uint64_t dim = std::uint64_t{1} << h.qubits();
  const int want = static_cast<int>(std::min<std::uint64_t>(sel.k + 4, dim));
  auto ritz = lanczos_lowest(h, want);
  double h_norm = 0;
  for (const auto& t : h.terms()) h_norm += std::abs(t.coeff);
  band_info band = select_band(ritz.values.template cast<double>(), sel, h_norm);
  projector<Scalar> p;
  p.basis.resize(ritz.vectors.rows(), static_cast<Eigen::Index>(band.indices.size()));
  for (std::size_t c = 0; c < band.indices.size(); ++c)
    p.basis.col(static_cast<Eigen::Index>(c)) = ritz.vectors.col(band.indices[c]);
  return p;
}

// --------------------------------------------------------------- error metrics

// 1 - |<a|b>|^2 / (|a|^2 |b|^2); insensitive to norms and global phases.
template <typename Scalar>
Scalar infidelity(const vector_t<Scalar>& a, const vector_t<Scalar>& b) {
  if (a.size() != b.size()) throw numerical_error("infidelity: dimension mismatch");
  const Scalar na = a.squaredNorm(), nb = b.squaredNorm();
  if (na == Scalar(0) || nb == Scalar(0)) throw numerical_error("infidelity: zero state");
  const Scalar ov = std::norm((a.adjoint() * b)(0, 0));
  return std::max(Scalar(0), Scalar(1) - ov / (na * nb));
}

// Largest singular value of (1 - P1) applied to the evolved band columns,
// via the k x k Gram matrix. Clamped to [0, 1] against roundoff.
template <typename Scalar = double>
Scalar epsilon_at(const projector<Scalar>& p1, const matrix_t<Scalar>& evolved) {
  if (evolved.rows() != p1.basis.rows()) throw numerical_error("epsilon_at: dimension mismatch");
  matrix_t<Scalar> g = evolved - p1.basis * (p1.basis.adjoint() * evolved);
  Eigen::SelfAdjointEigenSolver<matrix_t<Scalar>> es(g.adjoint() * g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("epsilon_at: Gram eigensolve failed");
  const Scalar top = es.eigenvalues()[es.eigenvalues().size() - 1];
  return std::clamp(std::sqrt(std::max(Scalar(0), top)), Scalar(0), Scalar(1));
}

// Evolves every column of an orthonormal basis; columns are independent runs.
template <typename Scalar = double>
matrix_t<Scalar> evolve_basis(const pauli_sum<Scalar>& h0, const pauli_sum<Scalar>& h1,
                              const schedule& f, const evolution_plan& plan,
                              const matrix_t<Scalar>& basis, int threads = 0) {
  matrix_t<Scalar> out(basis.rows(), basis.cols());
  const std::size_t cols = static_cast<std::size_t>(basis.cols());
  std::vector<std::exception_ptr> errs(cols);
  parallel_for(cols, threads, [&](std::size_t c) {
    try {
      out.col(static_cast<Eigen::Index>(c)) =
          evolve(h0, h1, f, plan, vector_t<Scalar>(basis.col(static_cast<Eigen::Index>(c))));
    } catch (...) {
      errs[c] = std::current_exception();
    }
  });
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

// ----------------------------------------------------------------- gate layers

template <typename Scalar = double>
struct diagonal_phase_layer {
  vector_t<Scalar> phases;
  void apply_inplace(vector_t<Scalar>& psi) const {
    if (psi.size() != phases.size()) throw numerical_error("phase layer: dimension mismatch");
    psi.array() *= phases.array();
  }
};

// exp(-i theta M) for the binary-weighted diagonal <i|M|i> = sum_j alpha_j bit_j(i);
// built in O(2^L * L), qubit 0 is the least significant bit.
template <typename Scalar = double>
diagonal_phase_layer<Scalar> phase_gate_layer(const Eigen::VectorXd& alphas, double theta) {
  const int L = static_cast<int>(alphas.size());
  if (L < 1 || L > 63) throw config_error("phase layer: need between 1 and 63 qubits");
  const std::uint64_t dim = std::uint64_t{1} << L;
  diagonal_phase_layer<Scalar> layer;
  layer.phases.resize(static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < dim; ++i) {
    double m = 0;
    for (int j = 0; j < L; ++j)
      if (i >> j & 1) m += alphas[j];
    const Scalar th = static_cast<Scalar>(theta * m);
    layer.phases[static_cast<Eigen::Index>(i)] = complex_t<Scalar>(std::cos(th), -std::sin(th));
  }
  return layer;
}

}  // namespace atprep
