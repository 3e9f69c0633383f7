#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "atprep/errors.hpp"
#include "atprep/pauli.hpp"

namespace atprep {

// Diagonal preconditioner <i|M|i> = sum_j alpha_j bin_j(i), bit j = qubit j.
struct preconditioner {
  Eigen::VectorXd alphas;
  bool translation_invariant = false;

  static preconditioner zero(int L) {
    return {Eigen::VectorXd::Zero(L), false};
  }
  static preconditioner uniform(int L, double a) {
    return {Eigen::VectorXd::Constant(L, a), true};
  }

  int qubits() const { return static_cast<int>(alphas.size()); }

  void validate() const {
    if (alphas.size() < 1) throw config_error("preconditioner: empty alpha vector");
    for (Eigen::Index j = 0; j < alphas.size(); ++j)
      if (!std::isfinite(alphas[j])) throw config_error("preconditioner: non-finite alpha");
    if (translation_invariant)
      for (Eigen::Index j = 1; j < alphas.size(); ++j)
        if (alphas[j] != alphas[0])
          throw config_error("preconditioner: translation invariance requires equal alphas");
  }
};

inline double preconditioner_diagonal(const preconditioner& m, std::uint64_t i) {
  const int L = m.qubits();
  if (i >> L) throw config_error("preconditioner_diagonal: basis index out of range");
  double v = 0;
  for (int j = 0; j < L; ++j)
    if ((i >> j) & 1) v += m.alphas[j];
  return v;
}

template <typename Scalar = double>
real_vector_t<Scalar> preconditioner_vector(const preconditioner& m) {
  const std::uint64_t dim = std::uint64_t{1} << m.qubits();
  real_vector_t<Scalar> v(static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < dim; ++i)
    v[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(preconditioner_diagonal(m, i));
  return v;
}

// M = sum_j alpha_j (I - Z_j)/2: one identity term plus one Z term per qubit.
template <typename Scalar = double>
pauli_sum<Scalar> preconditioner_pauli(const preconditioner& m) {
  m.validate();
  const int L = m.qubits();
  pauli_sum<Scalar> out(L);
  const std::string id(static_cast<std::size_t>(L), 'I');
  for (int j = 0; j < L; ++j) {
    if (m.alphas[j] == 0.0) continue;
    out.add(id, static_cast<Scalar>(0.5 * m.alphas[j]));
    std::string z = id;
    z[static_cast<std::size_t>(j)] = 'Z';
    out.add(z, static_cast<Scalar>(-0.5 * m.alphas[j]));
  }
  return out;
}

// H0 = diag(H1) + M, diagonal in the computational basis.
template <typename Scalar = double>
pauli_sum<Scalar> build_h0(const pauli_sum<Scalar>& h1, const preconditioner& m) {
  if (m.qubits() != h1.qubits())
    throw config_error("build_h0: preconditioner size does not match register");
  return diagonal_part(h1) + preconditioner_pauli<Scalar>(m);
}

}  // namespace atprep
