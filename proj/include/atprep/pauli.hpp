#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "atprep/errors.hpp"

namespace atprep {

template <typename Scalar>
using complex_t = std::complex<Scalar>;
template <typename Scalar>
using vector_t = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using matrix_t = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using real_vector_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline bool is_pauli_letter(char c) { return c == 'I' || c == 'X' || c == 'Y' || c == 'Z'; }

// Bit masks of a letter string. letters[j] acts on qubit j, which is bit j of
// the basis index (least significant bit = qubit 0).
struct string_masks {
  std::uint64_t x = 0;  // X or Y positions
  std::uint64_t z = 0;  // Z or Y positions
  int ny = 0;
};

inline string_masks masks_of(const std::string& letters) {
  string_masks m;
  for (std::size_t j = 0; j < letters.size(); ++j) {
    switch (letters[j]) {
      case 'I': break;
      case 'X': m.x |= std::uint64_t{1} << j; break;
      case 'Y':
        m.x |= std::uint64_t{1} << j;
        m.z |= std::uint64_t{1} << j;
        ++m.ny;
        break;
      case 'Z': m.z |= std::uint64_t{1} << j; break;
      default: throw config_error("invalid Pauli letter '" + std::string(1, letters[j]) + "'");
    }
  }
  return m;
}

// P|i> = lambda(i) |i ^ x>, lambda(i) = i^ny * (-1)^popcount(i & z)
template <typename Scalar>
complex_t<Scalar> string_phase(const string_masks& m, std::uint64_t i) {
  static const complex_t<Scalar> ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  complex_t<Scalar> p = ipow[m.ny & 3];
  if (std::popcount(i & m.z) & 1) p = -p;
  return p;
}

template <typename Scalar = double>
struct pauli_string {
  std::string letters;
  Scalar coeff{};
};

// Hermitian operator as a merged, lexicographically sorted list of weighted
// Pauli strings. Real coefficients keep every stored operator Hermitian.
template <typename Scalar = double>
class pauli_sum {
 public:
  explicit pauli_sum(int n_qubits) : n_(n_qubits) {
    if (n_ < 1 || n_ > 63) throw config_error("qubit count must be in [1, 63]");
  }

  int qubits() const { return n_; }
  const std::vector<pauli_string<Scalar>>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  void add(const std::string& letters, Scalar coeff) {
    if (static_cast<int>(letters.size()) != n_)
      throw config_error("Pauli string length " + std::to_string(letters.size()) +
                         " does not match register size " + std::to_string(n_));
    for (char c : letters)
      if (!is_pauli_letter(c)) throw config_error("invalid Pauli letter '" + std::string(1, c) + "'");
    if (!std::isfinite(static_cast<double>(coeff))) throw config_error("non-finite Pauli coefficient");
    auto it = std::lower_bound(terms_.begin(), terms_.end(), letters,
                               [](const pauli_string<Scalar>& t, const std::string& s) { return t.letters < s; });
    if (it != terms_.end() && it->letters == letters) {
      it->coeff += coeff;
      if (it->coeff == Scalar{0}) terms_.erase(it);
    } else if (coeff != Scalar{0}) {
      terms_.insert(it, pauli_string<Scalar>{letters, coeff});
    }
  }

  Scalar coefficient(const std::string& letters) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), letters,
                               [](const pauli_string<Scalar>& t, const std::string& s) { return t.letters < s; });
    return (it != terms_.end() && it->letters == letters) ? it->coeff : Scalar{0};
  }

  friend pauli_sum operator+(pauli_sum a, const pauli_sum& b) {
    if (a.n_ != b.n_) throw config_error("adding Pauli sums on different register sizes");
    for (const auto& t : b.terms_) a.add(t.letters, t.coeff);
    return a;
  }
  friend pauli_sum operator-(pauli_sum a, const pauli_sum& b) {
    if (a.n_ != b.n_) throw config_error("subtracting Pauli sums on different register sizes");
    for (const auto& t : b.terms_) a.add(t.letters, -t.coeff);
    return a;
  }
  friend pauli_sum operator*(Scalar c, pauli_sum a) {
    if (c == Scalar{0}) return pauli_sum(a.n_);
    for (auto& t : a.terms_) t.coeff *= c;
    return a;
  }

 private:
  int n_;
  std::vector<pauli_string<Scalar>> terms_;
};

inline bool is_diagonal_string(const std::string& letters) {
  return std::all_of(letters.begin(), letters.end(), [](char c) { return c == 'I' || c == 'Z'; });
}

// Subsum of I/Z-only terms; as a matrix this is delta_ij <i|h|j>.
template <typename Scalar>
pauli_sum<Scalar> diagonal_part(const pauli_sum<Scalar>& h) {
  pauli_sum<Scalar> out(h.qubits());
  for (const auto& t : h.terms())
    if (is_diagonal_string(t.letters)) out.add(t.letters, t.coeff);
  return out;
}

template <typename Scalar>
pauli_sum<Scalar> offdiagonal_part(const pauli_sum<Scalar>& h) {
  pauli_sum<Scalar> out(h.qubits());
  for (const auto& t : h.terms())
    if (!is_diagonal_string(t.letters)) out.add(t.letters, t.coeff);
  return out;
}

// Diagonal entries of an I/Z-only sum as a length-2^L vector.
template <typename Scalar>
real_vector_t<Scalar> diagonal_vector(const pauli_sum<Scalar>& h) {
  const std::uint64_t dim = std::uint64_t{1} << h.qubits();
  real_vector_t<Scalar> v = real_vector_t<Scalar>::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) {
    if (!is_diagonal_string(t.letters))
      throw numerical_error("diagonal_vector: sum has off-diagonal terms");
    string_masks m = masks_of(t.letters);
    for (std::uint64_t i = 0; i < dim; ++i)
      v[static_cast<Eigen::Index>(i)] += (std::popcount(i & m.z) & 1) ? -t.coeff : t.coeff;
  }
  return v;
}

inline constexpr int kDenseQubitCap = 14;

template <typename Scalar>
matrix_t<Scalar> to_matrix(const pauli_sum<Scalar>& h) {
  if (h.qubits() > kDenseQubitCap)
    throw numerical_error("to_matrix: register too large for dense materialization");
  const std::uint64_t dim = std::uint64_t{1} << h.qubits();
  matrix_t<Scalar> out = matrix_t<Scalar>::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) {
    string_masks m = masks_of(t.letters);
    for (std::uint64_t i = 0; i < dim; ++i)
      out(static_cast<Eigen::Index>(i ^ m.x), static_cast<Eigen::Index>(i)) +=
          t.coeff * string_phase<Scalar>(m, i);
  }
  return out;
}

// Matrix-free y = h x.
template <typename Scalar>
vector_t<Scalar> apply(const pauli_sum<Scalar>& h, const vector_t<Scalar>& x) {
  const std::uint64_t dim = std::uint64_t{1} << h.qubits();
  if (x.size() != static_cast<Eigen::Index>(dim))
    throw numerical_error("apply: state dimension mismatch");
  vector_t<Scalar> y = vector_t<Scalar>::Zero(x.size());
  for (const auto& t : h.terms()) {
    string_masks m = masks_of(t.letters);
    for (std::uint64_t i = 0; i < dim; ++i)
      y[static_cast<Eigen::Index>(i ^ m.x)] +=
          t.coeff * string_phase<Scalar>(m, i) * x[static_cast<Eigen::Index>(i)];
  }
  return y;
}

inline bool strings_commute(const std::string& a, const std::string& b) {
  string_masks ma = masks_of(a), mb = masks_of(b);
  int anti = std::popcount(ma.x & mb.z) + std::popcount(ma.z & mb.x);
  return (anti & 1) == 0;
}

}  // namespace atprep
