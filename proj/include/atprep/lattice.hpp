#pragma once

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "atprep/errors.hpp"
#include "atprep/pauli.hpp"

namespace atprep {

struct lattice_spec {
  enum class geometry_t { chain_periodic, square_torus };
  geometry_t geometry = geometry_t::chain_periodic;
  int length = 6;  // chain sites
  int rows = 3, cols = 3;
  double jz = 1.0, jx = 5.0;

  int sites() const {
    return geometry == geometry_t::chain_periodic ? length : rows * cols;
  }

  // jx == 0 is allowed so that a fully diagonal H1 (H0 = H1) stays expressible.
  void validate() const {
    if (geometry == geometry_t::chain_periodic) {
      if (length < 2) throw config_error("lattice: chain length must be >= 2");
    } else {
      if (rows < 2 || cols < 2) throw config_error("lattice: torus dimensions must be >= 2");
    }
    if (!(jz > 0)) throw config_error("lattice: jz must be > 0");
    if (!(jx >= 0) || !std::isfinite(jx)) throw config_error("lattice: jx must be >= 0");
    if (!std::isfinite(jz)) throw config_error("lattice: jz must be finite");
  }
};

// Deduplicated undirected edges; periodic wrapping that makes two bonds
// coincide (L = 2 chain, torus dimension 2) keeps a single copy.
inline std::vector<std::pair<int, int>> lattice_edges(const lattice_spec& spec) {
  spec.validate();
  std::set<std::pair<int, int>> dedup;
  auto put = [&dedup](int a, int b) {
    if (a == b) return;
    dedup.emplace(std::min(a, b), std::max(a, b));
  };
  if (spec.geometry == lattice_spec::geometry_t::chain_periodic) {
    for (int i = 0; i < spec.length; ++i) put(i, (i + 1) % spec.length);
  } else {
    auto id = [&spec](int r, int c) { return r * spec.cols + c; };
    for (int r = 0; r < spec.rows; ++r)
      for (int c = 0; c < spec.cols; ++c) {
        put(id(r, c), id(r, (c + 1) % spec.cols));
        put(id(r, c), id((r + 1) % spec.rows, c));
      }
  }
  return {dedup.begin(), dedup.end()};
}

// H1 = -1/2 sum_<ij> (Jz Zi Zj + Jx Xi Xj)
template <typename Scalar = double>
pauli_sum<Scalar> build_heisenberg_xz(const lattice_spec& spec) {
  const int L = spec.sites();
  pauli_sum<Scalar> h(L);
  for (auto [i, j] : lattice_edges(spec)) {
    std::string zz(static_cast<std::size_t>(L), 'I');
    zz[static_cast<std::size_t>(i)] = 'Z';
    zz[static_cast<std::size_t>(j)] = 'Z';
    h.add(zz, static_cast<Scalar>(-0.5 * spec.jz));
    if (spec.jx != 0.0) {
      std::string xx(static_cast<std::size_t>(L), 'I');
      xx[static_cast<std::size_t>(i)] = 'X';
      xx[static_cast<std::size_t>(j)] = 'X';
      h.add(xx, static_cast<Scalar>(-0.5 * spec.jx));
    }
  }
  return h;
}

}  // namespace atprep
