#pragma once

#include <string>
#include <vector>

#include "atprep/evolution.hpp"
#include "atprep/experiment.hpp"
#include "atprep/lattice.hpp"
#include "atprep/optimize.hpp"
#include "atprep/preconditioner.hpp"
#include "atprep/schedule.hpp"
#include "atprep/spectral.hpp"

namespace atprep {

// Flat `key = value` configuration with dotted namespaces. Every field has a
// default; files override defaults and command-line flags override files.
struct run_config {
  lattice_spec lattice;

  std::string schedule_kind = "linear";
  std::vector<double> schedule_coefficients = {1.0};

  band_selector band;
  s_grid grid;

  std::string stepper = "trotter2";
  double dt = 0.01;
  double dt_max = 0.01;

  double tau_min = 1.0;
  double tau_max = 40.0;
  int tau_count = 12;
  std::string tau_scale = "geometric";
  std::vector<double> ratios;  // empty: sweep only the configured lattice

  double thermalize_tau = 10.0;

  std::string approach = "none";
  std::vector<double> alphas;  // empty: all-zero preconditioner
  bool translation_invariant = false;

  double opt_bound = -1.0;  // <= 0: automatic
  int opt_grid_points = 9;
  int opt_rounds = 3;

  double fit_floor = 1e-12;
  double fit_ceil = 0.5;

  int threads = 0;  // 0: hardware concurrency
  long long seed = 1;

  schedule make_schedule() const;
  preconditioner make_preconditioner() const;
  std::vector<double> make_taus() const;
  sweep_config make_sweep() const;
  optimize_spec make_optimize() const;
  approach_t make_approach() const { return approach_from_name(approach); }
  void validate() const;
};

// Parses configuration text; `origin` names the source in error messages.
// Unknown keys, duplicate keys and malformed values are errors with the
// offending line number.
run_config parse_config_text(const std::string& text, const std::string& origin = "config");
run_config parse_config_file(const std::string& path);

// Canonical form: every key, fixed order, round-trips through the parser.
std::string dump_config(const run_config& cfg);

}  // namespace atprep
