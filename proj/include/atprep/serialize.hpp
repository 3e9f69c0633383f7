#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "atprep/experiment.hpp"
#include "atprep/optimize.hpp"
#include "atprep/pauli.hpp"
#include "atprep/spectral.hpp"

namespace atprep {

// Full-precision decimal form (%.17g); round-trips every double exactly.
std::string format_full(double v);

// Writes through a temp file in the same directory plus an atomic rename, so
// readers never observe a partial file. Creates parent directories.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Pauli sum text form: a `qubits N` header, then one `coefficient letters`
// line per term; letter j acts on qubit j (bit j of the basis index).
std::string pauli_text(const pauli_sum<double>& h);
pauli_sum<double> parse_pauli_text(const std::string& text, const std::string& origin = "pauli");
pauli_sum<double> read_pauli_text(const std::string& path);

struct sweep_csv_row {
  std::string approach;
  double ratio = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  int n_steps = 0;
  double dt = 0.0;
};

std::string sweep_csv(const std::vector<sweep_csv_row>& rows);
std::vector<sweep_csv_row> parse_sweep_csv(const std::string& text, const std::string& origin = "csv");

// gnuplot-ready tables
std::string profile_dat(const gap_profile_result& prof);
std::string ratio_dat(const std::vector<ratio_row>& rows);

nlohmann::json profile_json(const gap_profile_result& prof);
nlohmann::json fit_json(const fit_result& fit);
nlohmann::json optimize_json(const optimize_result& res);
nlohmann::json ratio_json(const std::vector<ratio_row>& rows);

}  // namespace atprep
