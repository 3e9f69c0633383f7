#include "atprep/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "atprep/errors.hpp"

namespace atprep {
namespace {

const char* kUnitsHeader = "# units: energies in Jz, times in 1/Jz, hbar = 1\n";
const char* kCsvHeader = "approach,ratio,tau,epsilon_at,n_steps,dt";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double_strict(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw config_error(where + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw config_error(where + ": expected a number, got '" + v + "'");
  return out;
}

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw config_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw config_error("cannot replace '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string pauli_text(const pauli_sum<double>& h) {
  std::string out = "qubits " + std::to_string(h.qubits()) + "\n";
  for (const auto& t : h.terms()) {
    out += format_full(t.coeff);
    out += " ";
    out += t.letters;
    out += "\n";
  }
  return out;
}

pauli_sum<double> parse_pauli_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int qubits = -1;
  std::vector<std::pair<double, std::string>> terms;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (std::size_t hsh = line.find('#'); hsh != std::string::npos) line.resize(hsh);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (qubits < 0) {
      std::string tag;
      ls >> tag >> qubits;
      if (tag != "qubits" || ls.fail() || qubits < 1)
        throw config_error(where + ": expected `qubits N` header");
      std::string rest;
      if (ls >> rest) throw config_error(where + ": trailing text after header");
      continue;
    }
    std::string coeff_s, letters, rest;
    ls >> coeff_s >> letters;
    if (ls.fail() || letters.empty())
      throw config_error(where + ": expected `coefficient letters`");
    if (ls >> rest) throw config_error(where + ": trailing text");
    terms.emplace_back(parse_double_strict(coeff_s, where), letters);
    if (static_cast<int>(letters.size()) != qubits)
      throw config_error(where + ": string has " + std::to_string(letters.size()) +
                         " letters, register has " + std::to_string(qubits));
  }
  if (qubits < 0) throw config_error(origin + ": missing `qubits N` header");
  pauli_sum<double> h(qubits);
  try {
    for (const auto& [c, s] : terms) h.add(s, c);
  } catch (const config_error& e) {
    throw config_error(origin + ": " + e.what());
  }
  return h;
}

pauli_sum<double> read_pauli_text(const std::string& path) {
  return parse_pauli_text(read_file(path), path);
}

std::string sweep_csv(const std::vector<sweep_csv_row>& rows) {
  std::string out = kUnitsHeader;
  out += kCsvHeader;
  out += "\n";
  for (const auto& r : rows) {
    out += r.approach;
    out += ",";
    out += format_full(r.ratio);
    out += ",";
    out += format_full(r.tau);
    out += ",";
    out += format_full(r.epsilon);
    out += ",";
    out += std::to_string(r.n_steps);
    out += ",";
    out += format_full(r.dt);
    out += "\n";
  }
  return out;
}

std::vector<sweep_csv_row> parse_sweep_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  std::vector<sweep_csv_row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != kCsvHeader)
        throw config_error(where + ": expected header `" + kCsvHeader + "`");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) fields.push_back(trim(item));
    if (fields.size() != 6) throw config_error(where + ": expected 6 fields");
    sweep_csv_row r;
    r.approach = fields[0];
    r.ratio = parse_double_strict(fields[1], where);
    r.tau = parse_double_strict(fields[2], where);
    r.epsilon = parse_double_strict(fields[3], where);
    r.n_steps = static_cast<int>(parse_double_strict(fields[4], where));
    r.dt = parse_double_strict(fields[5], where);
    rows.push_back(std::move(r));
  }
  if (!saw_header) throw config_error(origin + ": missing CSV header");
  return rows;
}

std::string profile_dat(const gap_profile_result& prof) {
  std::string out = kUnitsHeader;
  out += "# s  d  D\n";
  for (const auto& sn : prof.snapshots) {
    out += format_full(sn.s);
    out += "  ";
    out += format_full(sn.d);
    out += "  ";
    out += format_full(sn.D);
    out += "\n";
  }
  return out;
}

std::string ratio_dat(const std::vector<ratio_row>& rows) {
  std::string out = kUnitsHeader;
  out += "# ratio  g_fit  sigma_g  g_tilde\n";
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    out += format_full(r.ratio);
    out += "  ";
    out += format_full(r.g_fit);
    out += "  ";
    out += format_full(r.sigma_g);
    out += "  ";
    out += format_full(r.g_tilde);
    out += "\n";
  }
  return out;
}

nlohmann::json profile_json(const gap_profile_result& prof) {
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& sn : prof.snapshots)
    snaps.push_back({{"s", sn.s}, {"d", sn.d}, {"D", sn.D}, {"band_indices", sn.band_indices}});
  return {{"d_min", prof.d_min},
          {"D_max", prof.D_max},
          {"delta_norm", prof.delta_norm},
          {"g_tilde", finite_or_null(prof.g_tilde)},
          {"snapshots", snaps}};
}

nlohmann::json fit_json(const fit_result& fit) {
  return {{"g", fit.g},
          {"sigma_g", fit.sigma_g},
          {"intercept", fit.intercept},
          {"r2", fit.r2},
          {"n_points", fit.n_points},
          {"window", {{"eps_floor", fit.eps_floor}, {"eps_ceil", fit.eps_ceil}}}};
}

nlohmann::json optimize_json(const optimize_result& res) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& ev : res.trace) {
    std::vector<double> a(ev.alphas.data(), ev.alphas.data() + ev.alphas.size());
    trace.push_back({{"alphas", a}, {"value", finite_or_null(ev.value)}, {"feasible", ev.feasible}});
  }
  std::vector<double> best(res.best.alphas.data(), res.best.alphas.data() + res.best.alphas.size());
  return {{"objective", res.objective},
          {"best_alphas", best},
          {"best_value", finite_or_null(res.best_value)},
          {"translation_invariant", res.best.translation_invariant},
          {"n_evaluations", res.n_evaluations()},
          {"trace", trace}};
}

nlohmann::json ratio_json(const std::vector<ratio_row>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    std::vector<double> a(r.alphas.data(), r.alphas.data() + r.alphas.size());
    nlohmann::json j = {{"ratio", r.ratio},
                        {"alphas", a},
                        {"status", r.status},
                        {"g_fit", finite_or_null(r.g_fit)},
                        {"sigma_g", finite_or_null(r.sigma_g)},
                        {"r2", finite_or_null(r.r2)},
                        {"g_tilde", finite_or_null(r.g_tilde)},
                        {"delta_norm", finite_or_null(r.delta_norm)},
                        {"d_min", finite_or_null(r.d_min)},
                        {"D_max", finite_or_null(r.D_max)}};
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace atprep
