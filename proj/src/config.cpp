#include "atprep/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "atprep/errors.hpp"

namespace atprep {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw config_error("expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw config_error("expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& v) {
  std::size_t pos = 0;
  long long out;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw config_error("expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) throw config_error("expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("expected true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

struct key_entry {
  const char* key;
  std::function<void(run_config&, const std::string&)> set;
  std::function<std::string(const run_config&)> get;
};

const std::vector<key_entry>& key_table() {
  using G = lattice_spec::geometry_t;
  using M = band_selector::mode_t;
  static const std::vector<key_entry> table = {
      {"lattice.geometry",
       [](run_config& c, const std::string& v) {
         if (v == "chain")
           c.lattice.geometry = G::chain_periodic;
         else if (v == "torus")
           c.lattice.geometry = G::square_torus;
         else
           throw config_error("expected chain or torus, got '" + v + "'");
       },
       [](const run_config& c) {
         return std::string(c.lattice.geometry == G::chain_periodic ? "chain" : "torus");
       }},
      {"lattice.length", [](run_config& c, const std::string& v) { c.lattice.length = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.lattice.length); }},
      {"lattice.rows", [](run_config& c, const std::string& v) { c.lattice.rows = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.lattice.rows); }},
      {"lattice.cols", [](run_config& c, const std::string& v) { c.lattice.cols = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.lattice.cols); }},
      {"lattice.jz", [](run_config& c, const std::string& v) { c.lattice.jz = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.lattice.jz); }},
      {"lattice.jx", [](run_config& c, const std::string& v) { c.lattice.jx = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.lattice.jx); }},
      {"schedule.kind",
       [](run_config& c, const std::string& v) {
         if (v != "linear" && v != "polynomial")
           throw config_error("expected linear or polynomial, got '" + v + "'");
         c.schedule_kind = v;
       },
       [](const run_config& c) { return c.schedule_kind; }},
      {"schedule.coefficients",
       [](run_config& c, const std::string& v) { c.schedule_coefficients = parse_list(v); },
       [](const run_config& c) { return fmt_list(c.schedule_coefficients); }},
      {"band.mode",
       [](run_config& c, const std::string& v) {
         if (v == "lowest-k")
           c.band.mode = M::lowest_k;
         else if (v == "energy-window")
           c.band.mode = M::energy_window;
         else
           throw config_error("expected lowest-k or energy-window, got '" + v + "'");
       },
       [](const run_config& c) {
         return std::string(c.band.mode == M::lowest_k ? "lowest-k" : "energy-window");
       }},
      {"band.k", [](run_config& c, const std::string& v) { c.band.k = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.band.k); }},
      {"band.window_lo", [](run_config& c, const std::string& v) { c.band.window_lo = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.band.window_lo); }},
      {"band.window_hi", [](run_config& c, const std::string& v) { c.band.window_hi = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.band.window_hi); }},
      {"band.degeneracy_tol",
       [](run_config& c, const std::string& v) { c.band.degeneracy_tol = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.band.degeneracy_tol); }},
      {"grid.points", [](run_config& c, const std::string& v) { c.grid.points = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.grid.points); }},
      {"grid.refine_tol", [](run_config& c, const std::string& v) { c.grid.refine_tol = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.grid.refine_tol); }},
      {"evolution.stepper",
       [](run_config& c, const std::string& v) {
         stepper_from_name(v);  // validates
         c.stepper = v;
       },
       [](const run_config& c) { return c.stepper; }},
      {"evolution.dt", [](run_config& c, const std::string& v) { c.dt = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.dt); }},
      {"evolution.dt_max", [](run_config& c, const std::string& v) { c.dt_max = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.dt_max); }},
      {"sweep.tau_min", [](run_config& c, const std::string& v) { c.tau_min = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.tau_min); }},
      {"sweep.tau_max", [](run_config& c, const std::string& v) { c.tau_max = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.tau_max); }},
      {"sweep.tau_count", [](run_config& c, const std::string& v) { c.tau_count = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.tau_count); }},
      {"sweep.tau_scale",
       [](run_config& c, const std::string& v) {
         if (v != "geometric" && v != "linear")
           throw config_error("expected geometric or linear, got '" + v + "'");
         c.tau_scale = v;
       },
       [](const run_config& c) { return c.tau_scale; }},
      {"sweep.ratios", [](run_config& c, const std::string& v) { c.ratios = parse_list(v); },
       [](const run_config& c) { return fmt_list(c.ratios); }},
      {"thermalize.tau", [](run_config& c, const std::string& v) { c.thermalize_tau = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.thermalize_tau); }},
      {"preconditioner.approach",
       [](run_config& c, const std::string& v) {
         approach_from_name(v);  // validates
         c.approach = v;
       },
       [](const run_config& c) { return c.approach; }},
      {"preconditioner.alphas", [](run_config& c, const std::string& v) { c.alphas = parse_list(v); },
       [](const run_config& c) { return fmt_list(c.alphas); }},
      {"preconditioner.translation_invariant",
       [](run_config& c, const std::string& v) { c.translation_invariant = parse_bool(v); },
       [](const run_config& c) { return std::string(c.translation_invariant ? "true" : "false"); }},
      {"optimize.bound", [](run_config& c, const std::string& v) { c.opt_bound = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.opt_bound); }},
      {"optimize.grid_points",
       [](run_config& c, const std::string& v) { c.opt_grid_points = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.opt_grid_points); }},
      {"optimize.rounds", [](run_config& c, const std::string& v) { c.opt_rounds = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.opt_rounds); }},
      {"fit.eps_floor", [](run_config& c, const std::string& v) { c.fit_floor = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.fit_floor); }},
      {"fit.eps_ceil", [](run_config& c, const std::string& v) { c.fit_ceil = parse_double(v); },
       [](const run_config& c) { return fmt_double(c.fit_ceil); }},
      {"run.threads", [](run_config& c, const std::string& v) { c.threads = static_cast<int>(parse_int(v)); },
       [](const run_config& c) { return std::to_string(c.threads); }},
      {"run.seed", [](run_config& c, const std::string& v) { c.seed = parse_int(v); },
       [](const run_config& c) { return std::to_string(c.seed); }},
  };
  return table;
}

const key_entry* find_key(const std::string& key) {
  for (const auto& e : key_table())
    if (key == e.key) return &e;
  return nullptr;
}

}  // namespace

run_config parse_config_text(const std::string& text, const std::string& origin) {
  run_config cfg;
  std::set<std::string> used;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (std::size_t h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw config_error(where + ": expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(where + ": empty key");
    const key_entry* entry = find_key(key);
    if (!entry) throw config_error(where + ": unknown key '" + key + "'");
    if (!used.insert(key).second) throw config_error(where + ": duplicate key '" + key + "'");
    try {
      entry->set(cfg, value);
    } catch (const config_error& e) {
      throw config_error(where + ": " + key + ": " + e.what());
    }
  }
  return cfg;
}

run_config parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string dump_config(const run_config& cfg) {
  std::string out;
  for (const auto& e : key_table()) {
    out += e.key;
    out += " = ";
    out += e.get(cfg);
    out += "\n";
  }
  return out;
}

schedule run_config::make_schedule() const {
  if (schedule_kind == "linear") return schedule::linear();
  return schedule::polynomial(schedule_coefficients);
}

preconditioner run_config::make_preconditioner() const {
  const int L = lattice.sites();
  preconditioner m;
  m.translation_invariant = translation_invariant;
  if (alphas.empty()) {
    m.alphas = Eigen::VectorXd::Zero(L);
  } else if (static_cast<int>(alphas.size()) == L) {
    m.alphas = Eigen::Map<const Eigen::VectorXd>(alphas.data(), L);
  } else if (alphas.size() == 1 && translation_invariant) {
    m.alphas = Eigen::VectorXd::Constant(L, alphas[0]);
  } else {
    throw config_error("preconditioner.alphas: expected " + std::to_string(L) + " values, got " +
                       std::to_string(alphas.size()));
  }
  m.validate();
  return m;
}

std::vector<double> run_config::make_taus() const {
  if (tau_count < 1) throw config_error("sweep.tau_count must be >= 1");
  if (!(tau_min > 0)) throw config_error("sweep.tau_min must be > 0");
  if (!(tau_max >= tau_min)) throw config_error("sweep.tau_max must be >= sweep.tau_min");
  std::vector<double> taus;
  if (tau_count == 1) return {tau_min};
  for (int i = 0; i < tau_count; ++i) {
    const double t = static_cast<double>(i) / (tau_count - 1);
    taus.push_back(tau_scale == "geometric" ? tau_min * std::pow(tau_max / tau_min, t)
                                            : tau_min + (tau_max - tau_min) * t);
  }
  return taus;
}

sweep_config run_config::make_sweep() const {
  sweep_config sw;
  sw.taus = make_taus();
  sw.dt = dt;
  sw.stepper = stepper_from_name(stepper);
  sw.dt_max = dt_max;
  sw.threads = threads;
  return sw;
}

optimize_spec run_config::make_optimize() const {
  optimize_spec sp;
  sp.bound = opt_bound;
  sp.grid_points = opt_grid_points;
  sp.rounds = opt_rounds;
  sp.translation_invariant = translation_invariant;
  sp.threads = threads;
  return sp;
}

void run_config::validate() const {
  lattice.validate();
  band.validate();
  grid.validate();
  make_schedule();       // validates coefficients
  make_preconditioner(); // validates alphas
  stepper_from_name(stepper);
  approach_from_name(approach);
  make_optimize().validate();
  if (!(dt > 0)) throw config_error("evolution.dt must be > 0");
  if (!(dt_max > 0)) throw config_error("evolution.dt_max must be > 0");
  if (dt > dt_max * (1.0 + 1e-12))
    throw config_error("evolution.dt must not exceed evolution.dt_max");
  if (!(thermalize_tau >= 0)) throw config_error("thermalize.tau must be >= 0");
  if (!(fit_floor > 0) || !(fit_ceil > fit_floor))
    throw config_error("fit window must satisfy 0 < eps_floor < eps_ceil");
  if (threads < 0) throw config_error("run.threads must be >= 0");
  for (double r : ratios)
    if (!std::isfinite(r) || r < 0) throw config_error("sweep.ratios must be finite and >= 0");
  make_taus();
}

}  // namespace atprep
