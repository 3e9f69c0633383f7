#include <CLI11.hpp>
#include <Eigen/Dense>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atprep/config.hpp"
#include "atprep/errors.hpp"
#include "atprep/evolution.hpp"
#include "atprep/experiment.hpp"
#include "atprep/lattice.hpp"
#include "atprep/optimize.hpp"
#include "atprep/preconditioner.hpp"
#include "atprep/serialize.hpp"
#include "atprep/spectral.hpp"

namespace {

using namespace atprep;

constexpr long long kSeedUnset = std::numeric_limits<long long>::min();

struct common_opts {
  std::string config_path;
  std::string output_dir = "out";
  int threads = -1;
  long long seed = kSeedUnset;
  bool dump = false;
};

void add_common(CLI::App* cmd, common_opts& o) {
  cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
  cmd->add_option("--output-dir", o.output_dir, "directory for reports and data files")
      ->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads (0 = all hardware threads)");
  cmd->add_option("--seed", o.seed, "random seed recorded in reports");
  cmd->add_flag("--dump-config", o.dump, "print the effective configuration and exit");
}

run_config load_config(const common_opts& o) {
  run_config cfg;
  if (!o.config_path.empty()) cfg = parse_config_file(o.config_path);
  if (o.threads >= 0) cfg.threads = o.threads;
  if (o.seed != kSeedUnset) cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

nlohmann::json report_head(const char* command, const run_config& cfg) {
  return {{"command", command}, {"seed", cfg.seed}, {"config", dump_config(cfg)}};
}

std::string out_path(const common_opts& o, const char* name) { return o.output_dir + "/" + name; }

void write_json(const common_opts& o, const char* name, nlohmann::json j) {
  atomic_write(out_path(o, name), j.dump(2) + "\n");
}

// ------------------------------------------------------------------ commands

int cmd_build(const common_opts& o) {
  run_config cfg = load_config(o);
  const pauli_sum<double> h1 = build_heisenberg_xz<double>(cfg.lattice);
  const preconditioner m = cfg.make_preconditioner();
  const pauli_sum<double> h0 = build_h0<double>(h1, m);

  atomic_write(out_path(o, "h1.txt"), pauli_text(h1));
  atomic_write(out_path(o, "h0.txt"), pauli_text(h0));
  nlohmann::json j = report_head("build", cfg);
  j["qubits"] = h1.qubits();
  j["edges"] = lattice_edges(cfg.lattice).size();
  j["h1_terms"] = h1.size();
  j["h0_terms"] = h0.size();
  std::vector<double> a(m.alphas.data(), m.alphas.data() + m.alphas.size());
  j["alphas"] = a;
  write_json(o, "build.json", j);
  std::cout << "wrote " << out_path(o, "h0.txt") << ", " << out_path(o, "h1.txt") << ", "
            << out_path(o, "build.json") << "\n";
  return 0;
}

int cmd_metrics(const common_opts& o) {
  run_config cfg = load_config(o);
  const pauli_sum<double> h1 = build_heisenberg_xz<double>(cfg.lattice);
  const pauli_sum<double> h0 = build_h0<double>(h1, cfg.make_preconditioner());
  const schedule f = cfg.make_schedule();
  gap_profile_result prof = gap_profile(h0, h1, f, cfg.band, cfg.grid, cfg.threads);

  nlohmann::json j = report_head("metrics", cfg);
  j.update(profile_json(prof));
  write_json(o, "metrics.json", j);
  atomic_write(out_path(o, "profile.dat"), profile_dat(prof));
  std::cout << "d_min = " << format_full(prof.d_min) << "  D_max = " << format_full(prof.D_max)
            << "  delta_norm = " << format_full(prof.delta_norm)
            << "  g_tilde = " << format_full(prof.g_tilde) << "\n";
  return 0;
}

int cmd_optimize(const common_opts& o) {
  run_config cfg = load_config(o);
  const pauli_sum<double> h1 = build_heisenberg_xz<double>(cfg.lattice);
  const schedule f = cfg.make_schedule();
  const approach_t approach = cfg.make_approach();

  nlohmann::json j = report_head("optimize", cfg);
  j["approach"] = approach_name(approach);
  if (approach == approach_t::none) {
    // no search: evaluate the configured preconditioner as-is
    const preconditioner m = cfg.make_preconditioner();
    std::vector<double> a(m.alphas.data(), m.alphas.data() + m.alphas.size());
    j["best_alphas"] = a;
    j["delta_norm"] = operator_norm(offdiagonal_part(h1) - preconditioner_pauli<double>(m));
    try {
      j["g_tilde"] = gap_profile(build_h0<double>(h1, m), h1, f, cfg.band, cfg.grid, cfg.threads).g_tilde;
      j["status"] = "ok";
    } catch (const numerical_error& e) {
      j["g_tilde"] = nullptr;
      j["status"] = e.what();
    }
    write_json(o, "optimize.json", j);
    std::cout << "approach none: kept configured preconditioner\n";
    return 0;
  }

  optimize_spec sp = cfg.make_optimize();
  optimize_result res;
  if (approach == approach_t::delta_norm) {
    sp.objective = optimize_spec::objective_t::delta_norm;
    res = minimize_delta_norm(h1, sp);
  } else {
    sp.objective = optimize_spec::objective_t::g_tilde;
    res = minimize_g_tilde(h1, f, cfg.band, cfg.grid, sp);
  }
  j.update(optimize_json(res));
  write_json(o, "optimize.json", j);
  std::cout << "best " << res.objective << " = " << format_full(res.best_value) << " after "
            << res.n_evaluations() << " evaluations\n";
  return 0;
}

int cmd_thermalize(const common_opts& o) {
  run_config cfg = load_config(o);
  const pauli_sum<double> h1 = build_heisenberg_xz<double>(cfg.lattice);
  const pauli_sum<double> h0 = build_h0<double>(h1, cfg.make_preconditioner());
  const schedule f = cfg.make_schedule();
  sweep_config sw = cfg.make_sweep();
  sw.taus = {cfg.thermalize_tau};
  sweep_result res = sweep_tau(h0, h1, f, cfg.band, sw);

  nlohmann::json j = report_head("thermalize", cfg);
  j["tau"] = res.rows[0].tau;
  j["epsilon_at"] = res.rows[0].epsilon;
  j["n_steps"] = res.rows[0].n_steps;
  j["dt"] = res.rows[0].dt;
  j["stepper"] = cfg.stepper;
  j["band_rank"] = res.band_rank;
  j["norm_drift"] = res.max_norm_drift;
  write_json(o, "thermalize.json", j);
  std::cout << "tau = " << format_full(res.rows[0].tau)
            << "  epsilon_at = " << format_full(res.rows[0].epsilon)
            << "  norm_drift = " << format_full(res.max_norm_drift) << "\n";
  return 0;
}

int cmd_sweep(const common_opts& o) {
  run_config cfg = load_config(o);
  const schedule f = cfg.make_schedule();
  ratio_sweep_config rc;
  rc.ratios = cfg.ratios.empty() ? std::vector<double>{cfg.lattice.jx / cfg.lattice.jz} : cfg.ratios;
  rc.approach = cfg.make_approach();
  rc.base_m = cfg.make_preconditioner();
  rc.opt = cfg.make_optimize();
  rc.sweep = cfg.make_sweep();
  rc.sel = cfg.band;
  rc.grid = cfg.grid;
  rc.fit_floor = cfg.fit_floor;
  rc.fit_ceil = cfg.fit_ceil;
  std::vector<ratio_row> rows = sweep_coupling_ratio(cfg.lattice, f, rc);

  std::vector<sweep_csv_row> csv;
  for (const auto& r : rows)
    for (const auto& s : r.sweep)
      csv.push_back({approach_name(rc.approach), r.ratio, s.tau, s.epsilon, s.n_steps, s.dt});
  if (csv.empty()) {
    std::string why = "sweep: no epsilon_AT rows were produced";
    for (const auto& r : rows)
      if (r.status != "ok") {
        why += "; ratio " + format_full(r.ratio) + ": " + r.status;
        break;
      }
    throw numerical_error(why);
  }
  atomic_write(out_path(o, "sweep.csv"), sweep_csv(csv));
  nlohmann::json j = report_head("sweep", cfg);
  j["approach"] = approach_name(rc.approach);
  j["ratios"] = ratio_json(rows);
  write_json(o, "sweep.json", j);
  atomic_write(out_path(o, "ratio.dat"), ratio_dat(rows));
  std::cout << "wrote " << csv.size() << " rows to " << out_path(o, "sweep.csv") << "\n";
  return 0;
}

int cmd_fit(const common_opts& o, const std::string& input) {
  run_config cfg = load_config(o);
  const std::string path = input.empty() ? out_path(o, "sweep.csv") : input;
  std::vector<sweep_csv_row> rows = parse_sweep_csv(read_file(path), path);
  if (rows.empty()) throw numerical_error("fit: '" + path + "' has no data rows");

  // group rows by (approach, ratio) in order of first appearance
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, std::vector<sweep_row>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.approach, r.ratio);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back({r.tau, r.epsilon, r.n_steps, r.dt});
  }
  nlohmann::json fits = nlohmann::json::array();
  std::size_t ok = 0;
  for (const auto& key : order) {
    nlohmann::json entry = {{"approach", key.first}, {"ratio", key.second}};
    try {
      fit_result fr = fit_exponential(groups[key], cfg.fit_floor, cfg.fit_ceil);
      entry.update(fit_json(fr));
      entry["status"] = "ok";
      ++ok;
    } catch (const numerical_error& e) {
      entry["status"] = e.what();
    }
    fits.push_back(std::move(entry));
  }
  nlohmann::json j = report_head("fit", cfg);
  j["input"] = path;
  j["fits"] = fits;
  write_json(o, "fit.json", j);
  std::cout << ok << " of " << order.size() << " series fitted; wrote " << out_path(o, "fit.json")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atprep: eigenstate preparation by simulated adiabatic thermalization"};
  app.name("atprep");  // stable usage line regardless of the invocation path
  app.require_subcommand(1);

  common_opts ob, om, oo, ot, os, of;
  std::string fit_input;
  CLI::App* cb = app.add_subcommand("build", "construct H1 and the preconditioned H0, write both");
  add_common(cb, ob);
  CLI::App* cm = app.add_subcommand("metrics", "gap profile and characteristic time of a run");
  add_common(cm, om);
  CLI::App* co = app.add_subcommand("optimize", "search preconditioner coefficients");
  add_common(co, oo);
  CLI::App* ct = app.add_subcommand("thermalize", "single preparation run at one tau");
  add_common(ct, ot);
  CLI::App* cs = app.add_subcommand("sweep", "epsilon_AT over a tau grid (optionally over ratios)");
  add_common(cs, os);
  CLI::App* cf = app.add_subcommand("fit", "exponential fit of a sweep CSV");
  add_common(cf, of);
  cf->add_option("--input", fit_input, "sweep CSV to fit (default: <output-dir>/sweep.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cb->parsed()) {
      if (ob.dump) { std::cout << atprep::dump_config(load_config(ob)); return 0; }
      return cmd_build(ob);
    }
    if (cm->parsed()) {
      if (om.dump) { std::cout << atprep::dump_config(load_config(om)); return 0; }
      return cmd_metrics(om);
    }
    if (co->parsed()) {
      if (oo.dump) { std::cout << atprep::dump_config(load_config(oo)); return 0; }
      return cmd_optimize(oo);
    }
    if (ct->parsed()) {
      if (ot.dump) { std::cout << atprep::dump_config(load_config(ot)); return 0; }
      return cmd_thermalize(ot);
    }
    if (cs->parsed()) {
      if (os.dump) { std::cout << atprep::dump_config(load_config(os)); return 0; }
      return cmd_sweep(os);
    }
    if (cf->parsed()) {
      if (of.dump) { std::cout << atprep::dump_config(load_config(of)); return 0; }
      return cmd_fit(of, fit_input);
    }
  } catch (const atprep::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const atprep::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
