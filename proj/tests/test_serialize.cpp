#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "atprep/errors.hpp"
#include "atprep/serialize.hpp"

using namespace atprep;
namespace fs = std::filesystem;

namespace {

struct temp_dir {
  fs::path path;
  temp_dir() {
    path = fs::temp_directory_path() / ("atprep_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~temp_dir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("format_full round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 541845272400.09065}) {
    CHECK(std::stod(format_full(v)) == v);
  }
  CHECK(format_full(0.01) == "0.01");
  CHECK(format_full(1.0) == "1");
}

TEST_CASE("atomic_write leaves no temp file and creates parents") {
  temp_dir tmp;
  const std::string nested = tmp.file("a/b/out.txt");
  atomic_write(nested, "payload\n");
  CHECK(read_file(nested) == "payload\n");
  CHECK(!fs::exists(nested + ".tmp"));

  // overwrite in place
  atomic_write(nested, "second\n");
  CHECK(read_file(nested) == "second\n");

  CHECK_THROWS_AS((void)read_file(tmp.file("missing.txt")), config_error);
}

TEST_CASE("pauli text round-trips term for term") {
  pauli_sum<double> h(3);
  h.add("XXI", -2.5);
  h.add("ZZI", 1.0 / 3.0);
  h.add("IYY", 0.125);
  const std::string text = pauli_text(h);
  CHECK(text.substr(0, 9) == "qubits 3\n");
  const pauli_sum<double> back = parse_pauli_text(text);
  CHECK(back.qubits() == 3);
  REQUIRE(back.size() == h.size());
  for (const auto& t : h.terms()) CHECK(back.coefficient(t.letters) == t.coeff);
}

TEST_CASE("pauli text: comments, merging and errors") {
  const pauli_sum<double> h = parse_pauli_text(
      "# comment\n"
      "qubits 2\n"
      "\n"
      "0.5 XX   # inline comment\n"
      "0.25 XX\n");
  CHECK(h.coefficient("XX") == 0.75);

  CHECK_THROWS_WITH_AS((void)parse_pauli_text("0.5 XX\n", "p.txt"),
                       doctest::Contains("p.txt:1: expected `qubits N` header"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_pauli_text("qubits 2 extra\n", "p.txt"),
                       doctest::Contains("trailing text"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_pauli_text("qubits 2\n0.5 XXX\n", "p.txt"),
                       doctest::Contains("p.txt:2"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_pauli_text("qubits 2\nfoo XX\n", "p.txt"),
                       doctest::Contains("expected a number"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_pauli_text("qubits 2\n0.5 QQ\n", "p.txt"),
                       doctest::Contains("invalid Pauli letter"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_pauli_text("", "p.txt"),
                       doctest::Contains("missing `qubits N` header"), config_error);
  CHECK_THROWS_AS((void)parse_pauli_text("qubits 0\n"), config_error);
}

TEST_CASE("sweep CSV round-trips and begins with the units line") {
  std::vector<sweep_csv_row> rows = {
      {"none", 5.0, 1.5, 0.25, 150, 0.01},
      {"delta-norm", 0.2, 40.0, 1e-9, 4000, 0.01},
  };
  const std::string text = sweep_csv(rows);
  CHECK(text.rfind("# units: energies in Jz, times in 1/Jz, hbar = 1\n", 0) == 0);
  CHECK(text.find("approach,ratio,tau,epsilon_at,n_steps,dt\n") != std::string::npos);
  const auto back = parse_sweep_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].approach == "none");
  CHECK(back[0].ratio == 5.0);
  CHECK(back[0].tau == 1.5);
  CHECK(back[0].epsilon == 0.25);
  CHECK(back[0].n_steps == 150);
  CHECK(back[0].dt == 0.01);
  CHECK(back[1].epsilon == 1e-9);
}

TEST_CASE("sweep CSV parsing rejects malformed input") {
  CHECK_THROWS_WITH_AS((void)parse_sweep_csv("tau,eps\n1,2\n", "s.csv"),
                       doctest::Contains("expected header"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_sweep_csv("", "s.csv"),
                       doctest::Contains("missing CSV header"), config_error);
  const std::string hdr = "approach,ratio,tau,epsilon_at,n_steps,dt\n";
  CHECK_THROWS_WITH_AS((void)parse_sweep_csv(hdr + "none,1,2\n", "s.csv"),
                       doctest::Contains("s.csv:2: expected 6 fields"), config_error);
  CHECK_THROWS_WITH_AS((void)parse_sweep_csv(hdr + "none,x,2,3,4,5\n", "s.csv"),
                       doctest::Contains("expected a number"), config_error);
}

TEST_CASE("profile and ratio tables carry the units header") {
  gap_profile_result prof;
  prof.snapshots = {{0.0, {}, {0}, 2.0, 0.0}, {1.0, {}, {0}, 1.0, 0.5}};
  prof.d_min = 1.0;
  prof.D_max = 0.5;
  const std::string dat = profile_dat(prof);
  CHECK(dat.rfind("# units:", 0) == 0);
  CHECK(dat.find("# s  d  D\n") != std::string::npos);
  CHECK(dat.find("\n0  2  0\n") != std::string::npos);

  ratio_row ok;
  ok.ratio = 0.2;
  ok.g_fit = 70.0;
  ok.sigma_g = 15.0;
  ok.g_tilde = 1.5e8;
  ratio_row bad;
  bad.ratio = 5.0;
  bad.status = "gap closure: ...";
  const std::string rdat = ratio_dat({ok, bad});
  CHECK(rdat.find("  70  15  150000000\n") != std::string::npos);
  CHECK(rdat.find("\n5  ") == std::string::npos);  // failed rows are omitted
}

TEST_CASE("json serializers map non-finite values to null") {
  fit_result fit;
  fit.g = 3.5;
  fit.sigma_g = 0.1;
  fit.r2 = 0.99;
  fit.n_points = 7;
  const auto fj = fit_json(fit);
  CHECK(fj["g"] == 3.5);
  CHECK(fj["window"]["eps_floor"] == 0.0);

  ratio_row row;
  row.ratio = 5.0;
  row.status = "gap closure";
  row.alphas = Eigen::VectorXd::Zero(2);
  const auto rj = ratio_json({row});
  REQUIRE(rj.size() == 1);
  CHECK(rj[0]["g_fit"].is_null());  // NaN
  CHECK(rj[0]["status"] == "gap closure");
  CHECK(rj[0]["alphas"].size() == 2);

  optimize_result res;
  res.best.alphas = Eigen::VectorXd::Zero(2);
  res.best_value = std::numeric_limits<double>::infinity();
  res.objective = "g-tilde";
  res.trace.push_back({Eigen::VectorXd::Zero(2), std::numeric_limits<double>::infinity(), false});
  const auto oj = optimize_json(res);
  CHECK(oj["best_value"].is_null());
  CHECK(oj["trace"][0]["value"].is_null());
  CHECK(oj["trace"][0]["feasible"] == false);
  CHECK(oj["n_evaluations"] == 1);

  gap_profile_result prof;
  prof.snapshots = {{0.5, {}, {0, 1}, 1.5, 0.25}};
  prof.d_min = 1.5;
  prof.g_tilde = std::numeric_limits<double>::quiet_NaN();
  const auto pj = profile_json(prof);
  CHECK(pj["g_tilde"].is_null());
  CHECK(pj["snapshots"][0]["band_indices"] == nlohmann::json({0, 1}));
}
