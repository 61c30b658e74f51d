#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qfc::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / fs::path("qfc_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& contents = "") const {
    const auto p = path / name;
    if (!contents.empty()) std::ofstream(p) << contents;
    return p.string();
  }
};

}  // namespace

TEST_CASE("budget prints the table product") {
  const auto r = run({"budget"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "product: 0.344 ± 0.008 (34.4 %)"));
  const auto m = run({"--format", "machine", "budget"});
  CHECK(m.out.rfind("format = qfc-report/1\n", 0) == 0);
  CHECK(has(m.out, "[table factors]\nlabel,value,sigma,value_percent,sigma_percent\n"));
}

TEST_CASE("design reports the cascade wavelengths") {
  const auto r = run({"design"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "998.9"));
  CHECK(has(r.out, "1549.0"));
  CHECK(has(r.out, "737.1 nm -> 998.9 nm -> 1549.0 nm"));
}

TEST_CASE("noise flags the stated-versus-computed discrepancy") {
  const auto r = run({"noise", "--measured", "17.4", "--dark", "12.1", "--correction", "det=0.72", "--correction",
                      "tr=0.89", "--bandwidth-ghz", "25", "--reported", "10.4", "--reported-sigma", "0.5"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "8.271"));
  CHECK(has(r.out, "implies an additional unstated factor"));
}

TEST_CASE("rate chain") {
  const auto r = run({"--format", "machine", "rate-chain", "--input-rate", "550000", "--factor", "0.4", "--factor",
                      "0.61", "--factor", "0.29", "--factor", "0.35/0.6"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "output_cps = 22702.1"));
}

TEST_CASE("simulate then fit a background-free histogram") {
  TempDir dir;
  const auto hist = dir.file("h.csv");
  const auto sim = run({"g2-sim", "--sbr-db", "300", "--seed", "1", "--histogram", hist});
  REQUIRE(sim.code == 0);
  CHECK(fs::exists(hist));
  CHECK(fs::exists(hist + ".meta"));
  const auto fit = run({"--format", "machine", "g2-fit", "--histogram", hist, "--curve", dir.file("c.csv"),
                        "--trace", dir.file("t.csv")});
  REQUIRE(fit.code == 0);
  const auto at = fit.out.find("g2_zero = ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(fit.out.substr(at + 10)) < 0.05);
  CHECK(fs::file_size(dir.path / "c.csv") > 0);
  std::ifstream trace(dir.path / "t.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "iteration,cost,damping,sbr_db,tau1_ps,normalization");
}

TEST_CASE("machine output is byte-identical across runs") {
  TempDir dir;
  const std::vector<std::string> sim{"--format", "machine", "g2-sim", "--seed", "9", "--histogram", dir.file("a.csv")};
  const auto a = run(sim);
  const auto first = slurp(dir.path / "a.csv");
  const auto b = run(sim);
  const auto second = slurp(dir.path / "a.csv");
  CHECK(a.out == b.out);
  CHECK(first == second);
  const std::vector<std::string> fit{"--format", "machine", "g2-fit", "--histogram", dir.file("a.csv"), "--jitter", "0"};
  CHECK(run(fit).out == run(fit).out);
  CHECK(run({"--format", "machine", "design"}).out == run({"--format", "machine", "design"}).out);
}

TEST_CASE("--out writes the machine report") {
  TempDir dir;
  const auto path = dir.file("report.txt");
  const auto r = run({"--out", path, "budget"});
  CHECK(r.code == 0);
  CHECK(slurp(path) == run({"--format", "machine", "budget"}).out);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
  CHECK(run({"design", "--stages", "many"}).code == 2);
  CHECK(run({"fit-depletion"}).code == 2);
  CHECK(run({"--format", "xml", "budget"}).code == 2);

  const auto bracket = run({"qpm", "temperature", "--period", "1"});
  CHECK(bracket.code == 1);
  CHECK(has(bracket.err, "error (bracket)"));

  TempDir dir;
  const auto bad = dir.file("bad.csv", "pump_power_w,depletion\n0.1,abc\n");
  const auto parse = run({"fit-depletion", "--data", bad});
  CHECK(parse.code == 1);
  CHECK(has(parse.err, "error (parse)"));

  const auto ledger = dir.file("ledger.csv", "label,value_percent\nx,50\n");
  CHECK(run({"budget", "--ledger", ledger}).code == 1);
}

TEST_CASE("every subcommand has help") {
  CHECK(run({"--help"}).code == 0);
  for (std::vector<std::string> cmd :
       {std::vector<std::string>{"design"}, {"fit-depletion"}, {"budget"}, {"noise"}, {"rate-chain"}, {"g2-sim"},
        {"g2-fit"}, {"spectrum-fit"}, {"qpm"}, {"qpm", "index"}, {"qpm", "period"}, {"qpm", "temperature"},
        {"qpm", "bandwidth"}}) {
    cmd.push_back("--help");
    const auto r = run(cmd);
    CAPTURE(cmd.front());
    CHECK(r.code == 0);
    CHECK(!r.out.empty());
  }
}

TEST_CASE("qpm subcommands") {
  const auto period = run({"--format", "machine", "qpm", "period"});
  CHECK(period.code == 0);
  CHECK(has(period.out, "period_um = 19.2"));
  const auto index = run({"qpm", "index", "--wavelength", "1550"});
  CHECK(index.code == 0);
  const auto outside = run({"qpm", "index", "--wavelength", "300"});
  CHECK(outside.code == 1);
  CHECK(has(outside.err, "error (validity)"));
}

TEST_CASE("fit-depletion and spectrum-fit on generated data") {
  TempDir dir;
  std::ostringstream dep;
  dep << "pump_power_w,depletion\n";
  for (int i = 0; i <= 20; ++i) {
    const double p = 0.1 * i;
    const double s = std::sin(std::sqrt(0.06 * p) * 4.0);
    dep << p << ',' << 0.964 * s * s << '\n';
  }
  const auto d = run({"--format", "machine", "fit-depletion", "--data", dir.file("dep.csv", dep.str())});
  CHECK(d.code == 0);
  CHECK(has(d.out, "eta_max = 0.96"));

  std::ostringstream spec;
  spec << "wavelength_nm,intensity\n";
  for (int i = 0; i <= 1000; ++i) {
    const double x = 725.0 + 0.02 * i;
    const double bg = 100.0 * std::exp(-std::pow((x - 735.0) / 6.0, 4));
    const double pk = 500.0 / (1.0 + std::pow((x - 736.6) / 0.06, 2));
    spec << x << ',' << bg + pk << '\n';
  }
  const auto s = run({"--format", "machine", "spectrum-fit", "--data", dir.file("s.csv", spec.str()), "--peaks", "1",
                      "--model", dir.file("m.txt")});
  CHECK(s.code == 0);
  CHECK(has(s.out, "sbr_db = "));
  CHECK(fs::exists(dir.path / "m.txt"));
}
