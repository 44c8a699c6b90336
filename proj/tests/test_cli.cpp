#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "shapereg/diffeo.hpp"
#include "shapereg/io.hpp"

namespace fs = std::filesystem;
using namespace shapereg;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path sandbox(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "shapereg_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_log = dir / "stdout.log";
  const fs::path err_log = dir / "stderr.log";
  const std::string cmd = std::string(SHAPEREG_CLI_PATH) + " " + args + " > " +
                          out_log.string() + " 2> " + err_log.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_log);
  r.err = slurp(err_log);
  return r;
}

fs::path write_figure_curve(const fs::path& dir, const std::string& name, int K) {
  std::ostringstream csv;
  csv << "t,v1,v2\n";
  for (int i = 0; i < K; ++i) {
    const double t = static_cast<double>(i) / (K - 1);
    csv << fmt_double(t) << "," << fmt_double(std::cos(2.0 * kPi * t)) << ","
        << fmt_double(std::sin(4.0 * kPi * t)) << "\n";
  }
  const fs::path p = dir / name;
  std::ofstream(p) << csv.str();
  return p;
}

fs::path write_line_curve(const fs::path& dir, const std::string& name, int K, bool reversed) {
  std::ostringstream csv;
  csv << "t,v1,v2\n";
  for (int i = 0; i < K; ++i) {
    const double t = static_cast<double>(i) / (K - 1);
    csv << fmt_double(t) << "," << fmt_double(reversed ? 1.0 - t : t) << ",0\n";
  }
  const fs::path p = dir / name;
  std::ofstream(p) << csv.str();
  return p;
}

}  // namespace

TEST_CASE("argument errors exit with code 2") {
  const auto dir = sandbox("args");
  CHECK(run_cli("--help", dir).code == 0);
  CHECK(run_cli("", dir).code == 2);
  CHECK(run_cli("no-such-command", dir).code == 2);
  CHECK(run_cli("reparam-curve --no-such-flag 1", dir).code == 2);
  CHECK(run_cli("reparam-curve --grid 4", dir).code == 2);
  CHECK(run_cli("reparam-curve --epsilon 2", dir).code == 2);
  CHECK(run_cli("interpolate --mode warp", dir).code == 2);
  CHECK(run_cli("interpolate --frames 1", dir).code == 2);
  CHECK(run_cli("bounds --ngrid 10", dir).code == 2);
}

TEST_CASE("curve fit on the builtin pair produces the full artifact set") {
  const auto dir = sandbox("curve_builtin");
  const auto out = dir / "fit";
  const RunResult r = run_cli("reparam-curve --layers 3 --basis 3 --grid 256 --max-iter 40 --out " +
                                  out.string(),
                              dir);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("loss ", 0) == 0);

  for (const char* name : {"net.json", "phi.csv", "reparametrized.csv", "convergence.csv", "run.json"})
    CHECK(fs::exists(out / name));

  const DiffeoNet net = load_net((out / "net.json").string());
  CHECK(net.dim == 1);
  CHECK(net.num_layers() == 3);
  CHECK(net.layer_size() == 3);
  CHECK(net_feasible(net));

  const nlohmann::json run = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(run["command"] == "reparam-curve");
  CHECK(run["layers"] == 3);
  CHECK(run["result"]["E0"].get<double>() > run["result"]["E_final"].get<double>());
  CHECK(run["result"]["relative_loss"].get<double>() < 1.0);
  CHECK(!run["result"]["stop_reason"].get<std::string>().empty());

  const std::string phi = slurp(out / "phi.csv");
  CHECK(phi.rfind("x,phi\n", 0) == 0);
  CHECK(std::count(phi.begin(), phi.end(), '\n') == 257);

  const SampledCurve rep = read_curve_csv((out / "reparametrized.csv").string());
  CHECK(rep.K() == 256);
  CHECK(rep.d() == 2);

  const std::string conv = slurp(out / "convergence.csv");
  CHECK(conv.rfind("iter,loss,grad_norm,step,projected\n", 0) == 0);
}

TEST_CASE("curve fits are deterministic across reruns") {
  const auto dir = sandbox("determinism");
  const std::string common = "reparam-curve --layers 2 --basis 3 --grid 128 --max-iter 20 --out ";
  const auto out1 = dir / "a";
  const auto out2 = dir / "b";
  CHECK(run_cli(common + out1.string(), dir).code == 0);
  CHECK(run_cli(common + out2.string(), dir).code == 0);
  CHECK(slurp(out1 / "net.json") == slurp(out2 / "net.json"));
  CHECK(slurp(out1 / "convergence.csv") == slurp(out2 / "convergence.csv"));
  CHECK(slurp(out1 / "phi.csv") == slurp(out2 / "phi.csv"));
}

TEST_CASE("identical inputs yield the identity warp and zero loss") {
  const auto dir = sandbox("identical");
  const auto curve = write_figure_curve(dir, "curve.csv", 64);
  const auto out = dir / "fit";
  const RunResult r = run_cli("reparam-curve " + curve.string() + " " + curve.string() +
                                  " --layers 2 --basis 3 --out " + out.string(),
                              dir);
  CHECK(r.code == 0);
  const nlohmann::json run = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(run["result"]["E0"].get<double>() < 1e-25);
  CHECK(run["result"]["E_final"].get<double>() < 1e-25);
  CHECK(run["result"]["iters"].get<int>() == 0);

  // the fitted warp is the identity on the whole grid
  std::istringstream phi(slurp(out / "phi.csv"));
  std::string line;
  std::getline(phi, line);
  while (std::getline(phi, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const double x = std::strtod(line.substr(0, comma).c_str(), nullptr);
    const double y = std::strtod(line.substr(comma + 1).c_str(), nullptr);
    CHECK(x == y);
  }
}

TEST_CASE("broken inputs exit with code 2 and write no artifacts") {
  const auto dir = sandbox("broken");
  const auto good = write_figure_curve(dir, "good.csv", 32);
  const auto bad = dir / "bad.csv";
  std::ofstream(bad) << "t,v1\n0,1\n0.5,oops\n1,1\n";
  const auto out = dir / "fit";

  const RunResult r = run_cli("reparam-curve " + bad.string() + " " + good.string() + " --out " +
                                  out.string(),
                              dir);
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error:", 0) == 0);
  CHECK(!fs::exists(out / "run.json"));
  CHECK(!fs::exists(out / "net.json"));

  const auto tiny = dir / "tiny.pgm";
  std::ofstream(tiny) << "P2\n3 3\n255\n0 0 0 0 0 0 0 0 0\n";
  const RunResult s = run_cli("reparam-surface " + tiny.string() + " " + tiny.string() +
                                  " --out " + out.string(),
                              dir);
  CHECK(s.code == 2);
  CHECK(!fs::exists(out / "run.json"));
}

TEST_CASE("direct interpolation emits frames with a manifest") {
  const auto dir = sandbox("interp_direct");
  const auto out = dir / "path";
  const RunResult r = run_cli("interpolate --mode direct --grid 64 --frames 3 --out " +
                                  out.string(),
                              dir);
  CHECK(r.code == 0);
  const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "frame_manifest.json"));
  REQUIRE(manifest["taus"].size() == 3);
  CHECK(manifest["taus"][0].get<double>() == 0.0);
  CHECK(manifest["taus"][2].get<double>() == 1.0);
  REQUIRE(manifest["files"].size() == 3);

  const SampledCurve f0 = read_curve_csv((out / "frame_00.csv").string());
  const SampledCurve f2 = read_curve_csv((out / "frame_02.csv").string());
  CHECK(f0.K() == 64);
  CHECK(f2.K() == 64);
  // endpoints differ: one side of the builtin pair is warped
  CHECK((f0.values - f2.values).cwiseAbs().maxCoeff() > 0.05);
  const nlohmann::json run = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(run["mode"] == "direct");
}

TEST_CASE("geodesic interpolation of a curve with itself is constant") {
  const auto dir = sandbox("interp_geodesic");
  const auto curve = write_figure_curve(dir, "curve.csv", 48);
  const auto out = dir / "path";
  const RunResult r = run_cli("interpolate " + curve.string() + " " + curve.string() +
                                  " --mode geodesic --frames 3 --out " + out.string(),
                              dir);
  CHECK(r.code == 0);
  CHECK(slurp(out / "frame_00.csv") == slurp(out / "frame_02.csv"));
}

TEST_CASE("vanishing srvt combinations exit with code 5") {
  const auto dir = sandbox("vanishing");
  const auto fwd = write_line_curve(dir, "fwd.csv", 32, false);
  const auto rev = write_line_curve(dir, "rev.csv", 32, true);
  const RunResult r = run_cli("interpolate " + fwd.string() + " " + rev.string() +
                                  " --mode geodesic --frames 3 --out " + (dir / "path").string(),
                              dir);
  CHECK(r.code == 5);
  CHECK(r.err.rfind("error:", 0) == 0);
  CHECK(r.err.find("tau") != std::string::npos);
}

TEST_CASE("sweep writes and echoes the per-cell table") {
  const auto dir = sandbox("sweep");
  const auto out = dir / "sw";
  const RunResult r = run_cli("sweep --layers 0,2 --basis 2 --grid 128 --max-iter 25 --out " +
                                  out.string(),
                              dir);
  CHECK(r.code == 0);
  const std::string csv = slurp(out / "sweep.csv");
  CHECK(csv.rfind("L,M,final_loss,iters,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\n0,2,") != std::string::npos);
  CHECK(csv.find("\n2,2,") != std::string::npos);
  CHECK(r.out.find("L,M,final_loss") != std::string::npos);
}

TEST_CASE("bounds with zero runs prints the constants table only") {
  const auto dir = sandbox("bounds_table");
  const auto out = dir / "b";
  const RunResult r = run_cli("bounds --runs 0 --out " + out.string(), dir);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("k,Mk\n", 0) == 0);
  CHECK(r.out.find("10,282137824") != std::string::npos);
  CHECK(slurp(out / "bound_report.csv") == "k,L,M,strategy,seed,sum_norm,comp_norm,ratio\n");
  const nlohmann::json summary = nlohmann::json::parse(slurp(out / "bound_summary.json"));
  CHECK(summary["per_cell"].is_array());
  CHECK(summary["per_cell"].empty());
  CHECK(fs::exists(out / "run.json"));
}

TEST_CASE("the baseline comparison favors the deep parametrization") {
  const auto dir = sandbox("compare");
  const auto out = dir / "cmp";
  const RunResult r = run_cli("compare-gd --grid 256 --max-iter 50 --out " + out.string(), dir);
  CHECK(r.code == 0);
  for (const char* name :
       {"gd_convergence.csv", "deep_convergence.csv", "gd_phi.csv", "deep_phi.csv", "run.json"})
    CHECK(fs::exists(out / name));
  const nlohmann::json run = nlohmann::json::parse(slurp(out / "run.json"));
  const double gd = run["gd"]["E_final"].get<double>();
  const double deep = run["deep"]["E_final"].get<double>();
  CHECK(deep < gd);
  CHECK(gd < run["gd"]["E0"].get<double>());
}
