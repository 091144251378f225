#include <algorithm>
#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "fracfk/cli.hpp"

using namespace fracfk;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = run_cli(args, o, e);
  return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fracfk_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

json summary_without_time(const fs::path& dir) {
  json j = json::parse(slurp(dir / "summary.json"));
  j.erase("wall_time_s");
  return j;
}

const std::vector<std::string> kSmall = {"--solver.n_paths", "200", "--solver.cells", "16"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("validate rejects h0 = 0.5 with exit code 2") {
    fs::path dir = scratch("validate");
    auto r = run({"validate", "--model.h0", "0.5", "--out", dir.string()});
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find("h0") != std::string::npos);
    auto ok = run({"validate", "--out", dir.string()});
    CHECK(ok.code == kExitOk);
    CHECK(fs::exists(dir / "summary.json"));
  }

  TEST_CASE("the installed binary reports the same exit codes") {
    fs::path dir = scratch("binary");
    std::string base = std::string(FRACFK_CLI_PATH) + " ";
    int s = std::system((base + "validate --model.h0 0.5 --out " + dir.string() + " 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(s) == kExitInvalid);
    s = std::system((base + "no-such-command 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(s) == kExitUsage);
  }

  TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"estimate-y", "stray"}).code == kExitUsage);
    CHECK(run({"estimate-y", "--model.h0"}).code == kExitUsage);
    CHECK(run({"structure", "--target", "w", "--out", scratch("target").string()}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
  }

  TEST_CASE("estimate-y is reproducible byte for byte") {
    fs::path a = scratch("repro");
    auto args = with({"estimate-y", "--seed", "11", "--out", a.string()}, kSmall);
    REQUIRE(run(args).code == kExitOk);
    std::string first_csv = slurp(a / "estimate_y.csv");
    json first = summary_without_time(a);
    REQUIRE(run(args).code == kExitOk);
    CHECK(slurp(a / "estimate_y.csv") == first_csv);
    CHECK(summary_without_time(a).dump() == first.dump());
    CHECK(first["outputs"]["op"] == "estimate_y");
    CHECK(first["outputs"]["n"] == 200);
    CHECK(first["outputs"]["seed"] == 11);
    CHECK(first["config_digest"].get<std::string>().size() == 64);
  }

  TEST_CASE("results and digest do not depend on threads or output directory") {
    fs::path a = scratch("t1"), b = scratch("t4");
    REQUIRE(run(with({"estimate-z", "--threads", "1", "--out", a.string()}, kSmall)).code == kExitOk);
    REQUIRE(run(with({"estimate-z", "--threads", "4", "--out", b.string()}, kSmall)).code == kExitOk);
    json ja = summary_without_time(a), jb = summary_without_time(b);
    CHECK(ja["outputs"].dump() == jb["outputs"].dump());
    CHECK(ja["config_digest"] == jb["config_digest"]);
    CHECK(slurp(a / "estimate_z.csv") == slurp(b / "estimate_z.csv"));
  }

  TEST_CASE("seed changes the digest and the result") {
    fs::path a = scratch("s1"), b = scratch("s2");
    REQUIRE(run(with({"estimate-y", "--seed", "1", "--out", a.string()}, kSmall)).code == kExitOk);
    REQUIRE(run(with({"estimate-y", "--seed", "2", "--out", b.string()}, kSmall)).code == kExitOk);
    json ja = summary_without_time(a), jb = summary_without_time(b);
    CHECK(ja["config_digest"] != jb["config_digest"]);
    CHECK(ja["outputs"]["mean"] != jb["outputs"]["mean"]);
  }

  TEST_CASE("config file and dotted overrides") {
    fs::path dir = scratch("config");
    fs::create_directories(dir);
    fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"model": {"h0": 0.8}, "terminal": {"kind": "cosine", "freq": [2.0]}})";
    auto r = run(with({"estimate-y", "-c", cfg.string(), "--query.x=[0.25]", "--out", (dir / "o").string()}, kSmall));
    REQUIRE(r.code == kExitOk);
    json j = summary_without_time(dir / "o");
    CHECK(j["config"]["model"]["h0"] == 0.8);
    CHECK(j["config"]["terminal"]["kind"] == "cosine");
    CHECK(j["config"]["query"]["x"][0] == 0.25);
    CHECK(j["config"]["solver"]["n_paths"] == 200);
    CHECK(run({"estimate-y", "-c", (dir / "missing.json").string()}).code == kExitInvalid);
    CHECK(run({"estimate-y", "--terminal.kind", "square", "--out", dir.string()}).code == kExitInvalid);
    CHECK(!default_config_text().empty());
  }

  TEST_CASE("structure --target z matches the golden file") {
    fs::path dir = scratch("golden");
    auto r = run({"structure", "--target", "z", "--seed", "5", "--solver.n_paths", "64", "--solver.cells", "16",
                  "--structure.lags_z=[0.0625,0.125,0.25,0.5]", "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    std::string csv = slurp(dir / "structure_z.csv");
    CHECK(csv.rfind("lag,moment,std_error,n\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 5);
    CHECK(csv == slurp(fs::path(FRACFK_TEST_DATA) / "structure_z_golden.csv"));
  }

  TEST_CASE("analysis subcommands run on small settings") {
    fs::path dir = scratch("small");
    std::vector<std::string> field = {"--field.n_fields", "4", "--field.paths_per_field", "2", "--field.space_cells", "60"};
    CHECK(run(with(with({"sample-field", "--out", dir.string()}, kSmall), field)).code == kExitOk);
    CHECK(fs::exists(dir / "field.csv"));
    CHECK(run(with(with({"isometry", "--out", dir.string()}, kSmall), field)).code == kExitOk);
    CHECK(run(with(with({"alpha-identity", "--alpha.partitions=[4,8,16]", "--out", dir.string()}, kSmall), field)).code ==
          kExitOk);
    CHECK(run(with({"tail-probe", "--out", dir.string()}, kSmall)).code == kExitOk);
    CHECK(run(with(with({"residual", "--residual.n_inner", "5", "--solver.n_paths", "10", "--out", dir.string()},
                        {"--solver.cells", "4"}),
                   field))
              .code == kExitOk);
    CHECK(run({"xval-pde", "--pde.time_cells", "40", "--pde.space_cells", "40", "--pde.n_inner", "200", "--out",
               dir.string()})
              .code == kExitOk);
    CHECK(fs::exists(dir / "xval_pde.csv"));
    CHECK(run(with({"regularity", "--solver.n_paths", "50", "--out", dir.string()}, {"--solver.cells", "16",
                                                                                     "--structure.lags_y=[0.0625,0.125,0.25,0.5]",
                                                                                     "--structure.lags_z=[0.0625,0.125,0.25,0.5]"}))
              .code == kExitOk);
  }
}
