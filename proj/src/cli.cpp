#include "fracfk/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fracfk/analysis.hpp"
#include "fracfk/csv.hpp"
#include "fracfk/errors.hpp"
#include "fracfk/field_sim.hpp"
#include "fracfk/fk_solver.hpp"
#include "fracfk/model.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/paths.hpp"
#include "fracfk/pde_xval.hpp"

namespace fracfk {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kCommands = {"validate",       "sample-field", "estimate-y",
                                            "estimate-z",     "structure",    "regularity",
                                            "residual",       "isometry",     "alpha-identity",
                                            "tail-probe",     "xval-pde"};

constexpr const char* kDefaults = R"({
  "model": {"d": 1, "h0": 0.75, "h": [0.75], "beta": [1.0], "T": 1.0, "amplitude": 1.0},
  "terminal": {"kind": "gaussian_bump", "c": 1.0, "a": [1.0], "freq": [1.0],
               "center": [0.0], "width": 0.5, "scale": 1.0},
  "solver": {"n_paths": 2000, "cells": 64, "z_mode": "pathwise", "h_x": 0.0, "antithetic": false},
  "mollifier": {"eps": 0.1, "eta": 0.1},
  "query": {"t": 0.0, "x": [0.0]},
  "structure": {"t0": 0.0,
                "lags_y": [0.015625, 0.03125, 0.0625, 0.125],
                "lags_z": [0.03125, 0.0625, 0.125, 0.25]},
  "field": {"space_half_width": 6.0, "space_cells": 240, "n_fields": 100, "paths_per_field": 10},
  "residual": {"n_inner": 100, "levels": 1},
  "alpha": {"partitions": [16, 32, 64]},
  "tail": {"t": 0.0, "lambdas": [-2.0, -1.0, 0.0, 1.0, 2.0]},
  "pde": {"time_cells": 200, "space_cells": 200, "scheme": "crank_nicolson",
          "n_inner": 10000, "probes": [[0.0, 0.0]]},
  "seed": 20240601,
  "output_dir": "fracfk_out",
  "threads": 0
})";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Run {
  json cfg;
  ModelParams model;
  TerminalSpec phi;
  SolverConfig solver;
  MollifierParams moll;
  std::uint64_t seed = 0;
  fs::path out_dir;
  std::string digest;
};

Vec to_vec(const json& j) { return j.get<Vec>(); }

ModelParams model_from(const json& m) {
  ModelParams p;
  p.d = m.at("d").get<int>();
  p.hurst.h0 = m.at("h0").get<double>();
  p.hurst.h = to_vec(m.at("h"));
  p.weight.betas = to_vec(m.at("beta"));
  p.weight.amplitude = m.value("amplitude", 1.0);
  p.horizon = m.at("T").get<double>();
  return p;
}

Vec fit_dim(Vec v, int d, double fill) {
  v.resize(static_cast<std::size_t>(d), v.empty() ? fill : v.back());
  return v;
}

TerminalSpec terminal_from(const json& t, int d) {
  std::string kind = t.at("kind").get<std::string>();
  TerminalSpec s;
  if (kind == "constant") {
    s = TerminalSpec::constant(t.at("c").get<double>());
  } else if (kind == "linear") {
    s = TerminalSpec::linear(fit_dim(to_vec(t.at("a")), d, 1.0), t.at("c").get<double>());
  } else if (kind == "cosine") {
    s = TerminalSpec::cosine(fit_dim(to_vec(t.at("freq")), d, 1.0));
  } else if (kind == "gaussian_bump") {
    s = TerminalSpec::gaussian_bump(fit_dim(to_vec(t.at("center")), d, 0.0), t.at("width").get<double>());
  } else {
    throw std::invalid_argument("unknown terminal kind '" + kind + "'");
  }
  s.scale = t.value("scale", 1.0);
  return s;
}

std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

void apply_override(json& cfg, const std::string& dotted, const std::string& text) {
  std::string ptr = "/" + dotted;
  std::replace(ptr.begin(), ptr.end(), '.', '/');
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  cfg[json::json_pointer(ptr)] = value;
}

std::vector<std::string> validation_errors(const Run& r) {
  std::vector<std::string> v = validate_params(r.model).violations;
  if (r.solver.n_paths < 2) v.push_back("solver.n_paths must be >= 2");
  if (!(r.moll.eps > 0.0 && r.moll.eta > 0.0)) v.push_back("mollifier eps and eta must be > 0");
  if (r.cfg.at("solver").at("cells").get<int>() < 2) v.push_back("solver.cells must be >= 2");
  return v;
}

Run resolve(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
            const std::optional<std::uint64_t>& seed, const std::optional<int>& threads,
            const std::optional<std::string>& out) {
  Run r;
  r.cfg = json::parse(kDefaults);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read config '" + config_path + "'");
    r.cfg.merge_patch(json::parse(in));
  }
  for (const auto& [k, v] : overrides) apply_override(r.cfg, k, v);
  if (seed) r.cfg["seed"] = *seed;
  if (out) r.cfg["output_dir"] = *out;
  if (threads) {
    r.cfg["threads"] = *threads;
  } else if (std::getenv("FRACFK_THREADS")) {
    r.cfg["threads"] = resolve_threads(0);
  }

  r.model = model_from(r.cfg.at("model"));
  r.phi = terminal_from(r.cfg.at("terminal"), r.model.d);
  const json& s = r.cfg.at("solver");
  r.solver.n_paths = s.at("n_paths").get<int>();
  int cells = std::max(s.at("cells").get<int>(), 1);
  r.solver.grid = TimeGrid::uniform(0.0, r.model.horizon > 0.0 ? r.model.horizon : 1.0,
                                    static_cast<std::size_t>(cells));
  std::string zm = s.at("z_mode").get<std::string>();
  if (zm != "pathwise" && zm != "finite_difference") {
    throw std::invalid_argument("solver.z_mode must be pathwise or finite_difference");
  }
  r.solver.z_mode = zm == "pathwise" ? ZMode::Pathwise : ZMode::FiniteDifference;
  r.solver.h_x = s.at("h_x").get<double>();
  r.solver.antithetic = s.at("antithetic").get<bool>();
  r.solver.threads = resolve_threads(r.cfg.at("threads").get<int>());
  r.moll.eps = r.cfg.at("mollifier").at("eps").get<double>();
  r.moll.eta = r.cfg.at("mollifier").at("eta").get<double>();
  r.seed = r.cfg.at("seed").get<std::uint64_t>();
  r.out_dir = r.cfg.at("output_dir").get<std::string>();

  json digestable = r.cfg;
  digestable.erase("threads");
  digestable.erase("output_dir");
  r.digest = sha256_hex(digestable.dump());
  return r;
}

json estimate_json(const MCEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}, {"seed", e.seed}};
}

std::vector<Vec> field_axes(const Run& r) {
  const json& f = r.cfg.at("field");
  double w = f.at("space_half_width").get<double>();
  auto cells = static_cast<std::size_t>(f.at("space_cells").get<int>());
  return std::vector<Vec>(static_cast<std::size_t>(r.model.d), uniform_axis(-w, w, cells));
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write '" + p.string() + "'");
  o << text;
}

json structure_series(const Run& r, const std::string& target, StructureSeries* series) {
  const json& st = r.cfg.at("structure");
  Vec lags = to_vec(st.at(target == "y" ? "lags_y" : "lags_z"));
  double t0 = st.at("t0").get<double>();
  std::ostringstream csv;
  CsvWriter w(csv, {"lag", "moment", "std_error", "n"});
  json rows = json::array();
  for (double lag : lags) {
    StructureMoments m = target == "y"
                             ? structure_moment_y(r.model, r.phi, t0, t0 + lag, r.solver, r.seed)
                             : structure_moment_z(r.model, r.phi, t0, t0 + lag, r.solver, r.seed);
    w.cell(lag).cell(m.increment.mean).cell(m.increment.std_error).cell(m.increment.n);
    w.end_row();
    rows.push_back({{"lag", lag},
                    {"increment", estimate_json(m.increment)},
                    {"cross", estimate_json(m.cross)},
                    {"first", estimate_json(m.first)},
                    {"second", estimate_json(m.second)}});
    if (series) {
      series->lags.push_back(lag);
      series->moments.push_back(m.increment);
    }
  }
  write_text(r.out_dir / ("structure_" + target + ".csv"), csv.str());
  return rows;
}

json cmd_validate(const Run& r) { return {{"ok", true}, {"alpha", r.model.alpha()}}; }

json cmd_sample_field(const Run& r) {
  FieldSampler sampler(r.model, r.solver.grid, field_axes(r));
  FieldSample f = sampler.draw(r.seed, 0);
  std::ostringstream csv;
  write_field_csv(f, csv);
  write_text(r.out_dir / "field.csv", csv.str());
  double mx = 0.0;
  for (double v : f.values) mx = std::max(mx, std::abs(v));
  return {{"time_nodes", f.time_grid.size()}, {"space_nodes", f.space_size()}, {"max_abs", mx}};
}

json cmd_estimate(const Run& r, bool z) {
  double t = r.cfg.at("query").at("t").get<double>();
  Vec x = fit_dim(to_vec(r.cfg.at("query").at("x")), r.model.d, 0.0);
  std::ostringstream csv;
  CsvWriter w(csv, {"op", "t", "component", "mean", "std_error", "n", "seed"});
  json rec = {{"op", z ? "estimate_z" : "estimate_y"}, {"params_digest", r.digest}, {"t", t}, {"x", x}};
  if (!z) {
    MCEstimate e = estimate_u(r.model, r.phi, t, x, r.solver, r.seed);
    rec.update(estimate_json(e));
    w.cell("estimate_y").cell(t).cell(0LL).cell(e.mean).cell(e.std_error).cell(e.n).cell(
        static_cast<long long>(e.seed));
    w.end_row();
  } else {
    MCVectorEstimate e = estimate_z(r.model, r.phi, t, x, r.solver, r.seed);
    rec["mean"] = e.mean;
    rec["std_error"] = e.std_error;
    rec["n"] = e.n;
    rec["seed"] = e.seed;
    for (std::size_t i = 0; i < e.mean.size(); ++i) {
      w.cell("estimate_z").cell(t).cell(static_cast<long long>(i)).cell(e.mean[i]).cell(e.std_error[i]).cell(
          e.n).cell(static_cast<long long>(e.seed));
      w.end_row();
    }
  }
  write_text(r.out_dir / (z ? "estimate_z.csv" : "estimate_y.csv"), csv.str());
  return rec;
}

json cmd_structure(const Run& r, const std::string& target) {
  if (target != "y" && target != "z") throw UsageError("--target must be y or z");
  return {{"target", target}, {"series", structure_series(r, target, nullptr)}};
}

json fit_json(const HolderFit& f) {
  return {{"exponent", f.exponent}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high}, {"intercept", f.intercept}};
}

json cmd_regularity(const Run& r) {
  StructureSeries sy, sz;
  json y = structure_series(r, "y", &sy);
  json z = structure_series(r, "z", &sz);
  auto fit_or_error = [](const StructureSeries& s) -> json {
    try {
      return fit_json(holder_fit(s));
    } catch (const DegenerateSeries& e) {
      return {{"error", e.what()}};
    }
  };
  return {{"y", {{"series", y}, {"fit", fit_or_error(sy)}}}, {"z", {{"series", z}, {"fit", fit_or_error(sz)}}}};
}

json cmd_residual(const Run& r) {
  FieldSampler sampler(r.model, r.solver.grid, field_axes(r));
  FieldSample f = sampler.draw(r.seed, 0);
  int n_inner = r.cfg.at("residual").at("n_inner").get<int>();
  int levels = std::max(r.cfg.at("residual").at("levels").get<int>(), 1);
  auto res = bsde_residual_refinement(r.model, r.phi, f, r.moll, r.solver, n_inner, r.seed, levels);
  std::ostringstream csv;
  CsvWriter w(csv, {"cells", "mean_square_residual", "std_error", "n"});
  json rows = json::array();
  std::size_t cells = r.solver.grid.cells();
  for (const auto& e : res) {
    w.cell(static_cast<long long>(cells)).cell(e.mean).cell(e.std_error).cell(e.n);
    w.end_row();
    json j = estimate_json(e);
    j["cells"] = cells;
    rows.push_back(j);
    cells *= 2;
  }
  write_text(r.out_dir / "residual.csv", csv.str());
  return {{"levels", rows}};
}

json cmd_isometry(const Run& r) {
  FieldMcConfig fc;
  fc.moll = r.moll;
  fc.space_axes = field_axes(r);
  fc.n_fields = r.cfg.at("field").at("n_fields").get<int>();
  fc.paths_per_field = r.cfg.at("field").at("paths_per_field").get<int>();
  IsometryResult res = isometry_check(r.model, Integrand::one(), r.solver, fc, r.seed);
  return {{"mc", estimate_json(res.mc)}, {"analytic", estimate_json(res.analytic)}};
}

json cmd_alpha(const Run& r) {
  FieldSampler sampler(r.model, r.solver.grid, field_axes(r));
  FieldSample f = sampler.draw(r.seed, 0);
  Vec start(static_cast<std::size_t>(r.model.d), 0.0);
  BrownianPath path = simulate_path(r.solver.grid, r.model.d, start, r.seed, 0);
  auto parts = r.cfg.at("alpha").at("partitions").get<std::vector<int>>();
  Vec errs = alpha_identity_check(r.model, f, r.moll, path, parts);
  std::ostringstream csv;
  CsvWriter w(csv, {"partition", "rel_error"});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    w.cell(static_cast<long long>(parts[i])).cell(errs[i]);
    w.end_row();
  }
  write_text(r.out_dir / "alpha_identity.csv", csv.str());
  return {{"partitions", parts}, {"rel_errors", errs}};
}

json cmd_tail(const Run& r) {
  Vec lambdas = to_vec(r.cfg.at("tail").at("lambdas"));
  double t = r.cfg.at("tail").at("t").get<double>();
  auto probes = exp_tail_probe(r.model, lambdas, t, r.solver, r.seed);
  std::ostringstream csv;
  CsvWriter w(csv, {"lambda", "mean_n", "std_error_n", "mean_2n", "std_error_2n", "stable"});
  json rows = json::array();
  for (const auto& tp : probes) {
    w.cell(tp.lambda).cell(tp.at_n.mean).cell(tp.at_n.std_error).cell(tp.at_2n.mean).cell(tp.at_2n.std_error).cell(
        tp.stable ? "true" : "false");
    w.end_row();
    rows.push_back({{"lambda", tp.lambda},
                    {"at_n", estimate_json(tp.at_n)},
                    {"at_2n", estimate_json(tp.at_2n)},
                    {"stable", tp.stable}});
  }
  write_text(r.out_dir / "tail_probe.csv", csv.str());
  return {{"probes", rows}};
}

json cmd_xval(const Run& r) {
  if (r.model.d != 1) throw std::invalid_argument("xval-pde supports d = 1 only");
  const json& pc = r.cfg.at("pde");
  std::vector<Probe> probes;
  double xmax = 0.0;
  for (const auto& pr : pc.at("probes")) {
    probes.emplace_back(pr.at(0).get<double>(), pr.at(1).get<double>());
    xmax = std::max(xmax, std::abs(pr.at(1).get<double>()));
  }
  double T = r.model.horizon;
  double L = 4.0 * std::sqrt(T) + xmax;
  auto nt = static_cast<std::size_t>(pc.at("time_cells").get<int>());
  auto nx = static_cast<std::size_t>(pc.at("space_cells").get<int>());
  PdeGrid grid = PdeGrid::make(T, nt, L, nx);
  std::string sch = pc.at("scheme").get<std::string>();
  if (sch != "crank_nicolson" && sch != "explicit") {
    throw std::invalid_argument("pde.scheme must be crank_nicolson or explicit");
  }
  Scheme scheme = sch == "explicit" ? Scheme::Explicit : Scheme::CrankNicolson;

  double half = std::max(r.cfg.at("field").at("space_half_width").get<double>(), L + 4.0 * r.moll.eps);
  double dxf = grid.dx();
  auto cells = static_cast<std::size_t>(std::ceil(2.0 * half / dxf));
  FieldSampler sampler(r.model, TimeGrid(grid.t), {uniform_axis(-half, half, cells)});
  FieldSample f = sampler.draw(r.seed, 0);
  PdeSolution u = solve_mollified_pde(r.model, r.phi, f, r.moll, grid, scheme);
  auto cmp = compare_fk(r.model, r.phi, f, r.moll, u, pc.at("n_inner").get<int>(), r.seed, probes,
                        r.solver.threads);
  double mild = mild_form_residual(r.model, r.phi, f, r.moll, grid, u);
  std::ostringstream csv;
  CsvWriter w(csv, {"t", "x", "fd", "mc", "mc_se", "rel_error"});
  json rows = json::array();
  for (const auto& c : cmp) {
    w.cell(c.t).cell(c.x).cell(c.fd).cell(c.mc).cell(c.mc_se).cell(c.rel_error);
    w.end_row();
    rows.push_back({{"t", c.t}, {"x", c.x}, {"fd", c.fd}, {"mc", c.mc}, {"mc_se", c.mc_se},
                    {"rel_error", c.rel_error}});
  }
  write_text(r.out_dir / "xval_pde.csv", csv.str());
  std::ostringstream sol;
  write_solution_csv(u, sol);
  write_text(r.out_dir / "pde_solution.csv", sol.str());
  return {{"comparisons", rows}, {"mild_form_residual", mild}};
}

std::string usage() {
  std::string s = "usage: fracfk <subcommand> [--config FILE] [--seed N] [--threads N] [--out DIR]\n"
                  "                  [--target y|z] [--section.key VALUE ...]\nsubcommands:";
  for (const auto& c : kCommands) s += " " + c;
  return s + "\n";
}

}  // namespace

std::string default_config_text() { return json::parse(kDefaults).dump(2); }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? kExitUsage : kExitOk;
  }
  const std::string& command = args[0];
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    err << "unknown subcommand '" << command << "'\n" << usage();
    return kExitUsage;
  }

  CLI::App app{"fracfk " + command};
  app.allow_extras();
  std::string config_path, target = "y";
  std::uint64_t seed_v = 0;
  int threads_v = 0;
  std::string out_v;
  auto* o_seed = app.add_option("--seed", seed_v, "RNG seed");
  auto* o_threads = app.add_option("--threads", threads_v, "worker threads");
  auto* o_out = app.add_option("--out", out_v, "output directory");
  app.add_option("--config,-c", config_path, "JSON config file");
  app.add_option("--target", target, "structure target (y or z)");
  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help() << usage();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << usage();
    return kExitUsage;
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> extra = app.remaining();
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const std::string& a = extra[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      err << "unexpected argument '" << a << "'\n" << usage();
      return kExitUsage;
    }
    std::string key = a.substr(2);
    auto eq = key.find('=');
    if (eq != std::string::npos) {
      overrides.emplace_back(key.substr(0, eq), key.substr(eq + 1));
    } else if (i + 1 < extra.size()) {
      overrides.emplace_back(key, extra[++i]);
    } else {
      err << "override '" << a << "' needs a value\n";
      return kExitUsage;
    }
  }

  auto t_start = std::chrono::steady_clock::now();
  Run run;
  try {
    run = resolve(config_path, overrides,
                  o_seed->count() ? std::optional<std::uint64_t>(seed_v) : std::nullopt,
                  o_threads->count() ? std::optional<int>(threads_v) : std::nullopt,
                  o_out->count() ? std::optional<std::string>(out_v) : std::nullopt);
  } catch (const std::exception& e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitInvalid;
  }
  auto violations = validation_errors(run);
  if (!violations.empty()) {
    err << "config validation failed:\n";
    for (const auto& v : violations) err << "  " << v << "\n";
    return kExitInvalid;
  }

  try {
    fs::create_directories(run.out_dir);
    json outputs;
    if (command == "validate") outputs = cmd_validate(run);
    else if (command == "sample-field") outputs = cmd_sample_field(run);
    else if (command == "estimate-y") outputs = cmd_estimate(run, false);
    else if (command == "estimate-z") outputs = cmd_estimate(run, true);
    else if (command == "structure") outputs = cmd_structure(run, target);
    else if (command == "regularity") outputs = cmd_regularity(run);
    else if (command == "residual") outputs = cmd_residual(run);
    else if (command == "isometry") outputs = cmd_isometry(run);
    else if (command == "alpha-identity") outputs = cmd_alpha(run);
    else if (command == "tail-probe") outputs = cmd_tail(run);
    else outputs = cmd_xval(run);

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    json summary = {{"command", command},
                    {"config_digest", run.digest},
                    {"config", run.cfg},
                    {"outputs", outputs},
                    {"wall_time_s", wall}};
    write_text(run.out_dir / "summary.json", summary.dump(2) + "\n");
    out << outputs.dump() << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << e.what() << "\n" << usage();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace fracfk
