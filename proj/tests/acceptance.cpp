// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracfk/analysis.hpp"
#include "fracfk/field_sim.hpp"
#include "fracfk/fk_solver.hpp"
#include "fracfk/gauss_moments.hpp"
#include "fracfk/model.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/paths.hpp"
#include "fracfk/pde_xval.hpp"
#include "fracfk/quadrature.hpp"
#include "fracfk/rng.hpp"

using namespace fracfk;

namespace {

// Tolerances and sizes.
constexpr double kKernelPartitionTol = 1e-12;
constexpr double kKernelOracleTol = 1e-6;
constexpr double kKernelDisjoint = 0.269649;
constexpr long kMomentSamples = 10'000'000;
constexpr double kMomentRelTol = 0.01;
constexpr double kMomentRejectSigmas = 100.0;
constexpr int kVarFields = 1000;
constexpr double kVarFinalGap = 0.10;
constexpr int kOracleFields = 200;
constexpr int kOraclePaths = 500;
constexpr int kSolverPaths = 100'000;
constexpr double kMollificationAllowance = 0.05;  // fraction of |u - heat flow|
constexpr int kZPaths = 100'000;
constexpr double kZStep = 1e-2;
constexpr int kStructurePaths = 4000;
constexpr double kYSlopeLow = 0.9, kYSlopeHigh = 1.2, kZSlopeLow = 1.0;
constexpr int kIsoFields = 200, kIsoPathsPerField = 10;
constexpr int kAlphaRealizations = 5;
constexpr int kXvalRealizations = 10;
constexpr int kXvalInner = 10'000;
constexpr double kFdAllowance = 0.02;
constexpr double kSigmas = 3.0;

constexpr std::uint64_t kSeed = 20240601;

const ModelParams kModel = make_model(1, 0.75, 0.75, 1.0);

struct Verdict {
  bool pass = false;
  std::string detail;
};

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict kernel_exactness() {
  double worst = 0.0;
  for (double h0 : {0.6, 0.75, 0.9}) {
    for (int n : {16, 64, 256}) {
      std::vector<double> cells;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          cells.push_back(time_cell_weight(h0, double(k) / n, double(k + 1) / n, double(l) / n, double(l + 1) / n));
      worst = std::max(worst, std::abs(pairwise_sum(cells) - 1.0));
    }
  }
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [](double u) {
    auto f = [u](double v) { return alpha_const(0.75) * std::pow(v - u, -0.5); };
    return gauss_kronrod<double, 61>::integrate(f, 2.0, 3.0, 15, 1e-14);
  };
  double oracle = gauss_kronrod<double, 61>::integrate(inner, 0.0, 1.0, 15, 1e-13);
  double closed = time_cell_weight(0.75, 0, 1, 2, 3);
  double rel = std::abs(closed - oracle) / oracle;
  bool pass = worst < kKernelPartitionTol && rel < kKernelOracleTol && std::abs(closed - kKernelDisjoint) < 1e-6;
  return {pass, fmt("partition rel. error %.2e (tol %.0e); disjoint cell %.9f vs adaptive quadrature %.9f "
                    "(rel. %.2e, tol %.0e)",
                    worst, kKernelPartitionTol, closed, oracle, rel, kKernelOracleTol)};
}

Verdict gaussian_moment_oracle() {
  auto eng = substream(kSeed, Stream::Moment, 0);
  std::normal_distribution<double> z;
  double s = 0.0, s2 = 0.0;
  for (long k = 0; k < kMomentSamples; ++k) {
    double v = z(eng);
    double f = v * v * std::exp(v);
    s += f;
    s2 += f * f;
  }
  double n = static_cast<double>(kMomentSamples);
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  double corrected = bilinear_exp_moment({1.0, 1.0, 1.0, 1.0});
  double printed = 3.0 * std::exp(0.5);
  double reject = std::abs(mean - printed) / se;
  bool pass = std::abs(mean - corrected) <= kMomentRelTol * corrected && reject > kMomentRejectSigmas;
  return {pass, fmt("E[Z^2 e^Z] = %.5f +- %.5f; corrected identity %.5f; printed form %.5f rejected by %.0f SE",
                    mean, se, corrected, printed, reject)};
}

Verdict variance_convergence() {
  TimeGrid g = TimeGrid::uniform(0.0, 1.0, 128);
  Vec x0 = {0.0};
  BrownianPath path = simulate_path(g, 1, x0, kSeed, 0);
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    lo = std::min(lo, path(k, 0));
    hi = std::max(hi, path(k, 0));
  }
  lo = std::floor(lo) - 1.0;
  hi = std::ceil(hi) + 1.0;
  auto cells = static_cast<std::size_t>(std::lround((hi - lo) / 0.025));
  FieldSampler sampler(kModel, g, {uniform_axis(lo, hi, cells)});
  const std::vector<double> levels = {0.2, 0.1, 0.05};
  std::vector<Vec> v(levels.size(), Vec(kVarFields));
  parallel_for(kVarFields, 0, [&](std::size_t i) {
    FieldSample f = sampler.draw(kSeed, i);
    for (std::size_t l = 0; l < levels.size(); ++l) v[l][i] = v_mollified(f, path, 0.0, {levels[l], levels[l]});
  });
  double sigma = sigma_self(kModel, path, 0.0).value;
  Vec gaps;
  std::string detail = fmt("sigma_self %.5f;", sigma);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    double m = pairwise_sum(v[l]) / kVarFields, s = 0.0;
    for (double x : v[l]) s += (x - m) * (x - m);
    double var = s / (kVarFields - 1);
    gaps.push_back(std::abs(var - sigma) / sigma);
    detail += fmt(" eps=eta=%.2f var %.5f gap %.1f%%;", levels[l], var, 100 * gaps.back());
  }
  bool monotone = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  bool pass = monotone && gaps.back() < kVarFinalGap;
  detail += fmt(" monotone %s, final gap tol %.0f%%", monotone ? "yes" : "no", 100 * kVarFinalGap);
  return {pass, detail};
}

Verdict solver_consistency() {
  TerminalSpec phi = TerminalSpec::gaussian_bump({0.0}, 0.5);
  SolverConfig cfg;
  cfg.n_paths = kSolverPaths;
  cfg.grid = TimeGrid::uniform(0.0, 1.0, 128);
  Vec x0 = {0.0};
  MCEstimate u = estimate_u(kModel, phi, 0.0, x0, cfg, kSeed);

  MollifierParams m{0.05, 0.05};
  FieldSampler sampler(kModel, cfg.grid, {uniform_axis(-6.0, 6.0, 960)});
  Vec per_field(kOracleFields);
  parallel_for(kOracleFields, 0, [&](std::size_t fi) {
    FieldSample f = sampler.draw(kSeed + 1, fi);
    Vec s(kOraclePaths);
    for (std::size_t j = 0; j < s.size(); ++j) {
      BrownianPath b = simulate_path(cfg.grid, 1, x0, kSeed + 1, fi * kOraclePaths + j);
      s[j] = terminal_value(phi, b.end_point()) * std::exp(v_mollified(f, b, 0.0, m));
    }
    per_field[fi] = pairwise_sum(s) / kOraclePaths;
  });
  MCEstimate oracle = summarize(per_field, kSeed + 1);
  double heat = heat_flow(phi, 1.0, x0);
  double allowance = kMollificationAllowance * std::abs(u.mean - heat);
  double tol = kSigmas * combined(u.std_error, oracle.std_error) + allowance;
  double diff = std::abs(u.mean - oracle.mean);
  return {diff <= tol, fmt("estimate_u %.5f +- %.5f; double MC %.5f +- %.5f; |diff| %.5f vs tol %.5f "
                           "(3 SE + %.0f%% of noise effect %.4f)",
                           u.mean, u.std_error, oracle.mean, oracle.std_error, diff, tol,
                           100 * kMollificationAllowance, u.mean - heat)};
}

Verdict z_cross_oracle() {
  TerminalSpec phi = TerminalSpec::gaussian_bump({0.0}, 0.5);
  SolverConfig cfg;
  cfg.n_paths = kZPaths;
  cfg.grid = TimeGrid::uniform(0.0, 1.0, 64);
  cfg.h_x = kZStep;
  Vec x0 = {0.4};
  MCVectorEstimate pw = estimate_z(kModel, phi, 0.0, x0, cfg, kSeed);
  cfg.z_mode = ZMode::FiniteDifference;
  MCVectorEstimate fd = estimate_z(kModel, phi, 0.0, x0, cfg, kSeed);
  double diff = std::abs(pw.mean[0] - fd.mean[0]);
  double tol = kSigmas * combined(pw.std_error[0], fd.std_error[0]) + kZStep * kZStep;
  return {diff <= tol, fmt("pathwise %.5f +- %.5f; finite difference %.5f +- %.5f; |diff| %.2e vs tol %.2e",
                           pw.mean[0], pw.std_error[0], fd.mean[0], fd.std_error[0], diff, tol)};
}

Verdict holder_exponents() {
  TerminalSpec phi = TerminalSpec::linear({1.0}, 0.0);
  SolverConfig cfg;
  cfg.n_paths = kStructurePaths;
  cfg.grid = TimeGrid::uniform(0.0, 1.0, 128);
  StructureSeries ys, zs;
  for (int k = 6; k >= 3; --k) {
    double lag = std::ldexp(1.0, -k);
    ys.lags.push_back(lag);
    ys.moments.push_back(structure_moment_y(kModel, phi, 0.0, lag, cfg, kSeed).increment);
  }
  for (int k = 5; k >= 2; --k) {
    double lag = std::ldexp(1.0, -k);
    zs.lags.push_back(lag);
    zs.moments.push_back(structure_moment_z(kModel, phi, 0.0, lag, cfg, kSeed).increment);
  }
  HolderFit fy = holder_fit(ys), fz = holder_fit(zs);
  bool ypass = fy.exponent >= kYSlopeLow && fy.exponent <= kYSlopeHigh;
  bool zpass = fz.exponent >= kZSlopeLow;
  std::string detail = fmt("Y slope %.3f [%.3f, %.3f] (need [%.1f, %.1f]) %s; Z slope %.3f [%.3f, %.3f] (need >= %.1f) %s;",
                           fy.exponent, fy.ci_low, fy.ci_high, kYSlopeLow, kYSlopeHigh, ypass ? "ok" : "FAIL",
                           fz.exponent, fz.ci_low, fz.ci_high, kZSlopeLow, zpass ? "ok" : "FAIL");
  detail += " Z moments:";
  for (std::size_t k = 0; k < zs.lags.size(); ++k) detail += fmt(" %.4f@2^%d", zs.moments[k].mean, int(std::log2(zs.lags[k])));
  return {ypass && zpass, detail};
}

Verdict isometry() {
  SolverConfig cfg;
  cfg.grid = TimeGrid::uniform(0.0, 1.0, 128);
  FieldMcConfig fc;
  fc.moll = {0.05, 0.05};
  fc.space_axes = {uniform_axis(-6.0, 6.0, 960)};
  fc.n_fields = kIsoFields;
  fc.paths_per_field = kIsoPathsPerField;
  IsometryResult r = isometry_check(kModel, Integrand::one(), cfg, fc, kSeed);
  double diff = std::abs(r.mc.mean - r.analytic.mean);
  double tol = kSigmas * combined(r.mc.std_error, r.analytic.std_error);
  return {diff <= tol, fmt("smoothed second moment %.5f +- %.5f; quadrature %.5f +- %.5f; |diff| %.5f vs tol %.5f "
                           "(%d field x path samples)",
                           r.mc.mean, r.mc.std_error, r.analytic.mean, r.analytic.std_error, diff, tol,
                           kIsoFields * kIsoPathsPerField)};
}

Verdict alpha_identity() {
  TimeGrid g = TimeGrid::uniform(0.0, 1.0, 128);
  FieldSampler sampler(kModel, g, {uniform_axis(-6.0, 6.0, 240)});
  MollifierParams m{0.1, 0.1};
  Vec x0 = {0.0};
  bool pass = true;
  std::string detail;
  for (int r = 0; r < kAlphaRealizations; ++r) {
    FieldSample f = sampler.draw(kSeed, r);
    BrownianPath b = simulate_path(g, 1, x0, kSeed, r);
    Vec e = alpha_identity_check(kModel, f, m, b, {32, 64, 128});
    bool mono = e[1] < e[0] && e[2] < e[1];
    pass = pass && mono;
    detail += fmt("%s[%.2e %.2e %.2e]", r ? " " : "", e[0], e[1], e[2]);
  }
  return {pass, "rel. errors at partitions 32/64/128: " + detail};
}

Verdict spde_cross_validation() {
  TerminalSpec phi = TerminalSpec::gaussian_bump({0.0}, 0.5);
  PdeGrid grid = PdeGrid::make(1.0, 200, 4.0, 200);
  MollifierParams m{0.1, 0.1};
  FieldSampler sampler(kModel, TimeGrid(grid.t), {uniform_axis(-6.0, 6.0, 300)});
  bool pass = true;
  double worst = 0.0;
  std::string detail;
  for (int r = 0; r < kXvalRealizations; ++r) {
    FieldSample f = sampler.draw(kSeed, r);
    PdeSolution u = solve_mollified_pde(kModel, phi, f, m, grid, Scheme::CrankNicolson);
    FkComparison c = compare_fk(kModel, phi, f, m, u, kXvalInner, kSeed + r, {{0.0, 0.0}})[0];
    double tol = kSigmas * c.mc_se + kFdAllowance * std::abs(c.fd);
    double ratio = std::abs(c.fd - c.mc) / tol;
    worst = std::max(worst, ratio);
    pass = pass && ratio <= 1.0;
    detail += fmt("%s%.4f/%.4f", r ? " " : "", c.fd, c.mc);
  }
  return {pass, fmt("worst |FD - MC| / tol = %.3f; FD/MC per realization: ", worst) + detail};
}

Verdict determinism() {
  Vec x0 = {0.2};
  TerminalSpec phi = TerminalSpec::gaussian_bump({0.1}, 0.5);
  SolverConfig base;
  base.n_paths = 2000;
  base.grid = TimeGrid::uniform(0.0, 1.0, 32);
  FieldSampler sampler(kModel, base.grid, {uniform_axis(-5.0, 5.0, 200)});
  MollifierParams m{0.1, 0.125};
  auto run = [&](int threads) {
    SolverConfig c = base;
    c.threads = threads;
    Vec out;
    auto push = [&out](const MCEstimate& e) {
      out.push_back(e.mean);
      out.push_back(e.std_error);
    };
    push(estimate_u(kModel, phi, 0.0, x0, c, kSeed));
    auto z = estimate_z(kModel, phi, 0.0, x0, c, kSeed);
    out.insert(out.end(), z.mean.begin(), z.mean.end());
    c.z_mode = ZMode::FiniteDifference;
    z = estimate_z(kModel, phi, 0.0, x0, c, kSeed);
    out.insert(out.end(), z.mean.begin(), z.mean.end());
    c.z_mode = ZMode::Pathwise;
    c.antithetic = true;
    push(estimate_u(kModel, phi, 0.0, x0, c, kSeed));
    c.antithetic = false;
    SolverConfig small = c;
    small.n_paths = 200;
    auto sy = structure_moment_y(kModel, phi, 0.25, 0.5, small, kSeed);
    auto sz = structure_moment_z(kModel, phi, 0.25, 0.5, small, kSeed);
    push(sy.increment);
    push(sy.cross);
    push(sz.increment);
    push(sz.cross);
    for (const auto& t : exp_tail_probe(kModel, {1.0, 2.0}, 0.0, c, kSeed)) push(t.at_2n);
    FieldMcConfig fc{m, {uniform_axis(-5.0, 5.0, 200)}, 16, 4};
    auto iso = isometry_check(kModel, Integrand::one(), c, fc, kSeed);
    push(iso.mc);
    push(iso.analytic);
    FieldSample f = sampler.draw(kSeed, 0);
    SolverConfig res = c;
    res.n_paths = 16;
    res.grid = TimeGrid::uniform(0.0, 1.0, 8);
    push(bsde_residual(kModel, phi, f, m, res, 20, kSeed));
    for (const auto& s : sample_field(kModel, base.grid, {uniform_axis(-5.0, 5.0, 200)}, 6, kSeed, threads))
      out.push_back(pairwise_sum(s.values));
    PdeGrid pg = PdeGrid::make(1.0, 40, 4.0, 80);
    FieldSampler ps(kModel, TimeGrid(pg.t), {uniform_axis(-5.0, 5.0, 200)});
    auto cmp = compare_fk(kModel, phi, ps.draw(kSeed, 0), m, pg, 2000, kSeed, {{0.0, 0.0}}, Scheme::CrankNicolson,
                          threads);
    out.push_back(cmp[0].mc);
    out.push_back(cmp[0].mc_se);
    return out;
  };
  Vec one = run(1);
  bool pass = true;
  for (int t : {4, 8}) pass = pass && run(t) == one;
  return {pass, fmt("%zu estimator outputs compared bitwise across 1, 4 and 8 threads", one.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all = {
      {1, "kernel exactness", kernel_exactness},
      {2, "Gaussian moment oracle", gaussian_moment_oracle},
      {3, "variance convergence", variance_convergence},
      {4, "solver consistency", solver_consistency},
      {5, "Z cross-oracle", z_cross_oracle},
      {6, "Hoelder exponents", holder_exponents},
      {7, "isometry", isometry},
      {8, "exponential identity", alpha_identity},
      {9, "SPDE cross-validation", spde_cross_validation},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
