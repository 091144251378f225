#include "fracfk/pde_xval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fracfk/csv.hpp"
#include "fracfk/errors.hpp"
#include "fracfk/fk_solver.hpp"
#include "fracfk/parallel.hpp"

namespace fracfk {

PdeGrid PdeGrid::make(double T, std::size_t time_cells, double L, std::size_t space_cells) {
  if (time_cells < 1 || space_cells < 2) throw std::invalid_argument("PdeGrid too small");
  PdeGrid g;
  g.t = TimeGrid::uniform(0.0, T, time_cells).nodes();
  g.x = uniform_axis(-L, L, space_cells);
  return g;
}

double PdeSolution::at(std::size_t k, double x) const {
  const Vec& xs = grid.x;
  if (x <= xs.front()) return u[k].front();
  if (x >= xs.back()) return u[k].back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t j = static_cast<std::size_t>(it - xs.begin()) - 1;
  double f = (x - xs[j]) / (xs[j + 1] - xs[j]);
  return (1.0 - f) * u[k][j] + f * u[k][j + 1];
}

namespace {

void check_setup(const ModelParams& p, const PdeGrid& g) {
  if (p.d != 1) throw std::invalid_argument("the finite-difference solve is one-dimensional");
  if (g.t.size() < 2 || g.x.size() < 3) throw std::invalid_argument("PdeGrid too small");
  double T = g.t.back();
  if (g.half_width() < 4.0 * std::sqrt(T) - 1e-12) {
    throw std::invalid_argument("PdeGrid half-width must be >= 4 sqrt(T)");
  }
}

Vec potential(const FieldSample& field, const MollifierParams& moll, double t, const Vec& xs) {
  Vec v(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    double x = xs[j];
    v[j] = mollified_noise_eval(field, moll, t, std::span<const double>(&x, 1));
  }
  return v;
}

double heat1(const TerminalSpec& phi, double tau, double x) {
  return heat_flow(phi, tau, std::span<const double>(&x, 1));
}

// Solves the tridiagonal system with constant off-diagonals `off` and
// diagonal `diag`, in place on rhs.
void thomas(double off, const Vec& diag, Vec& rhs) {
  const std::size_t n = diag.size();
  Vec c(n);
  double b = diag[0];
  rhs[0] /= b;
  c[0] = off / b;
  for (std::size_t i = 1; i < n; ++i) {
    b = diag[i] - off * c[i - 1];
    c[i] = off / b;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / b;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace

PdeSolution solve_mollified_pde(const ModelParams& p, const TerminalSpec& phi,
                                const FieldSample& field, const MollifierParams& moll,
                                const PdeGrid& grid, Scheme scheme) {
  check_setup(p, grid);
  const std::size_t N = grid.t.size() - 1, M = grid.x.size() - 1;
  const double dt = grid.dt(), dx = grid.dx(), T = grid.t.back();
  const double r = 0.5 * dt / (dx * dx);  // diffusion number of u_xx / 2
  if (scheme == Scheme::Explicit && dt > 0.5 * dx * dx * (1.0 + 1e-12)) {
    throw StabilityError("explicit scheme needs dt <= dx^2 / 2");
  }
  PdeSolution sol{grid, std::vector<Vec>(N + 1, Vec(M + 1))};
  for (std::size_t j = 0; j <= M; ++j) {
    double x = grid.x[j];
    sol.u[N][j] = terminal_value(phi, std::span<const double>(&x, 1));
  }
  Vec diag(M - 1), rhs(M - 1);
  for (std::size_t k = N; k-- > 0;) {
    const Vec& up = sol.u[k + 1];
    Vec& cur = sol.u[k];
    double tau = T - grid.t[k];
    cur[0] = heat1(phi, tau, grid.x[0]);
    cur[M] = heat1(phi, tau, grid.x[M]);
    if (scheme == Scheme::Explicit) {
      Vec v = potential(field, moll, grid.t[k + 1], grid.x);
      for (std::size_t j = 1; j < M; ++j) {
        cur[j] = up[j] + r * (up[j + 1] - 2.0 * up[j] + up[j - 1]) + dt * v[j] * up[j];
      }
      continue;
    }
    Vec v = potential(field, moll, 0.5 * (grid.t[k] + grid.t[k + 1]), grid.x);
    double vmax = 0.0;
    for (double e : v) vmax = std::max(vmax, std::abs(e));
    if (vmax * dt / 2.0 >= 1.0) throw StabilityError("Crank-Nicolson needs max|W'| dt / 2 < 1");
    // (I - dt/2 A) u_k = (I + dt/2 A) u_{k+1}, A = D2 / 2 + V
    for (std::size_t j = 1; j < M; ++j) {
      double hv = 0.5 * dt * v[j];
      diag[j - 1] = 1.0 + r - hv;
      rhs[j - 1] = (1.0 - r + hv) * up[j] + 0.5 * r * (up[j + 1] + up[j - 1]);
    }
    rhs.front() += 0.5 * r * cur[0];
    rhs.back() += 0.5 * r * cur[M];
    thomas(-0.5 * r, diag, rhs);
    for (std::size_t j = 1; j < M; ++j) cur[j] = rhs[j - 1];
  }
  return sol;
}

namespace {

std::size_t nearest(const Vec& v, double x) {
  auto it = std::min_element(v.begin(), v.end(),
                             [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
  return static_cast<std::size_t>(it - v.begin());
}

}  // namespace

std::vector<FkComparison> compare_fk(const ModelParams& p, const TerminalSpec& phi,
                                     const FieldSample& field, const MollifierParams& moll,
                                     const PdeGrid& grid, int n_inner, std::uint64_t seed,
                                     const std::vector<Probe>& probes, Scheme scheme, int threads) {
  PdeSolution u = solve_mollified_pde(p, phi, field, moll, grid, scheme);
  return compare_fk(p, phi, field, moll, u, n_inner, seed, probes, threads);
}

std::vector<FkComparison> compare_fk(const ModelParams& p, const TerminalSpec& phi,
                                     const FieldSample& field, const MollifierParams& moll,
                                     const PdeSolution& u, int n_inner, std::uint64_t seed,
                                     const std::vector<Probe>& probes, int threads) {
  check_setup(p, u.grid);
  if (n_inner < 2) throw std::invalid_argument("n_inner must be >= 2");
  TimeGrid full(u.grid.t);
  std::vector<FkComparison> out;
  for (const auto& [t, x] : probes) {
    std::size_t k = full.index_of(t);
    TimeGrid g = full.tail(t);
    Vec samples(static_cast<std::size_t>(n_inner));
    parallel_for(samples.size(), resolve_threads(threads), [&](std::size_t i) {
      BrownianPath path = simulate_path(g, 1, std::span<const double>(&x, 1), seed, i);
      Vec w = mollified_along_path(field, path, moll);
      double v = 0.0;
      for (std::size_t m = 0; m + 1 < g.size(); ++m) v += 0.5 * (w[m] + w[m + 1]) * (g[m + 1] - g[m]);
      samples[i] = terminal_value(phi, path.at(g.size() - 1)) * std::exp(v);
    });
    MCEstimate e = summarize(samples, seed);
    FkComparison c;
    c.t = t;
    c.x = x;
    c.fd = u.at(k, x);
    c.mc = e.mean;
    c.mc_se = e.std_error;
    c.abs_error = std::abs(c.fd - c.mc);
    c.rel_error = c.abs_error / std::max(std::abs(c.fd), 1e-300);
    out.push_back(c);
  }
  return out;
}

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Integral of a piecewise-linear f (values on xs) against the N(mu, s^2) density.
double gauss_against_linear(const Vec& xs, const Vec& f, double mu, double s) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    double a = xs[j], b = xs[j + 1];
    double za = (a - mu) / s, zb = (b - mu) / s;
    if (zb < -12.0 || za > 12.0) continue;
    double slope = (f[j + 1] - f[j]) / (b - a);
    double icpt = f[j] - slope * a;
    double mass = norm_cdf(zb) - norm_cdf(za);
    double first = mu * mass - s * (norm_pdf(zb) - norm_pdf(za));
    acc += icpt * mass + slope * first;
  }
  return acc;
}

}  // namespace

double mild_form_residual(const ModelParams& p, const TerminalSpec& phi, const FieldSample& field,
                          const MollifierParams& moll, const PdeGrid& grid, const PdeSolution& u,
                          const std::vector<Probe>& probes) {
  check_setup(p, grid);
  const double T = grid.t.back();
  std::vector<Probe> pr = probes;
  if (pr.empty()) {
    for (double t : {0.0, 0.5 * T})
      for (double x : {-1.0, 0.0, 1.0}) pr.emplace_back(t, x);
  }
  const std::size_t N = grid.t.size() - 1;
  std::vector<Vec> f(N + 1);
  auto source = [&](std::size_t k) -> const Vec& {
    if (f[k].empty()) {
      Vec v = potential(field, moll, grid.t[k], grid.x);
      for (std::size_t j = 0; j < v.size(); ++j) v[j] *= u.u[k][j];
      f[k] = std::move(v);
    }
    return f[k];
  };
  double worst = 0.0;
  for (const auto& [tp, xp] : pr) {
    std::size_t k = nearest(grid.t, tp), j = nearest(grid.x, xp);
    double t = grid.t[k], x = grid.x[j];
    double duhamel = 0.0;
    double prev = source(k)[j];
    for (std::size_t m = k + 1; m <= N; ++m) {
      double cur = gauss_against_linear(grid.x, source(m), x, std::sqrt(grid.t[m] - t));
      duhamel += 0.5 * (prev + cur) * (grid.t[m] - grid.t[m - 1]);
      prev = cur;
    }
    double res = u.u[k][j] - heat1(phi, T - t, x) - duhamel;
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

void write_solution_csv(const PdeSolution& u, std::ostream& os) {
  CsvWriter w(os, {"t", "x", "u"});
  for (std::size_t k = 0; k < u.grid.t.size(); ++k) {
    for (std::size_t j = 0; j < u.grid.x.size(); ++j) {
      w.cell(u.grid.t[k]).cell(u.grid.x[j]).cell(u.u[k][j]);
      w.end_row();
    }
  }
}

}  // namespace fracfk
