#include "fracfk/fk_solver.hpp"

#include <cmath>
#include <stdexcept>

#include "fracfk/gauss_moments.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/quadrature.hpp"

namespace fracfk {

MCEstimate summarize(std::span<const double> samples, std::uint64_t seed) {
  MCEstimate e;
  e.n = static_cast<long long>(samples.size());
  e.seed = seed;
  if (samples.empty()) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    Vec dev(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double r = samples[i] - e.mean;
      dev[i] = r * r;
    }
    double var = pairwise_sum(dev) / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return e;
}

namespace {

void check_config(const ModelParams& p, const SolverConfig& cfg, std::span<const double> x) {
  if (cfg.n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  if (static_cast<int>(x.size()) != p.d) throw std::invalid_argument("point has wrong dimension");
  if (std::abs(cfg.grid.back() - p.horizon) > 1e-12 * std::max(1.0, p.horizon)) {
    throw std::invalid_argument("solver grid must end at the horizon T");
  }
}

// phi(B_T) e^{Sigma/2} for one path started at x
double y_sample(const ModelParams& p, const TerminalSpec& phi, const TimeKernel& k,
                const BrownianPath& path) {
  Interval iv{path.grid.front(), path.grid.back()};
  double sig = sigma_self(p, k, path, iv).value;
  return terminal_value(phi, path.at(path.grid.size() - 1)) * exp_moment(sig);
}

struct PathSet {
  int samples;  // independent sample units
  bool antithetic;
};

PathSet path_set(const SolverConfig& cfg) {
  if (cfg.antithetic) return {std::max(cfg.n_paths / 2, 2), true};
  return {cfg.n_paths, false};
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

MCEstimate estimate_u(const ModelParams& p, const TerminalSpec& phi, double t,
                      std::span<const double> x, const SolverConfig& cfg, std::uint64_t seed) {
  check_config(p, cfg, x);
  TimeGrid g = cfg.grid.tail(t);
  TimeKernel k(p.hurst.h0, g);
  PathSet ps = path_set(cfg);
  Vec samples(static_cast<std::size_t>(ps.samples));
  parallel_for(samples.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    double v = y_sample(p, phi, k, simulate_path(g, p.d, x, seed, i));
    if (ps.antithetic) v = 0.5 * (v + y_sample(p, phi, k, simulate_path(g, p.d, x, seed, i, true)));
    samples[i] = v;
  });
  return summarize(samples, seed);
}

namespace {

// One pathwise gradient sample: (grad phi + phi grad Sigma / 2) e^{Sigma/2}.
void z_pathwise(const ModelParams& p, const TerminalSpec& phi, const TimeKernel& k,
                const BrownianPath& path, double* out) {
  Interval iv{path.grid.front(), path.grid.back()};
  SigmaResult sr = grad_sigma_x(p, k, path, iv);
  TerminalValue tv = terminal_eval(phi, path.at(path.grid.size() - 1));
  double e = exp_moment(sr.value);
  for (int i = 0; i < p.d; ++i) out[i] = (tv.gradient[i] + 0.5 * tv.value * sr.gradient[i]) * e;
}

void z_difference(const ModelParams& p, const TerminalSpec& phi, const TimeKernel& k,
                  const BrownianPath& path, double h, double* out) {
  Vec dx(static_cast<std::size_t>(p.d), 0.0);
  for (int i = 0; i < p.d; ++i) {
    dx[i] = h;
    double up = y_sample(p, phi, k, shifted(path, dx));
    dx[i] = -h;
    double dn = y_sample(p, phi, k, shifted(path, dx));
    dx[i] = 0.0;
    out[i] = (up - dn) / (2.0 * h);
  }
}

}  // namespace

MCVectorEstimate estimate_z(const ModelParams& p, const TerminalSpec& phi, double t,
                            std::span<const double> x, const SolverConfig& cfg, std::uint64_t seed) {
  check_config(p, cfg, x);
  TimeGrid g = cfg.grid.tail(t);
  TimeKernel k(p.hurst.h0, g);
  PathSet ps = path_set(cfg);
  const std::size_t n = static_cast<std::size_t>(ps.samples), d = static_cast<std::size_t>(p.d);
  double h = cfg.h_x > 0.0 ? cfg.h_x : 1e-2 * (1.0 + norm(x));
  Vec buf(n * d);
  parallel_for(n, resolve_threads(cfg.threads), [&](std::size_t i) {
    double* out = buf.data() + i * d;
    auto one = [&](bool neg, double* o) {
      BrownianPath path = simulate_path(g, p.d, x, seed, i, neg);
      if (cfg.z_mode == ZMode::Pathwise) {
        z_pathwise(p, phi, k, path, o);
      } else {
        z_difference(p, phi, k, path, h, o);
      }
    };
    one(false, out);
    if (ps.antithetic) {
      double other[KernelPoint::kMaxDim];
      one(true, other);
      for (std::size_t c = 0; c < d; ++c) out[c] = 0.5 * (out[c] + other[c]);
    }
  });
  MCVectorEstimate r;
  r.n = static_cast<long long>(n);
  r.seed = seed;
  Vec comp(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) comp[i] = buf[i * d + c];
    MCEstimate e = summarize(comp, seed);
    r.mean.push_back(e.mean);
    r.std_error.push_back(e.std_error);
  }
  return r;
}

namespace {

// The coupled family for one structure sample. A and A2 branch off the base
// path at t; D and D2 follow the base path up to s and then copy the
// increments of A and A2. Y_t - Y_s is then the conditional mean of
// F(A) - F(D), and the product of two such differences is estimated from the
// independent branches.
struct Coupled {
  BrownianPath a, a2, d, d2;
};

Coupled coupled_paths(const ModelParams& p, const SolverConfig& cfg, double t, double s,
                      std::uint64_t seed, std::size_t i) {
  Vec start = cfg.start.empty() ? Vec(static_cast<std::size_t>(p.d), 0.0) : cfg.start;
  BrownianPath base = simulate_path(cfg.grid, p.d, start, seed, i);
  Coupled c;
  c.a = branch_path(base, t, seed, 2 * i);
  c.a2 = branch_path(base, t, seed, 2 * i + 1);
  c.d = graft_increments(base, s, c.a);
  c.d2 = graft_increments(base, s, c.a2);
  return c;
}

struct Side {
  const BrownianPath* path;
  Interval iv;
};

template <class PairTerm>
StructureMoments structure_moment(const ModelParams& p, double t, double s, const SolverConfig& cfg,
                                  std::uint64_t seed, PairTerm&& term) {
  if (cfg.n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  if (std::abs(cfg.grid.back() - p.horizon) > 1e-12 * std::max(1.0, p.horizon)) {
    throw std::invalid_argument("solver grid must end at the horizon T");
  }
  double lo = std::min(t, s), hi = std::max(t, s);
  (void)cfg.grid.index_of(lo);
  (void)cfg.grid.index_of(hi);
  if (!(hi < cfg.grid.back())) throw std::invalid_argument("structure times must precede T");
  TimeKernel k(p.hurst.h0, cfg.grid);
  const double T = cfg.grid.back();
  const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
  Vec aa(n), dd(n), cross(n), inc(n);
  parallel_for(n, resolve_threads(cfg.threads), [&](std::size_t i) {
    Coupled c = coupled_paths(p, cfg, lo, hi, seed, i);
    Side A{&c.a, {lo, T}}, A2{&c.a2, {lo, T}}, D{&c.d, {hi, T}}, D2{&c.d2, {hi, T}};
    double taa = term(k, A, A2), tdd = term(k, D, D2);
    double tad = term(k, A, D2), tda = term(k, D, A2);
    aa[i] = taa;
    dd[i] = tdd;
    cross[i] = 0.5 * (tad + tda);
    inc[i] = (taa + tdd) - (tad + tda);
  });
  StructureMoments m;
  m.t = lo;
  m.s = hi;
  m.first = summarize(aa, seed);
  m.second = summarize(dd, seed);
  m.cross = summarize(cross, seed);
  m.increment = summarize(inc, seed);
  return m;
}

}  // namespace

StructureMoments structure_moment_y(const ModelParams& p, const TerminalSpec& phi, double t,
                                    double s, const SolverConfig& cfg, std::uint64_t seed) {
  auto term = [&](const TimeKernel& k, const Side& a, const Side& b) {
    double sa = sigma_self(p, k, *a.path, a.iv).value;
    double sb = sigma_self(p, k, *b.path, b.iv).value;
    double sab = sigma_cross(p, k, *a.path, *b.path, a.iv, b.iv).value;
    double fa = terminal_value(phi, a.path->at(a.path->grid.size() - 1));
    double fb = terminal_value(phi, b.path->at(b.path->grid.size() - 1));
    return fa * fb * exp_moment(std::max(0.0, sa + 2.0 * sab + sb));
  };
  return structure_moment(p, t, s, cfg, seed, term);
}

StructureMoments structure_moment_z(const ModelParams& p, const TerminalSpec& phi, double t,
                                    double s, const SolverConfig& cfg, std::uint64_t seed) {
  auto term = [&](const TimeKernel& k, const Side& a, const Side& b) {
    SigmaResult ga = grad_sigma_x(p, k, *a.path, a.iv);
    SigmaResult gb = grad_sigma_x(p, k, *b.path, b.iv);
    CrossTerms ct = cross_terms(p, k, *a.path, a.iv, *b.path, b.iv, true);
    TerminalValue fa = terminal_eval(phi, a.path->at(a.path->grid.size() - 1));
    TerminalValue fb = terminal_eval(phi, b.path->at(b.path->grid.size() - 1));
    double var = std::max(0.0, ga.value + 2.0 * ct.value + gb.value);
    double e = exp_moment(var);
    double acc = 0.0;
    for (int i = 0; i < p.d; ++i) {
      double ca = 0.5 * ga.gradient[i] + ct.grad_a[i];
      double cb = 0.5 * gb.gradient[i] + ct.grad_b[i];
      acc += fa.gradient[i] * fb.gradient[i] * e;
      acc += fa.gradient[i] * fb.value * linear_exp_moment(cb, var);
      acc += fa.value * fb.gradient[i] * linear_exp_moment(ca, var);
      acc += fa.value * fb.value * bilinear_exp_moment({var, ca, cb, ct.mixed[i]});
    }
    return acc;
  };
  return structure_moment(p, t, s, cfg, seed, term);
}

}  // namespace fracfk
