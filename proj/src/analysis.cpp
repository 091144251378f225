#include "fracfk/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "fracfk/errors.hpp"
#include "fracfk/gauss_moments.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/quadrature.hpp"
#include "fracfk/rng.hpp"

namespace fracfk {

HolderFit holder_fit(const StructureSeries& s) {
  const std::size_t n = s.lags.size();
  if (n < 4 || s.moments.size() != n) {
    throw DegenerateSeries("holder_fit needs >= 4 lags with one moment each");
  }
  Vec x(n), y(n), var(n);
  for (std::size_t k = 0; k < n; ++k) {
    double m = s.moments[k].mean;
    if (!(m > 0.0)) throw DegenerateSeries("moment at lag " + std::to_string(s.lags[k]) + " is not positive");
    if (!(s.lags[k] > 0.0)) throw DegenerateSeries("lags must be positive");
    x[k] = std::log(s.lags[k]);
    y[k] = std::log(m);
    double rel = s.moments[k].std_error / m;
    var[k] = rel * rel;
  }
  double xm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    xm += x[k];
    ym += y[k];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - xm) * (x[k] - xm);
    sxy += (x[k] - xm) * (y[k] - ym);
  }
  if (!(sxx > 0.0)) throw DegenerateSeries("lags must not all coincide");
  HolderFit f;
  f.exponent = sxy / sxx;
  f.intercept = ym - f.exponent * xm;
  double vb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double c = (x[k] - xm) / sxx;
    vb += c * c * var[k];
  }
  double half = 1.96 * std::sqrt(vb);
  f.ci_low = f.exponent - half;
  f.ci_high = f.exponent + half;
  return f;
}

namespace {

std::uint64_t inner_seed(std::uint64_t seed, std::uint64_t outer) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(Stream::Inner) << 56)) + outer);
}

// trapezoid of the sampled integrand between nodes k0 and k1
double trapezoid(const Vec& f, const TimeGrid& g, std::size_t k0, std::size_t k1) {
  double acc = 0.0;
  for (std::size_t k = k0; k < k1; ++k) acc += 0.5 * (f[k] + f[k + 1]) * (g[k + 1] - g[k]);
  return acc;
}

double feynman_kac_sample(const TerminalSpec& phi, const FieldSample& field,
                          const MollifierParams& moll, const BrownianPath& path) {
  Vec w = mollified_along_path(field, path, moll);
  double v = trapezoid(w, path.grid, 0, path.grid.size() - 1);
  return terminal_value(phi, path.at(path.grid.size() - 1)) * std::exp(v);
}

double euclid(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

TimeGrid refine(const TimeGrid& g) {
  Vec v;
  v.reserve(2 * g.size());
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    v.push_back(g[k]);
    v.push_back(0.5 * (g[k] + g[k + 1]));
  }
  v.push_back(g.back());
  return TimeGrid(std::move(v));
}

}  // namespace

MCEstimate bsde_residual(const ModelParams& p, const TerminalSpec& phi, const FieldSample& field,
                         const MollifierParams& moll, const SolverConfig& cfg, int n_inner,
                         std::uint64_t seed) {
  if (n_inner < 1) throw std::invalid_argument("n_inner must be >= 1");
  const TimeGrid& g = cfg.grid;
  const std::size_t N = g.size() - 1;
  const int d = p.d;
  Vec start = cfg.start.empty() ? Vec(static_cast<std::size_t>(d), 0.0) : cfg.start;
  std::vector<TimeGrid> tails;
  for (std::size_t k = 0; k < N; ++k) tails.push_back(g.tail(g[k]));

  Vec r2(static_cast<std::size_t>(cfg.n_paths));
  parallel_for(r2.size(), resolve_threads(cfg.threads), [&](std::size_t o) {
    BrownianPath b = simulate_path(g, d, start, seed, o);
    std::uint64_t is = inner_seed(seed, o);
    double y0 = 0.0, drift = 0.0, mart = 0.0;
    Vec x(static_cast<std::size_t>(d)), dx(static_cast<std::size_t>(d), 0.0);
    for (std::size_t k = 0; k < N; ++k) {
      x.assign(b.at(k).begin(), b.at(k).end());
      double h = cfg.h_x > 0.0 ? cfg.h_x : 1e-2 * (1.0 + euclid(x));
      double ysum = 0.0;
      Vec zsum(static_cast<std::size_t>(d), 0.0);
      for (int j = 0; j < n_inner; ++j) {
        BrownianPath in = simulate_path(tails[k], d, x, is, static_cast<std::uint64_t>(j));
        ysum += feynman_kac_sample(phi, field, moll, in);
        for (int i = 0; i < d; ++i) {
          dx[i] = h;
          double up = feynman_kac_sample(phi, field, moll, shifted(in, dx));
          dx[i] = -h;
          double dn = feynman_kac_sample(phi, field, moll, shifted(in, dx));
          dx[i] = 0.0;
          zsum[i] += (up - dn) / (2.0 * h);
        }
      }
      double yk = ysum / n_inner;
      if (k == 0) y0 = yk;
      double dt = g[k + 1] - g[k];
      drift += yk * mollified_noise_eval(field, moll, g[k], x) * dt;
      for (int i = 0; i < d; ++i) mart += zsum[i] / n_inner * (b(k + 1, i) - b(k, i));
    }
    double xi = terminal_value(phi, b.at(N));
    double r = y0 - xi - drift + mart;
    r2[o] = r * r;
  });
  return summarize(r2, seed);
}

std::vector<MCEstimate> bsde_residual_refinement(const ModelParams& p, const TerminalSpec& phi,
                                                 const FieldSample& field,
                                                 const MollifierParams& moll,
                                                 const SolverConfig& cfg, int n_inner,
                                                 std::uint64_t seed, int levels) {
  std::vector<MCEstimate> out;
  SolverConfig c = cfg;
  for (int l = 0; l < levels; ++l) {
    out.push_back(bsde_residual(p, phi, field, moll, c, n_inner, seed));
    c.grid = refine(c.grid);
  }
  return out;
}

IsometryResult isometry_check(const ModelParams& p, const Integrand& f, const SolverConfig& cfg,
                              const FieldMcConfig& fcfg, std::uint64_t seed) {
  const TimeGrid& g = cfg.grid;
  double a = f.kind == Integrand::Kind::One ? g.front() : f.a;
  double b = f.kind == Integrand::Kind::One ? g.back() : f.b;
  std::size_t ka = g.index_of(a), kb = g.index_of(b);
  if (kb < ka) throw std::invalid_argument("indicator needs a <= b");
  if (fcfg.n_fields < 2 || fcfg.paths_per_field < 1) {
    throw std::invalid_argument("isometry_check needs >= 2 fields and >= 1 path per field");
  }
  FieldSampler sampler(p, g, fcfg.space_axes);
  TimeKernel kern(p.hurst.h0, g);
  Vec start = cfg.start.empty() ? Vec(static_cast<std::size_t>(p.d), 0.0) : cfg.start;
  const std::size_t nf = static_cast<std::size_t>(fcfg.n_fields);
  const std::size_t ppf = static_cast<std::size_t>(fcfg.paths_per_field);
  Vec mc(nf), an(nf);
  parallel_for(nf, resolve_threads(cfg.threads), [&](std::size_t fi) {
    FieldSample field = sampler.draw(seed, fi);
    double m = 0.0, s = 0.0;
    for (std::size_t j = 0; j < ppf; ++j) {
      BrownianPath path = simulate_path(g, p.d, start, seed, fi * ppf + j);
      Vec w = mollified_along_path(field, path, fcfg.moll);
      double v = trapezoid(w, g, ka, kb);
      m += v * v;
      s += sigma_self(p, kern, path, {a, b}).value;
    }
    mc[fi] = m / static_cast<double>(ppf);
    an[fi] = s / static_cast<double>(ppf);
  });
  return {summarize(mc, seed), summarize(an, seed)};
}

Vec alpha_identity_check(const ModelParams& p, const FieldSample& field,
                         const MollifierParams& moll, const BrownianPath& path,
                         const std::vector<int>& partition_sizes) {
  return alpha_identity_check(p, field, moll, path, partition_sizes, path.grid.front(),
                              path.grid.back());
}

Vec alpha_identity_check(const ModelParams&, const FieldSample& field, const MollifierParams& moll,
                         const BrownianPath& path, const std::vector<int>& partition_sizes, double s,
                         double t) {
  const TimeGrid& g = path.grid;
  std::size_t ks = g.index_of(s), kt = g.index_of(t);
  if (kt < ks) throw std::invalid_argument("alpha identity needs s <= t");
  Vec out;
  if (ks == kt) {
    out.assign(partition_sizes.size(), 0.0);
    return out;
  }
  Vec w = mollified_along_path(field, path, moll);
  // V(r) = integral of the smoothed noise from 0 to r along the path
  Vec cum(g.size(), 0.0);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) cum[k + 1] = cum[k] + trapezoid(w, g, k, k + 1);
  const std::size_t cells = kt - ks;
  double target = std::exp(cum[kt]);
  for (int m : partition_sizes) {
    if (m < 1 || cells % static_cast<std::size_t>(m) != 0) {
      throw GridMismatch("partition size " + std::to_string(m) + " does not divide the path grid");
    }
    std::size_t step = cells / static_cast<std::size_t>(m);
    double sum = std::exp(cum[ks]);
    for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
      std::size_t k0 = ks + j * step, k1 = k0 + step;
      sum += std::exp(cum[k0]) * (cum[k1] - cum[k0]);
    }
    out.push_back(std::abs(target - sum) / target);
  }
  return out;
}

std::vector<TailProbe> exp_tail_probe(const ModelParams& p, const Vec& lambdas, double t,
                                      const SolverConfig& cfg, std::uint64_t seed) {
  for (double l : lambdas) {
    if (!(std::abs(l) <= 4.0)) throw std::invalid_argument("tail probes need |lambda| <= 4");
  }
  TimeGrid g = cfg.grid.tail(t);
  TimeKernel kern(p.hurst.h0, g);
  Vec start = cfg.start.empty() ? Vec(static_cast<std::size_t>(p.d), 0.0) : cfg.start;
  const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
  Vec sig(2 * n);
  parallel_for(sig.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    BrownianPath path = simulate_path(g, p.d, start, seed, i);
    sig[i] = sigma_self(p, kern, path, {g.front(), g.back()}).value;
  });
  std::vector<TailProbe> out;
  Vec v(2 * n);
  for (double l : lambdas) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = exp_moment(l * l * sig[i]);
    TailProbe tp;
    tp.lambda = l;
    tp.at_n = summarize(std::span<const double>(v.data(), n), seed);
    tp.at_2n = summarize(v, seed);
    double se = std::hypot(tp.at_n.std_error, tp.at_2n.std_error);
    tp.stable = std::abs(tp.at_n.mean - tp.at_2n.mean) <= 3.0 * se;
    out.push_back(tp);
  }
  return out;
}

}  // namespace fracfk
