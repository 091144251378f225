#include "fracfk/paths.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fracfk/errors.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/rng.hpp"

namespace fracfk {

TimeGrid::TimeGrid(Vec nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw std::invalid_argument("TimeGrid needs at least 2 nodes");
  if (nodes_.front() < 0.0) throw std::invalid_argument("TimeGrid must start at t >= 0");
  for (std::size_t k = 1; k < nodes_.size(); ++k) {
    if (!(nodes_[k] > nodes_[k - 1])) throw std::invalid_argument("TimeGrid nodes must increase");
  }
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t cells) {
  if (cells < 1) throw std::invalid_argument("TimeGrid::uniform needs >= 1 cell");
  Vec v(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    v[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(cells);
  }
  v.back() = t1;
  return TimeGrid(std::move(v));
}

std::optional<std::size_t> TimeGrid::find(double t) const {
  double tol = 1e-10 * std::max(1.0, std::abs(back()));
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tol);
  if (it != nodes_.end() && std::abs(*it - t) <= tol) {
    return static_cast<std::size_t>(it - nodes_.begin());
  }
  return std::nullopt;
}

std::size_t TimeGrid::index_of(double t) const {
  auto k = find(t);
  if (!k) throw GridMismatch("time " + std::to_string(t) + " is not a grid node");
  return *k;
}

TimeGrid TimeGrid::tail(double t) const {
  std::size_t k = index_of(t);
  if (k + 1 >= nodes_.size()) throw GridMismatch("tail of a grid needs at least one cell");
  return TimeGrid(Vec(nodes_.begin() + static_cast<std::ptrdiff_t>(k), nodes_.end()));
}

BrownianPath frozen_path(const TimeGrid& grid, std::span<const double> x) {
  BrownianPath p{grid, static_cast<int>(x.size()), {}};
  p.values.reserve(grid.size() * x.size());
  for (std::size_t k = 0; k < grid.size(); ++k) p.values.insert(p.values.end(), x.begin(), x.end());
  return p;
}

BrownianPath simulate_path(const TimeGrid& grid, int d, std::span<const double> start,
                           std::uint64_t seed, std::uint64_t index, bool negate) {
  if (static_cast<int>(start.size()) != d) throw std::invalid_argument("start point has wrong dimension");
  auto eng = substream(seed, Stream::Path, index);
  std::normal_distribution<double> nd;
  BrownianPath p{grid, d, Vec(grid.size() * static_cast<std::size_t>(d))};
  for (int i = 0; i < d; ++i) p.values[i] = start[i];
  double sign = negate ? -1.0 : 1.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    double sd = std::sqrt(grid[k] - grid[k - 1]);
    for (int i = 0; i < d; ++i) {
      std::size_t j = k * d + i;
      p.values[j] = p.values[j - d] + sign * sd * nd(eng);
    }
  }
  return p;
}

std::vector<BrownianPath> simulate_paths(const TimeGrid& grid, int d, std::span<const double> start,
                                         int count, std::uint64_t seed, int threads) {
  if (count < 1) throw std::invalid_argument("simulate_paths: count must be >= 1");
  std::vector<BrownianPath> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = simulate_path(grid, d, start, seed, i); });
  return out;
}

BrownianPath branch_path(const BrownianPath& common, double branch_time, std::uint64_t seed,
                         std::uint64_t index) {
  std::size_t kb = common.grid.index_of(branch_time);
  BrownianPath p = common;
  auto eng = substream(seed, Stream::Branch, index);
  std::normal_distribution<double> nd;
  const int d = common.d;
  for (std::size_t k = kb + 1; k < p.grid.size(); ++k) {
    double sd = std::sqrt(p.grid[k] - p.grid[k - 1]);
    for (int i = 0; i < d; ++i) {
      std::size_t j = k * d + i;
      p.values[j] = p.values[j - d] + sd * nd(eng);
    }
  }
  return p;
}

std::vector<std::pair<BrownianPath, BrownianPath>> branch_paths(const BrownianPath& common,
                                                                double branch_time, int count,
                                                                std::uint64_t seed) {
  (void)common.grid.index_of(branch_time);
  std::vector<std::pair<BrownianPath, BrownianPath>> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    std::uint64_t i = static_cast<std::uint64_t>(k);
    out.emplace_back(branch_path(common, branch_time, seed, 2 * i),
                     branch_path(common, branch_time, seed, 2 * i + 1));
  }
  return out;
}

BrownianPath graft_increments(const BrownianPath& base, double s, const BrownianPath& donor) {
  if (!(base.grid == donor.grid) || base.d != donor.d) throw GridMismatch("graft: grids differ");
  std::size_t ks = base.grid.index_of(s);
  BrownianPath p = base;
  const int d = base.d;
  for (std::size_t k = ks + 1; k < p.grid.size(); ++k) {
    for (int i = 0; i < d; ++i) {
      p.values[k * d + i] = base(ks, i) + (donor(k, i) - donor(ks, i));
    }
  }
  return p;
}

BrownianPath shifted(const BrownianPath& path, std::span<const double> dx) {
  BrownianPath p = path;
  for (std::size_t k = 0; k < p.grid.size(); ++k)
    for (int i = 0; i < p.d; ++i) p.values[k * p.d + i] += dx[i];
  return p;
}

TerminalSpec TerminalSpec::constant(double c) {
  TerminalSpec s;
  s.kind = TerminalKind::Constant;
  s.c = c;
  return s;
}

TerminalSpec TerminalSpec::linear(Vec a, double c) {
  TerminalSpec s;
  s.kind = TerminalKind::Linear;
  s.a = std::move(a);
  s.c = c;
  return s;
}

TerminalSpec TerminalSpec::cosine(Vec freq) {
  TerminalSpec s;
  s.kind = TerminalKind::Cosine;
  s.freq = std::move(freq);
  return s;
}

TerminalSpec TerminalSpec::gaussian_bump(Vec center, double width) {
  TerminalSpec s;
  s.kind = TerminalKind::GaussianBump;
  s.center = std::move(center);
  s.width = width;
  return s;
}

namespace {

double dot(std::span<const double> a, std::span<const double> x) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += a[i] * x[i];
  return v;
}

double bump_r2(const TerminalSpec& s, std::span<const double> x) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dz = x[i] - s.center[i];
    r2 += dz * dz;
  }
  return r2;
}

}  // namespace

double terminal_value(const TerminalSpec& s, std::span<const double> x) {
  switch (s.kind) {
    case TerminalKind::Constant:
      return s.scale * s.c;
    case TerminalKind::Linear:
      return s.scale * (dot(s.a, x) + s.c);
    case TerminalKind::Cosine:
      return s.scale * std::cos(dot(s.freq, x));
    case TerminalKind::GaussianBump:
      return s.scale * std::exp(-bump_r2(s, x) / (2.0 * s.width * s.width));
  }
  return 0.0;
}

TerminalValue terminal_eval(const TerminalSpec& s, std::span<const double> x) {
  TerminalValue r;
  r.value = terminal_value(s, x);
  r.gradient.assign(x.size(), 0.0);
  switch (s.kind) {
    case TerminalKind::Constant:
      break;
    case TerminalKind::Linear:
      for (std::size_t i = 0; i < x.size(); ++i) r.gradient[i] = s.scale * s.a[i];
      break;
    case TerminalKind::Cosine: {
      double sn = -s.scale * std::sin(dot(s.freq, x));
      for (std::size_t i = 0; i < x.size(); ++i) r.gradient[i] = sn * s.freq[i];
      break;
    }
    case TerminalKind::GaussianBump:
      for (std::size_t i = 0; i < x.size(); ++i) {
        r.gradient[i] = -r.value * (x[i] - s.center[i]) / (s.width * s.width);
      }
      break;
  }
  return r;
}

double heat_flow(const TerminalSpec& s, double tau, std::span<const double> x) {
  switch (s.kind) {
    case TerminalKind::Constant:
    case TerminalKind::Linear:
      return terminal_value(s, x);
    case TerminalKind::Cosine:
      return terminal_value(s, x) * std::exp(-0.5 * dot(s.freq, s.freq) * tau);
    case TerminalKind::GaussianBump: {
      double w2 = s.width * s.width;
      double v = w2 + tau;
      return s.scale * std::pow(w2 / v, 0.5 * static_cast<double>(x.size())) *
             std::exp(-bump_r2(s, x) / (2.0 * v));
    }
  }
  return 0.0;
}

}  // namespace fracfk
