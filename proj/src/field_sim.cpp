#include "fracfk/field_sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "fracfk/csv.hpp"
#include "fracfk/errors.hpp"
#include "fracfk/parallel.hpp"
#include "fracfk/rng.hpp"

namespace fracfk {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> axis_factor(double h, const Vec& nodes) {
  const std::size_t n = nodes.size();
  std::vector<std::size_t> live;
  for (std::size_t j = 0; j < n; ++j)
    if (nodes[j] != 0.0) live.push_back(j);
  std::vector<double> out(n * n, 0.0);
  if (live.empty()) return out;

  const auto m = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) c(a, b) = r_h(h, nodes[live[a]], nodes[live[b]]);

  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    double jitter = 1e-12 * c.trace() / static_cast<double>(m);
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() != Eigen::Success) {
      throw FactorizationError("axis covariance is not positive definite after jitter");
    }
  }
  Eigen::MatrixXd l = llt.matrixL();
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) out[live[a] * n + live[b]] = l(a, b);
  return out;
}

// Applies the n x n lower factor along one axis of a tensor laid out as
// (pre, n, post).
void mode_product(const std::vector<double>& factor, std::size_t pre, std::size_t n,
                  std::size_t post, Vec& data) {
  Eigen::Map<const RowMat> l(factor.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  RowMat tmp(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(post));
  for (std::size_t p = 0; p < pre; ++p) {
    Eigen::Map<RowMat> block(data.data() + p * n * post, static_cast<Eigen::Index>(n),
                             static_cast<Eigen::Index>(post));
    tmp.noalias() = l.triangularView<Eigen::Lower>() * block;
    block = tmp;
  }
}

// Nodes of `axis` within [x - 4 eps, x + 4 eps] and their normalized weights.
struct AxisStencil {
  std::size_t first = 0;
  std::vector<double> w;
};

AxisStencil axis_stencil(const Vec& axis, double x, double eps) {
  if (x < axis.front() || x > axis.back()) {
    throw OutOfDomain("point " + std::to_string(x) + " lies outside the field's space grid");
  }
  double lo = x - 4.0 * eps, hi = x + 4.0 * eps;
  auto b = std::lower_bound(axis.begin(), axis.end(), lo);
  auto e = std::upper_bound(axis.begin(), axis.end(), hi);
  AxisStencil s;
  s.first = static_cast<std::size_t>(b - axis.begin());
  double tot = 0.0;
  for (auto it = b; it != e; ++it) {
    double z = (*it - x) / eps;
    double v = std::exp(-0.5 * z * z);
    s.w.push_back(v);
    tot += v;
  }
  if (s.w.empty()) {
    // grid coarser than the kernel: fall back to the nearest node
    auto near = std::min_element(axis.begin(), axis.end(),
                                 [x](double u, double v) { return std::abs(u - x) < std::abs(v - x); });
    s.first = static_cast<std::size_t>(near - axis.begin());
    s.w.push_back(1.0);
    tot = 1.0;
  }
  for (double& v : s.w) v /= tot;
  return s;
}

// Linear interpolation weights in time: value = (1 - f) * row k + f * row k+1.
std::pair<std::size_t, double> time_locate(const TimeGrid& g, double s) {
  const Vec& t = g.nodes();
  if (s <= t.front()) return {0, 0.0};
  if (s >= t.back()) return {t.size() - 2, 1.0};
  auto it = std::upper_bound(t.begin(), t.end(), s);
  std::size_t k = static_cast<std::size_t>(it - t.begin()) - 1;
  return {k, (s - t[k]) / (t[k + 1] - t[k])};
}

}  // namespace

std::size_t FieldSample::space_size() const {
  std::size_t n = 1;
  for (const auto& a : space_axes) n *= a.size();
  return n;
}

Vec uniform_axis(double lo, double hi, std::size_t cells) {
  Vec v(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
  }
  v.back() = hi;
  return v;
}

FieldSampler::FieldSampler(const ModelParams& p, TimeGrid time_grid, std::vector<Vec> space_axes)
    : params_(p), time_grid_(std::move(time_grid)), axes_(std::move(space_axes)) {
  if (time_grid_.front() != 0.0) throw std::invalid_argument("field time grid must start at 0");
  if (axes_.size() != static_cast<std::size_t>(p.d)) {
    throw std::invalid_argument("field needs one space axis per dimension");
  }
  for (const auto& a : axes_) {
    if (a.empty()) throw std::invalid_argument("empty space axis");
    for (std::size_t j = 1; j < a.size(); ++j)
      if (!(a[j] > a[j - 1])) throw std::invalid_argument("space axis nodes must increase");
  }
  auto f = std::make_shared<FieldFactors>();
  f->time_factor = axis_factor(p.hurst.h0, time_grid_.nodes());
  for (int i = 0; i < p.d; ++i) f->space_factor.push_back(axis_factor(p.hurst.h[i], axes_[i]));
  factors_ = std::move(f);

  std::size_t ns = 1;
  for (const auto& a : axes_) ns *= a.size();
  rho_.resize(ns);
  Vec x(static_cast<std::size_t>(p.d));
  for (std::size_t j = 0; j < ns; ++j) {
    std::size_t r = j;
    for (int i = p.d - 1; i >= 0; --i) {
      x[i] = axes_[i][r % axes_[i].size()];
      r /= axes_[i].size();
    }
    rho_[j] = rho_and_grad(p.weight, x).value;
  }
}

FieldSample FieldSampler::zero() const {
  FieldSample f{time_grid_, axes_, Vec(time_grid_.size() * rho_.size(), 0.0), factors_};
  return f;
}

FieldSample FieldSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  FieldSample f = zero();
  auto eng = substream(seed, Stream::Field, index);
  std::normal_distribution<double> nd;
  for (double& v : f.values) v = nd(eng);

  const std::size_t nt = time_grid_.size(), ns = rho_.size();
  mode_product(factors_->time_factor, 1, nt, ns, f.values);
  std::size_t pre = nt, post = ns;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    std::size_t n = axes_[i].size();
    post /= n;
    mode_product(factors_->space_factor[i], pre, n, post, f.values);
    pre *= n;
  }
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t j = 0; j < ns; ++j) f.values[k * ns + j] *= rho_[j];
  return f;
}

std::vector<FieldSample> sample_field(const ModelParams& p, const TimeGrid& time_grid,
                                      const std::vector<Vec>& space_axes, int count,
                                      std::uint64_t seed, int threads) {
  FieldSampler s(p, time_grid, space_axes);
  std::vector<FieldSample> out(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = s.draw(seed, i); });
  return out;
}

double mollified_noise_eval(const FieldSample& field, const MollifierParams& moll, double s,
                            std::span<const double> x) {
  const TimeGrid& g = field.time_grid;
  double tol = 1e-12 * std::max(1.0, std::abs(g.back()));
  if (s < g.front() - tol || s > g.back() + tol) {
    throw DomainError("time " + std::to_string(s) + " outside the field's time span");
  }
  const std::size_t d = field.space_axes.size();
  if (x.size() != d) throw std::invalid_argument("point dimension differs from field dimension");

  auto [k1, f1] = time_locate(g, s);
  auto [k0, f0] = time_locate(g, std::max(s - moll.eta, g.front()));
  const std::size_t ns = field.space_size();
  const double* v = field.values.data();

  AxisStencil st[KernelPoint::kMaxDim];
  for (std::size_t i = 0; i < d; ++i) st[i] = axis_stencil(field.space_axes[i], x[i], moll.eps);

  auto inc = [&](std::size_t j) {
    double w1 = (1.0 - f1) * v[k1 * ns + j] + f1 * v[(k1 + 1) * ns + j];
    double w0 = (1.0 - f0) * v[k0 * ns + j] + f0 * v[(k0 + 1) * ns + j];
    return w1 - w0;
  };

  std::size_t count = 1;
  for (std::size_t i = 0; i < d; ++i) count *= st[i].w.size();
  double acc = 0.0;
  for (std::size_t c = 0; c < count; ++c) {
    double w = 1.0;
    std::size_t j = 0, r = c, stride = 1;
    for (std::size_t i = d; i-- > 0;) {
      std::size_t a = r % st[i].w.size();
      r /= st[i].w.size();
      w *= st[i].w[a];
      j += (st[i].first + a) * stride;
      stride *= field.space_axes[i].size();
    }
    acc += w * inc(j);
  }
  return acc / moll.eta;
}

Vec mollified_along_path(const FieldSample& field, const BrownianPath& path,
                         const MollifierParams& moll) {
  Vec out(path.grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = mollified_noise_eval(field, moll, path.grid[k], path.at(k));
  }
  return out;
}

double v_mollified(const FieldSample& field, const BrownianPath& path, double t,
                   const MollifierParams& moll) {
  std::size_t k0 = path.grid.index_of(t);
  double acc = 0.0;
  double prev = mollified_noise_eval(field, moll, path.grid[k0], path.at(k0));
  for (std::size_t k = k0 + 1; k < path.grid.size(); ++k) {
    double cur = mollified_noise_eval(field, moll, path.grid[k], path.at(k));
    acc += 0.5 * (prev + cur) * (path.grid[k] - path.grid[k - 1]);
    prev = cur;
  }
  return acc;
}

void write_field_csv(const FieldSample& field, std::ostream& os) {
  const std::size_t d = field.space_axes.size(), ns = field.space_size();
  os << 't';
  for (std::size_t i = 0; i < d; ++i) os << ",x" << i + 1;
  os << ",w\n";
  for (std::size_t k = 0; k < field.time_grid.size(); ++k) {
    for (std::size_t j = 0; j < ns; ++j) {
      os << format_double(field.time_grid[k]);
      std::size_t r = j;
      Vec x(d);
      for (std::size_t i = d; i-- > 0;) {
        x[i] = field.space_axes[i][r % field.space_axes[i].size()];
        r /= field.space_axes[i].size();
      }
      for (double xi : x) os << ',' << format_double(xi);
      os << ',' << format_double(field.values[k * ns + j]) << '\n';
    }
  }
}

}  // namespace fracfk
