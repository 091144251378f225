#include "fracfk/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

double abs_pow(double v, double e) { return v == 0.0 ? 0.0 : std::pow(std::abs(v), e); }

// sign(v) |v|^e with e > 0
double signed_pow(double v, double e) { return sgn(v) * abs_pow(v, e); }

}  // namespace

double HurstParams::h_min() const {
  double m = h0;
  for (double v : h) m = std::min(m, v);
  return m;
}

double HurstParams::h_max() const {
  double m = h0;
  for (double v : h) m = std::max(m, v);
  return m;
}

double ModelParams::alpha() const {
  double a = 0.0;
  std::size_t n = std::min(hurst.h.size(), weight.betas.size());
  for (std::size_t i = 0; i < n; ++i) a += 2.0 * hurst.h[i] - weight.betas[i];
  return a;
}

ModelParams make_model(int d, double h0, double h, double beta, double horizon) {
  ModelParams p;
  p.d = d;
  p.hurst.h0 = h0;
  p.hurst.h.assign(static_cast<std::size_t>(std::max(d, 0)), h);
  p.weight.betas.assign(static_cast<std::size_t>(std::max(d, 0)), beta);
  p.horizon = horizon;
  return p;
}

ValidationReport validate_params(const ModelParams& p) {
  ValidationReport r;
  auto fail = [&](const std::string& msg) {
    r.ok = false;
    r.violations.push_back(msg);
  };
  auto open_unit_half = [](double v) { return std::isfinite(v) && v > 0.5 && v < 1.0; };

  if (p.d < 1 || p.d > KernelPoint::kMaxDim) {
    fail("d must be in [1, " + std::to_string(KernelPoint::kMaxDim) + "], got " + std::to_string(p.d));
  }
  if (!open_unit_half(p.hurst.h0)) fail("h0 out of range (1/2, 1): " + std::to_string(p.hurst.h0));
  if (p.d >= 1 && p.hurst.h.size() != static_cast<std::size_t>(p.d)) {
    fail("h must have d = " + std::to_string(p.d) + " entries, got " + std::to_string(p.hurst.h.size()));
  }
  if (p.d >= 1 && p.weight.betas.size() != static_cast<std::size_t>(p.d)) {
    fail("beta must have d = " + std::to_string(p.d) + " entries, got " +
         std::to_string(p.weight.betas.size()));
  }
  for (std::size_t i = 0; i < p.hurst.h.size(); ++i) {
    if (!open_unit_half(p.hurst.h[i])) {
      fail("h[" + std::to_string(i) + "] out of range (1/2, 1): " + std::to_string(p.hurst.h[i]));
    }
  }
  for (std::size_t i = 0; i < p.weight.betas.size(); ++i) {
    double b = p.weight.betas[i];
    if (!(std::isfinite(b) && b > 0.0 && b < 2.0)) {
      fail("beta[" + std::to_string(i) + "] out of range (0, 2): " + std::to_string(b));
    }
    if (i < p.hurst.h.size() && !(2.0 * p.hurst.h[i] > b)) {
      fail("2*h[" + std::to_string(i) + "] must exceed beta[" + std::to_string(i) + "]");
    }
  }
  if (!(std::isfinite(p.weight.amplitude) && p.weight.amplitude >= 0.0)) {
    fail("weight amplitude must be finite and >= 0");
  }
  if (!(std::isfinite(p.horizon) && p.horizon > 0.0)) fail("horizon T must be > 0");
  double a = p.alpha();
  if (!(a < 2.0)) {
    std::ostringstream os;
    os << "alpha = sum(2h_i - beta_i) = " << a << " must be < 2";
    fail(os.str());
  }
  return r;
}

double r_h(double h, double x, double y) {
  double e = 2.0 * h;
  return 0.5 * (abs_pow(x, e) + abs_pow(y, e) - abs_pow(x - y, e));
}

double dr_h_dx(double h, double x, double y) {
  double e = 2.0 * h - 1.0;
  return h * signed_pow(x, e) - h * signed_pow(x - y, e);
}

double dr_h_dy(double h, double x, double y) {
  double e = 2.0 * h - 1.0;
  return h * signed_pow(y, e) + h * signed_pow(x - y, e);
}

double alpha_const(double h) { return h * (2.0 * h - 1.0); }

RhoGrad rho_and_grad(const WeightParams& w, std::span<const double> x) {
  RhoGrad r;
  double v = w.amplitude;
  for (std::size_t i = 0; i < x.size(); ++i) v *= std::pow(1.0 + x[i] * x[i], -0.5 * w.betas[i]);
  r.value = v;
  r.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.gradient[i] = -v * w.betas[i] * x[i] / (1.0 + x[i] * x[i]);
  }
  return r;
}

KernelPoint make_kernel_point(const ModelParams& p, std::span<const double> x) {
  KernelPoint k;
  k.d = static_cast<int>(x.size());
  double v = p.weight.amplitude;
  for (int i = 0; i < k.d; ++i) {
    double xi = x[i], h = p.hurst.h[i];
    k.x[i] = xi;
    k.pw[i] = abs_pow(xi, 2.0 * h);
    k.dpw[i] = xi == 0.0 ? 0.0 : h * sgn(xi) * k.pw[i] / std::abs(xi);
    v *= std::pow(1.0 + xi * xi, -0.5 * p.weight.betas[i]);
  }
  k.rho = v;
  for (int i = 0; i < k.d; ++i) k.drho[i] = -v * p.weight.betas[i] * x[i] / (1.0 + x[i] * x[i]);
  return k;
}

double pair_q(const ModelParams& p, const KernelPoint& x, const KernelPoint& y) {
  double v = x.rho * y.rho;
  for (int i = 0; i < x.d; ++i) {
    double e = 2.0 * p.hurst.h[i];
    double dist = std::abs(x.x[i] - y.x[i]);
    double pd = dist == 0.0 ? 0.0 : std::pow(dist, e);
    v *= 0.5 * (x.pw[i] + y.pw[i] - pd);
  }
  return v;
}

void pair_derivatives(const ModelParams& p, const KernelPoint& x, const KernelPoint& y,
                      bool with_mixed, PairTerms& out) {
  const int d = x.d;
  double R[KernelPoint::kMaxDim], Rx[KernelPoint::kMaxDim], Ry[KernelPoint::kMaxDim],
      Rxy[KernelPoint::kMaxDim];
  for (int i = 0; i < d; ++i) {
    double h = p.hurst.h[i];
    double diff = x.x[i] - y.x[i];
    double dist = std::abs(diff);
    double pd = dist == 0.0 ? 0.0 : std::pow(dist, 2.0 * h);
    double odd = dist == 0.0 ? 0.0 : h * sgn(diff) * pd / dist;  // H |D|^(2H-1) sign(D)
    R[i] = 0.5 * (x.pw[i] + y.pw[i] - pd);
    Rx[i] = x.dpw[i] - odd;
    Ry[i] = y.dpw[i] + odd;
    if (with_mixed) {
      if (dist == 0.0) throw SingularPoint("mixed derivative of q is singular at x_i == y_i");
      Rxy[i] = alpha_const(h) * pd / (dist * dist);
    }
    // the pair loop calls this with every axis requested, so a coincidence
    // on any axis is reported
  }
  double rr = x.rho * y.rho;
  double prod_all = 1.0;
  for (int i = 0; i < d; ++i) prod_all *= R[i];
  out.q = rr * prod_all;
  for (int i = 0; i < d; ++i) {
    double others = 1.0;
    for (int j = 0; j < d; ++j)
      if (j != i) others *= R[j];
    out.dx[i] = others * (x.drho[i] * y.rho * R[i] + rr * Rx[i]);
    out.dy[i] = others * (x.rho * y.drho[i] * R[i] + rr * Ry[i]);
    if (with_mixed) {
      out.mixed[i] = others * (x.drho[i] * y.drho[i] * R[i] + x.drho[i] * y.rho * Ry[i] +
                               x.rho * y.drho[i] * Rx[i] + rr * Rxy[i]);
    }
  }
}

double q_value(const ModelParams& p, std::span<const double> x, std::span<const double> y) {
  return pair_q(p, make_kernel_point(p, x), make_kernel_point(p, y));
}

Vec q_grad_x(const ModelParams& p, std::span<const double> x, std::span<const double> y) {
  PairTerms t;
  pair_derivatives(p, make_kernel_point(p, x), make_kernel_point(p, y), false, t);
  return Vec(t.dx, t.dx + x.size());
}

double q_mixed(const ModelParams& p, std::span<const double> x, std::span<const double> y, int i) {
  if (i < 0 || i >= static_cast<int>(x.size())) throw std::invalid_argument("q_mixed: bad axis");
  if (x[i] == y[i]) throw SingularPoint("mixed derivative of q is singular at x_i == y_i");
  auto kx = make_kernel_point(p, x), ky = make_kernel_point(p, y);
  // only axis i can be singular; evaluate its mixed term directly
  double h = p.hurst.h[i];
  double diff = x[i] - y[i], dist = std::abs(diff);
  double pd = std::pow(dist, 2.0 * h);
  double odd = h * sgn(diff) * pd / dist;
  double R = 0.5 * (kx.pw[i] + ky.pw[i] - pd);
  double Rx = kx.dpw[i] - odd, Ry = ky.dpw[i] + odd;
  double Rxy = alpha_const(h) * pd / (dist * dist);
  double others = 1.0;
  for (int j = 0; j < kx.d; ++j)
    if (j != i) others *= r_h(p.hurst.h[j], x[j], y[j]);
  double rr = kx.rho * ky.rho;
  return others * (kx.drho[i] * ky.drho[i] * R + kx.drho[i] * ky.rho * Ry +
                   kx.rho * ky.drho[i] * Rx + rr * Rxy);
}

double time_cell_weight(double h0, double a, double b, double c, double e) {
  double k = 2.0 * h0;
  return -0.5 * (abs_pow(b - e, k) - abs_pow(a - e, k) - abs_pow(b - c, k) + abs_pow(a - c, k));
}

double time_line_weight(double h0, double s, double a, double b) {
  double k = 2.0 * h0 - 1.0;
  return h0 * (signed_pow(b - s, k) - signed_pow(a - s, k));
}

}  // namespace fracfk
