#include "fracfk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fracfk/csv.hpp"
#include "fracfk/errors.hpp"
#include "fracfk/gauss_moments.hpp"

namespace fracfk {

TimeKernel::TimeKernel(double h0, TimeGrid grid)
    : h0_(h0), grid_(std::move(grid)), n_(grid_.cells()), w_(n_ * n_) {
  const Vec& t = grid_.nodes();
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t l = k; l < n_; ++l) {
      double w = time_cell_weight(h0_, t[k], t[k + 1], t[l], t[l + 1]);
      w_[k * n_ + l] = w;
      w_[l * n_ + k] = w;
    }
  }
}

std::pair<std::size_t, std::size_t> TimeKernel::cell_range(Interval iv) const {
  std::size_t a = grid_.index_of(iv.start), b = grid_.index_of(iv.end);
  if (b < a) throw GridMismatch("interval end precedes its start");
  return {a, b};
}

void TimeKernel::check_path(const BrownianPath& p) const {
  if (!(p.grid == grid_)) throw GridMismatch("path grid differs from the kernel grid");
  if (p.d > KernelPoint::kMaxDim) throw std::invalid_argument("path dimension too large");
}

namespace {

std::vector<KernelPoint> midpoints(const ModelParams& p, const BrownianPath& path, std::size_t k0,
                                   std::size_t k1) {
  std::vector<KernelPoint> out;
  out.reserve(k1 - k0);
  double m[KernelPoint::kMaxDim];
  for (std::size_t k = k0; k < k1; ++k) {
    for (int i = 0; i < path.d; ++i) m[i] = 0.5 * (path(k, i) + path(k + 1, i));
    out.push_back(make_kernel_point(p, std::span<const double>(m, static_cast<std::size_t>(path.d))));
  }
  return out;
}

Interval to_end(const BrownianPath& path, double t) { return {t, path.grid.back()}; }

}  // namespace

SigmaResult sigma_self(const ModelParams& p, const BrownianPath& path, double t) {
  TimeKernel k(p.hurst.h0, path.grid);
  return sigma_self(p, k, path, to_end(path, t));
}

SigmaResult sigma_self(const ModelParams& p, const TimeKernel& k, const BrownianPath& path,
                       Interval iv) {
  k.check_path(path);
  auto [c0, c1] = k.cell_range(iv);
  auto pts = midpoints(p, path, c0, c1);
  const std::size_t n = pts.size();
  double diag = 0.0, off = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    diag += k.cell(c0 + a, c0 + a) * pair_q(p, pts[a], pts[a]);
    for (std::size_t b = a + 1; b < n; ++b) off += k.cell(c0 + a, c0 + b) * pair_q(p, pts[a], pts[b]);
  }
  SigmaResult r;
  r.value = std::max(0.0, diag + 2.0 * off);
  r.cells_used = static_cast<int>(n * n);
  return r;
}

SigmaResult sigma_cross(const ModelParams& p, const BrownianPath& path1, const BrownianPath& path2,
                        Interval iv1, Interval iv2) {
  if (!(path1.grid == path2.grid)) throw GridMismatch("sigma_cross: path grids differ");
  TimeKernel k(p.hurst.h0, path1.grid);
  return sigma_cross(p, k, path1, path2, iv1, iv2);
}

SigmaResult sigma_cross(const ModelParams& p, const TimeKernel& k, const BrownianPath& path1,
                        const BrownianPath& path2, Interval iv1, Interval iv2) {
  k.check_path(path1);
  k.check_path(path2);
  auto [a0, a1] = k.cell_range(iv1);
  auto [b0, b1] = k.cell_range(iv2);
  auto pa = midpoints(p, path1, a0, a1);
  auto pb = midpoints(p, path2, b0, b1);
  double s = 0.0;
  for (std::size_t a = 0; a < pa.size(); ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < pb.size(); ++b) row += k.cell(a0 + a, b0 + b) * pair_q(p, pa[a], pb[b]);
    s += row;
  }
  SigmaResult r;
  r.value = s;
  r.cells_used = static_cast<int>(pa.size() * pb.size());
  return r;
}

SigmaResult grad_sigma_x(const ModelParams& p, const BrownianPath& path, double t) {
  TimeKernel k(p.hurst.h0, path.grid);
  return grad_sigma_x(p, k, path, to_end(path, t));
}

SigmaResult grad_sigma_x(const ModelParams& p, const TimeKernel& k, const BrownianPath& path,
                         Interval iv) {
  k.check_path(path);
  auto [c0, c1] = k.cell_range(iv);
  auto pts = midpoints(p, path, c0, c1);
  const std::size_t n = pts.size();
  const int d = path.d;
  double diag = 0.0, off = 0.0;
  double gd[KernelPoint::kMaxDim] = {}, go[KernelPoint::kMaxDim] = {};
  PairTerms t;
  for (std::size_t a = 0; a < n; ++a) {
    double w = k.cell(c0 + a, c0 + a);
    pair_derivatives(p, pts[a], pts[a], false, t);
    diag += w * t.q;
    for (int i = 0; i < d; ++i) gd[i] += w * (t.dx[i] + t.dy[i]);
    for (std::size_t b = a + 1; b < n; ++b) {
      w = k.cell(c0 + a, c0 + b);
      pair_derivatives(p, pts[a], pts[b], false, t);
      off += w * t.q;
      for (int i = 0; i < d; ++i) go[i] += w * (t.dx[i] + t.dy[i]);
    }
  }
  SigmaResult r;
  r.value = std::max(0.0, diag + 2.0 * off);
  r.gradient.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) r.gradient[i] = gd[i] + 2.0 * go[i];
  r.cells_used = static_cast<int>(n * n);
  return r;
}

CrossTerms cross_terms(const ModelParams& p, const TimeKernel& k, const BrownianPath& a,
                       Interval iva, const BrownianPath& b, Interval ivb, bool with_mixed) {
  k.check_path(a);
  k.check_path(b);
  auto [a0, a1] = k.cell_range(iva);
  auto [b0, b1] = k.cell_range(ivb);
  auto pa = midpoints(p, a, a0, a1);
  auto pb = midpoints(p, b, b0, b1);
  const int d = a.d;
  double v = 0.0, ga[KernelPoint::kMaxDim] = {}, gb[KernelPoint::kMaxDim] = {},
         mx[KernelPoint::kMaxDim] = {};
  PairTerms t;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pb.size(); ++j) {
      double w = k.cell(a0 + i, b0 + j);
      pair_derivatives(p, pa[i], pb[j], with_mixed, t);
      v += w * t.q;
      for (int c = 0; c < d; ++c) {
        ga[c] += w * t.dx[c];
        gb[c] += w * t.dy[c];
        if (with_mixed) mx[c] += w * t.mixed[c];
      }
    }
  }
  CrossTerms r;
  r.value = v;
  r.grad_a.assign(ga, ga + d);
  r.grad_b.assign(gb, gb + d);
  if (with_mixed) r.mixed.assign(mx, mx + d);
  return r;
}

double ATerms::a1_sum() const {
  double s = 0.0;
  for (double v : a1) s += v;
  return s;
}

double ATerms::a2_dot_a3() const {
  double s = 0.0;
  for (std::size_t i = 0; i < a2.size(); ++i) s += a2[i] * a3[i];
  return s;
}

double ATerms::moment_integrand() const {
  double s = 0.0;
  for (std::size_t i = 0; i < a1.size(); ++i) {
    s += bilinear_exp_moment({a4, a2[i], a3[i], a1[i]});
  }
  return s;
}

namespace {

// sum over cells l of the line weight at s times dq/dx(x, m_l)
void line_gradient(const ModelParams& p, const TimeKernel& k, const KernelPoint& x, double s,
                   const std::vector<KernelPoint>& pts, std::size_t c0, double* out) {
  const Vec& t = k.grid().nodes();
  PairTerms pt;
  for (std::size_t l = 0; l < pts.size(); ++l) {
    double w = time_line_weight(k.h0(), s, t[c0 + l], t[c0 + l + 1]);
    pair_derivatives(p, x, pts[l], false, pt);
    for (int i = 0; i < x.d; ++i) out[i] += w * pt.dx[i];
  }
}

}  // namespace

ATerms a_terms(const ModelParams& p, const BrownianPath& path1, const BrownianPath& path2,
               double s1, double s2, double t) {
  if (!(path1.grid == path2.grid)) throw GridMismatch("a_terms: path grids differ");
  TimeKernel k(p.hurst.h0, path1.grid);
  std::size_t k1 = k.grid().index_of(s1), k2 = k.grid().index_of(s2);
  if (k1 == k2) throw SingularPoint("a_terms needs s1 != s2");
  Interval iv{t, k.grid().back()};
  auto [c0, c1] = k.cell_range(iv);
  const int d = path1.d;

  KernelPoint x1 = make_kernel_point(p, path1.at(k1));
  KernelPoint x2 = make_kernel_point(p, path2.at(k2));
  PairTerms pt;
  pair_derivatives(p, x1, x2, true, pt);

  ATerms r;
  double h0 = p.hurst.h0;
  double kern = alpha_const(h0) * std::pow(std::abs(s2 - s1), 2.0 * h0 - 2.0);
  r.a1.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) r.a1[i] = kern * pt.mixed[i];

  auto m1 = midpoints(p, path1, c0, c1);
  auto m2 = midpoints(p, path2, c0, c1);
  double g2[KernelPoint::kMaxDim] = {}, g3[KernelPoint::kMaxDim] = {};
  line_gradient(p, k, x1, s1, m1, c0, g2);
  line_gradient(p, k, x1, s1, m2, c0, g2);
  line_gradient(p, k, x2, s2, m2, c0, g3);
  line_gradient(p, k, x2, s2, m1, c0, g3);
  r.a2.assign(g2, g2 + d);
  r.a3.assign(g3, g3 + d);

  r.a4 = sigma_self(p, k, path1, iv).value + 2.0 * sigma_cross(p, k, path1, path2, iv, iv).value +
         sigma_self(p, k, path2, iv).value;
  return r;
}

void dump_cells(const ModelParams& p, const TimeKernel& k, const BrownianPath& path, Interval iv,
                std::ostream& os) {
  k.check_path(path);
  auto [c0, c1] = k.cell_range(iv);
  auto pts = midpoints(p, path, c0, c1);
  os << "k,l,weight,q,contribution\n";
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < pts.size(); ++b) {
      double w = k.cell(c0 + a, c0 + b), q = pair_q(p, pts[a], pts[b]);
      os << c0 + a << ',' << c0 + b << ',' << format_double(w) << ',' << format_double(q) << ','
         << format_double(w * q) << '\n';
    }
  }
}

}  // namespace fracfk
