#pragma once

#include <span>
#include <string>
#include <vector>

namespace fracfk {

using Vec = std::vector<double>;

struct HurstParams {
  double h0 = 0.75;
  Vec h;

  [[nodiscard]] double h_min() const;
  [[nodiscard]] double h_max() const;
};

enum class WeightForm { SmoothPower };

// rho(x) = amplitude * prod_i (1 + x_i^2)^(-beta_i / 2). amplitude = 0 is the
// zero-noise model.
struct WeightParams {
  Vec betas;
  WeightForm form = WeightForm::SmoothPower;
  double amplitude = 1.0;
};

struct ModelParams {
  int d = 1;
  HurstParams hurst;
  WeightParams weight;
  double horizon = 1.0;

  [[nodiscard]] double alpha() const;
};

// Homogeneous model: every spatial axis shares h and beta.
[[nodiscard]] ModelParams make_model(int d, double h0, double h, double beta, double horizon = 1.0);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

[[nodiscard]] ValidationReport validate_params(const ModelParams& p);

[[nodiscard]] double r_h(double h, double x, double y);
[[nodiscard]] double dr_h_dx(double h, double x, double y);
[[nodiscard]] double dr_h_dy(double h, double x, double y);
[[nodiscard]] double alpha_const(double h);

struct RhoGrad {
  double value = 0.0;
  Vec gradient;
};

[[nodiscard]] RhoGrad rho_and_grad(const WeightParams& w, std::span<const double> x);

enum class QOrder { Value, GradX, MixedXiYi };

[[nodiscard]] double q_value(const ModelParams& p, std::span<const double> x,
                             std::span<const double> y);
[[nodiscard]] Vec q_grad_x(const ModelParams& p, std::span<const double> x,
                           std::span<const double> y);
// d^2 q / dx_i dy_i. Throws SingularPoint when x_i == y_i.
[[nodiscard]] double q_mixed(const ModelParams& p, std::span<const double> x,
                             std::span<const double> y, int i);

// Exact value of the double integral of alpha_H |u - v|^(2H-2) over [a,b]x[c,e].
[[nodiscard]] double time_cell_weight(double h0, double a, double b, double c, double e);

// Exact value of the integral of alpha_H |s - u|^(2H-2) over u in [a,b].
[[nodiscard]] double time_line_weight(double h0, double s, double a, double b);

// Per-point factors of q, precomputed once so that a pair evaluation costs a
// single pow per axis.
struct KernelPoint {
  static constexpr int kMaxDim = 3;
  int d = 0;
  double x[kMaxDim] = {};
  double pw[kMaxDim] = {};   // |x_i|^(2H_i)
  double dpw[kMaxDim] = {};  // H_i |x_i|^(2H_i - 1) sign(x_i)
  double rho = 0.0;
  double drho[kMaxDim] = {};
};

[[nodiscard]] KernelPoint make_kernel_point(const ModelParams& p, std::span<const double> x);

struct PairTerms {
  double q = 0.0;
  double dx[KernelPoint::kMaxDim] = {};
  double dy[KernelPoint::kMaxDim] = {};
  double mixed[KernelPoint::kMaxDim] = {};
};

// q at a pair of precomputed points; pair_derivatives also fills the x and y
// gradients and, when asked, the mixed derivatives (which throw on x_i == y_i).
[[nodiscard]] double pair_q(const ModelParams& p, const KernelPoint& x, const KernelPoint& y);
void pair_derivatives(const ModelParams& p, const KernelPoint& x, const KernelPoint& y,
                      bool with_mixed, PairTerms& out);

}  // namespace fracfk
