#include "fracfk/gauss_moments.hpp"

#include <cmath>
#include <string>

#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

void check_var(double v) {
  if (!(v >= 0.0)) throw DomainError("variance must be >= 0, got " + std::to_string(v));
}

}  // namespace

double exp_moment(double var_y) {
  check_var(var_y);
  return std::exp(0.5 * var_y);
}

double linear_exp_moment(double cov_x_y, double var_y) { return cov_x_y * exp_moment(var_y); }

double bilinear_exp_moment(const MomentInputs& in) {
  return (in.cov_x1_x2 + in.cov_x1_y * in.cov_x2_y) * exp_moment(in.var_y);
}

}  // namespace fracfk
