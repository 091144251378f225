#pragma once

namespace fracfk {

// Second-order data of a jointly mean-zero Gaussian triple (X1, X2, Y).
struct MomentInputs {
  double var_y = 0.0;
  double cov_x1_y = 0.0;
  double cov_x2_y = 0.0;
  double cov_x1_x2 = 0.0;
};

// E e^Y
[[nodiscard]] double exp_moment(double var_y);
// E[X e^Y]
[[nodiscard]] double linear_exp_moment(double cov_x_y, double var_y);
// E[X1 X2 e^Y] = (Cov(X1,X2) + Cov(X1,Y) Cov(X2,Y)) e^{Var(Y)/2}
[[nodiscard]] double bilinear_exp_moment(const MomentInputs& in);

}  // namespace fracfk
