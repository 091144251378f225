#pragma once

#include <iosfwd>
#include <utility>

#include "fracfk/model.hpp"
#include "fracfk/paths.hpp"

namespace fracfk {

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

struct SigmaResult {
  double value = 0.0;
  Vec gradient;  // empty unless requested
  int cells_used = 0;
};

// Exact singular weights for every cell pair of a grid. Building this is the
// expensive part of a quadrature call, so estimators build it once per grid.
class TimeKernel {
 public:
  TimeKernel(double h0, TimeGrid grid);

  [[nodiscard]] double h0() const { return h0_; }
  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] std::size_t cells() const { return n_; }
  [[nodiscard]] double cell(std::size_t k, std::size_t l) const { return w_[k * n_ + l]; }
  // Cells [first, last) covering the interval; its ends must be nodes.
  [[nodiscard]] std::pair<std::size_t, std::size_t> cell_range(Interval iv) const;
  void check_path(const BrownianPath& p) const;

 private:
  double h0_;
  TimeGrid grid_;
  std::size_t n_;
  Vec w_;
};

[[nodiscard]] SigmaResult sigma_self(const ModelParams& p, const BrownianPath& path, double t);
[[nodiscard]] SigmaResult sigma_self(const ModelParams& p, const TimeKernel& k,
                                     const BrownianPath& path, Interval iv);

[[nodiscard]] SigmaResult sigma_cross(const ModelParams& p, const BrownianPath& path1,
                                      const BrownianPath& path2, Interval iv1, Interval iv2);
[[nodiscard]] SigmaResult sigma_cross(const ModelParams& p, const TimeKernel& k,
                                      const BrownianPath& path1, const BrownianPath& path2,
                                      Interval iv1, Interval iv2);

// Sigma and its gradient under a shift of the whole path.
[[nodiscard]] SigmaResult grad_sigma_x(const ModelParams& p, const BrownianPath& path, double t);
[[nodiscard]] SigmaResult grad_sigma_x(const ModelParams& p, const TimeKernel& k,
                                       const BrownianPath& path, Interval iv);

// Cross covariance with its derivatives under separate shifts of each path:
// grad_a_i = sum w dq/dx_i, grad_b_i = sum w dq/dy_i, mixed_i = sum w d2q/dx_i dy_i.
struct CrossTerms {
  double value = 0.0;
  Vec grad_a;
  Vec grad_b;
  Vec mixed;
};

[[nodiscard]] CrossTerms cross_terms(const ModelParams& p, const TimeKernel& k,
                                     const BrownianPath& a, Interval iva, const BrownianPath& b,
                                     Interval ivb, bool with_mixed);

struct ATerms {
  Vec a1;  // per component i
  Vec a2;
  Vec a3;
  double a4 = 0.0;

  [[nodiscard]] double a1_sum() const;
  [[nodiscard]] double a2_dot_a3() const;
  // sum_i E[X1_i X2_i e^Y] with Cov(X1_i,X2_i) = a1_i, Cov(X1_i,Y) = a2_i,
  // Cov(X2_i,Y) = a3_i and Var(Y) = a4.
  [[nodiscard]] double moment_integrand() const;
};

// Throws SingularPoint when s1 == s2 or when the two evaluation points share
// a coordinate.
[[nodiscard]] ATerms a_terms(const ModelParams& p, const BrownianPath& path1,
                             const BrownianPath& path2, double s1, double s2, double t);

// Writes k,l,weight,q,contribution for every cell pair of a self-variance.
void dump_cells(const ModelParams& p, const TimeKernel& k, const BrownianPath& path, Interval iv,
                std::ostream& os);

}  // namespace fracfk
