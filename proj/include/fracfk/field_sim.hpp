#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "fracfk/model.hpp"
#include "fracfk/paths.hpp"

namespace fracfk {

// eps is the standard deviation of the spatial Gaussian (truncated at 4 eps),
// eta the length of the trailing time window.
struct MollifierParams {
  double eps = 0.1;
  double eta = 0.1;
};

// Lower Cholesky factors of [R_H(u_j, u_k)] for the time axis and each space
// axis. Rows of zero nodes are identically zero.
struct FieldFactors {
  std::vector<double> time_factor;               // n_t x n_t, row-major
  std::vector<std::vector<double>> space_factor;  // n_i x n_i each
};

// values[ti * space_size() + j], j the row-major index over space axes
// (axis 0 slowest).
struct FieldSample {
  TimeGrid time_grid;
  std::vector<Vec> space_axes;
  Vec values;
  std::shared_ptr<const FieldFactors> factor_cache;

  [[nodiscard]] std::size_t space_size() const;
};

class FieldSampler {
 public:
  FieldSampler(const ModelParams& p, TimeGrid time_grid, std::vector<Vec> space_axes);

  [[nodiscard]] FieldSample draw(std::uint64_t seed, std::uint64_t index) const;
  [[nodiscard]] FieldSample zero() const;
  [[nodiscard]] const std::shared_ptr<const FieldFactors>& factors() const { return factors_; }

 private:
  ModelParams params_;
  TimeGrid time_grid_;
  std::vector<Vec> axes_;
  Vec rho_;  // weight at every spatial node
  std::shared_ptr<const FieldFactors> factors_;
};

[[nodiscard]] std::vector<FieldSample> sample_field(const ModelParams& p, const TimeGrid& time_grid,
                                                    const std::vector<Vec>& space_axes, int count,
                                                    std::uint64_t seed, int threads = 1);

// Uniform axis helper: nodes lo, lo + h, ..., hi.
[[nodiscard]] Vec uniform_axis(double lo, double hi, std::size_t cells);

// Smoothed increment of the field at (s, x): the trailing-window time
// difference quotient, averaged against the truncated spatial Gaussian.
[[nodiscard]] double mollified_noise_eval(const FieldSample& field, const MollifierParams& moll,
                                          double s, std::span<const double> x);

// Trapezoid rule along the path grid of the mollified noise on [t, T].
[[nodiscard]] double v_mollified(const FieldSample& field, const BrownianPath& path, double t,
                                 const MollifierParams& moll);

// Values of the smoothed noise along the path at every grid node.
[[nodiscard]] Vec mollified_along_path(const FieldSample& field, const BrownianPath& path,
                                       const MollifierParams& moll);

void write_field_csv(const FieldSample& field, std::ostream& os);

}  // namespace fracfk
