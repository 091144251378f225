#pragma once

#include <cstdint>
#include <vector>

#include "fracfk/field_sim.hpp"
#include "fracfk/fk_solver.hpp"
#include "fracfk/model.hpp"
#include "fracfk/paths.hpp"

namespace fracfk {

struct StructureSeries {
  Vec lags;
  std::vector<MCEstimate> moments;
  double order = 2.0;
};

struct HolderFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Least-squares slope of log(moment) against log(lag); the 95% interval
// propagates each moment's standard error through the log linearly.
[[nodiscard]] HolderFit holder_fit(const StructureSeries& series);

// Field realizations plus the paths drawn per realization for the
// field-against-path oracles.
struct FieldMcConfig {
  MollifierParams moll;
  std::vector<Vec> space_axes;
  int n_fields = 100;
  int paths_per_field = 10;
};

// BSDE residual R = Y_0 - xi - sum Y_k W'(t_k, B_k) dt + sum Z_k dB_k along
// outer paths of one field realization, with Y_k and Z_k from inner Monte
// Carlo at (t_k, B_k). Returns E[R^2] over cfg.n_paths outer paths.
[[nodiscard]] MCEstimate bsde_residual(const ModelParams& p, const TerminalSpec& phi,
                                       const FieldSample& field, const MollifierParams& moll,
                                       const SolverConfig& cfg, int n_inner, std::uint64_t seed);

// The residual on cfg.grid and on `levels - 1` successive halvings of it.
[[nodiscard]] std::vector<MCEstimate> bsde_residual_refinement(
    const ModelParams& p, const TerminalSpec& phi, const FieldSample& field,
    const MollifierParams& moll, const SolverConfig& cfg, int n_inner, std::uint64_t seed,
    int levels = 3);

struct Integrand {
  enum class Kind { One, Indicator };
  Kind kind = Kind::One;
  double a = 0.0;
  double b = 0.0;

  static Integrand one() { return {}; }
  static Integrand indicator(double a, double b) { return {Kind::Indicator, a, b}; }
};

// mc: second moment of the smoothed stochastic integral of the integrand
// along paths, one sample unit per field (averaged over its paths).
// analytic: quadrature double integral averaged over the same paths.
struct IsometryResult {
  MCEstimate mc;
  MCEstimate analytic;
};

[[nodiscard]] IsometryResult isometry_check(const ModelParams& p, const Integrand& f,
                                            const SolverConfig& cfg, const FieldMcConfig& fcfg,
                                            std::uint64_t seed);

// Relative error between exp(V(s,t)) and 1 + sum exp(V(s,r_i)) (V(s,r_{i+1}) - V(s,r_i))
// for uniform partitions of [s, t] with the given sizes; V(s,r) is the smoothed
// noise integrated along the path. s and t default to the ends of the path grid.
[[nodiscard]] Vec alpha_identity_check(const ModelParams& p, const FieldSample& field,
                                       const MollifierParams& moll, const BrownianPath& path,
                                       const std::vector<int>& partition_sizes);
[[nodiscard]] Vec alpha_identity_check(const ModelParams& p, const FieldSample& field,
                                       const MollifierParams& moll, const BrownianPath& path,
                                       const std::vector<int>& partition_sizes, double s, double t);

struct TailProbe {
  double lambda = 0.0;
  MCEstimate at_n;
  MCEstimate at_2n;
  bool stable = false;  // |at_n - at_2n| < 3 combined standard errors
};

// E exp(lambda V_t) = E_B exp(lambda^2 Sigma / 2) for |lambda| <= 4.
[[nodiscard]] std::vector<TailProbe> exp_tail_probe(const ModelParams& p, const Vec& lambdas, double t,
                                                    const SolverConfig& cfg, std::uint64_t seed);

}  // namespace fracfk
