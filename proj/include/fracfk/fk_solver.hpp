#pragma once

#include <cstdint>
#include <span>

#include "fracfk/model.hpp"
#include "fracfk/paths.hpp"

namespace fracfk {

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long n = 0;
  std::uint64_t seed = 0;
};

struct MCVectorEstimate {
  Vec mean;
  Vec std_error;
  long long n = 0;
  std::uint64_t seed = 0;
};

// Mean and standard error of i.i.d. samples, reduced in a fixed order.
[[nodiscard]] MCEstimate summarize(std::span<const double> samples, std::uint64_t seed);

enum class ZMode { Pathwise, FiniteDifference };

struct SolverConfig {
  int n_paths = 1000;
  TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 64);
  ZMode z_mode = ZMode::Pathwise;
  double h_x = 0.0;  // <= 0 selects 1e-2 * (1 + |x|)
  bool antithetic = false;
  int threads = 0;   // <= 0 defers to FRACFK_THREADS, then 1
  Vec start;         // start of the base path for structure moments; empty means 0
};

// u(t,x) = E[phi(x + B_{T-t}) exp(Sigma/2)]. t must be a node of cfg.grid.
[[nodiscard]] MCEstimate estimate_u(const ModelParams& p, const TerminalSpec& phi, double t,
                                    std::span<const double> x, const SolverConfig& cfg,
                                    std::uint64_t seed);

// grad_x u(t,x), pathwise or by central differences with common paths.
[[nodiscard]] MCVectorEstimate estimate_z(const ModelParams& p, const TerminalSpec& phi, double t,
                                          std::span<const double> x, const SolverConfig& cfg,
                                          std::uint64_t seed);

// Second moments of (X_t, X_s) for X = Y or Z, estimated jointly from one set
// of coupled paths. increment = E|X_t - X_s|^2 and is exactly 0 when t == s.
struct StructureMoments {
  double t = 0.0;
  double s = 0.0;
  MCEstimate cross;      // E[X_t . X_s]
  MCEstimate first;      // E|X_t|^2
  MCEstimate second;     // E|X_s|^2
  MCEstimate increment;  // E|X_t - X_s|^2
};

[[nodiscard]] StructureMoments structure_moment_y(const ModelParams& p, const TerminalSpec& phi,
                                                  double t, double s, const SolverConfig& cfg,
                                                  std::uint64_t seed);

[[nodiscard]] StructureMoments structure_moment_z(const ModelParams& p, const TerminalSpec& phi,
                                                  double t, double s, const SolverConfig& cfg,
                                                  std::uint64_t seed);

}  // namespace fracfk
