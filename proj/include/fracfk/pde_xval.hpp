#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "fracfk/field_sim.hpp"
#include "fracfk/model.hpp"
#include "fracfk/paths.hpp"

namespace fracfk {

// Uniform nodes t_0 = 0 < ... < t_N = T and x_0 = -L < ... < x_M = L.
struct PdeGrid {
  Vec t;
  Vec x;

  static PdeGrid make(double T, std::size_t time_cells, double L, std::size_t space_cells);
  [[nodiscard]] double dt() const { return t[1] - t[0]; }
  [[nodiscard]] double dx() const { return x[1] - x[0]; }
  [[nodiscard]] double half_width() const { return x.back(); }
};

enum class Scheme { Explicit, CrankNicolson };

struct PdeSolution {
  PdeGrid grid;
  std::vector<Vec> u;  // u[k][j] = u(t_k, x_j)

  // Linear interpolation in x at a time node.
  [[nodiscard]] double at(std::size_t k, double x) const;
};

// Backward march of -du = (u_xx / 2 + u W') dt, u(T) = phi, in d = 1 with
// Dirichlet data equal to the noise-free heat flow of phi at +-L.
[[nodiscard]] PdeSolution solve_mollified_pde(const ModelParams& p, const TerminalSpec& phi,
                                              const FieldSample& field, const MollifierParams& moll,
                                              const PdeGrid& grid, Scheme scheme);

struct FkComparison {
  double t = 0.0;
  double x = 0.0;
  double fd = 0.0;
  double mc = 0.0;
  double mc_se = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

using Probe = std::pair<double, double>;  // (t, x)

[[nodiscard]] std::vector<FkComparison> compare_fk(const ModelParams& p, const TerminalSpec& phi,
                                                   const FieldSample& field,
                                                   const MollifierParams& moll, const PdeGrid& grid,
                                                   int n_inner, std::uint64_t seed,
                                                   const std::vector<Probe>& probes = {{0.0, 0.0}},
                                                   Scheme scheme = Scheme::CrankNicolson,
                                                   int threads = 0);

// Same comparison against an already computed solution.
[[nodiscard]] std::vector<FkComparison> compare_fk(const ModelParams& p, const TerminalSpec& phi,
                                                   const FieldSample& field,
                                                   const MollifierParams& moll,
                                                   const PdeSolution& u, int n_inner,
                                                   std::uint64_t seed,
                                                   const std::vector<Probe>& probes, int threads = 0);

// Largest |u(t,x) - P_{T-t}phi(x) - int_t^T P_{r-t}[W' u](r, x) dr| over the
// probes, snapped to grid nodes. Empty probes mean t in {0, T/2}, x in {-1, 0, 1}.
[[nodiscard]] double mild_form_residual(const ModelParams& p, const TerminalSpec& phi,
                                        const FieldSample& field, const MollifierParams& moll,
                                        const PdeGrid& grid, const PdeSolution& u,
                                        const std::vector<Probe>& probes = {});

void write_solution_csv(const PdeSolution& u, std::ostream& os);

}  // namespace fracfk
