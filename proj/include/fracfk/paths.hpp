#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fracfk/model.hpp"

namespace fracfk {

class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(Vec nodes);

  static TimeGrid uniform(double t0, double t1, std::size_t cells);

  [[nodiscard]] const Vec& nodes() const { return nodes_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t cells() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }
  [[nodiscard]] double front() const { return nodes_.front(); }
  [[nodiscard]] double back() const { return nodes_.back(); }
  [[nodiscard]] double operator[](std::size_t k) const { return nodes_[k]; }

  [[nodiscard]] std::optional<std::size_t> find(double t) const;
  // Throws GridMismatch when t is not a node.
  [[nodiscard]] std::size_t index_of(double t) const;
  // Nodes from t (a node) to the end.
  [[nodiscard]] TimeGrid tail(double t) const;

  bool operator==(const TimeGrid& o) const { return nodes_ == o.nodes_; }

 private:
  Vec nodes_;
};

// Node-major storage: the value of coordinate i at node k is values[k*d + i].
struct BrownianPath {
  TimeGrid grid;
  int d = 1;
  Vec values;

  [[nodiscard]] std::span<const double> at(std::size_t k) const {
    return {values.data() + k * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  [[nodiscard]] double operator()(std::size_t k, int i) const {
    return values[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
  }
  [[nodiscard]] Vec start_point() const { return Vec(at(0).begin(), at(0).end()); }
  [[nodiscard]] Vec end_point() const { return Vec(at(grid.size() - 1).begin(), at(grid.size() - 1).end()); }
};

// A path that sits at x at every node.
[[nodiscard]] BrownianPath frozen_path(const TimeGrid& grid, std::span<const double> x);

// Path `index` of the stream `seed`; independent of how many other paths exist.
[[nodiscard]] BrownianPath simulate_path(const TimeGrid& grid, int d, std::span<const double> start,
                                         std::uint64_t seed, std::uint64_t index,
                                         bool negate = false);

[[nodiscard]] std::vector<BrownianPath> simulate_paths(const TimeGrid& grid, int d,
                                                       std::span<const double> start, int count,
                                                       std::uint64_t seed, int threads = 1);

// Copy of `common` up to branch_time followed by fresh increments from the
// branch stream (seed, index).
[[nodiscard]] BrownianPath branch_path(const BrownianPath& common, double branch_time,
                                       std::uint64_t seed, std::uint64_t index);

[[nodiscard]] std::vector<std::pair<BrownianPath, BrownianPath>> branch_paths(
    const BrownianPath& common, double branch_time, int count, std::uint64_t seed);

// `base` up to time s, then base(s) plus the increments of `donor` after s.
[[nodiscard]] BrownianPath graft_increments(const BrownianPath& base, double s,
                                            const BrownianPath& donor);

[[nodiscard]] BrownianPath shifted(const BrownianPath& path, std::span<const double> dx);

enum class TerminalKind { Constant, Linear, Cosine, GaussianBump };

// phi for the built-in terminal conditions:
//   Constant      c
//   Linear        a.x + c
//   Cosine        cos(freq.x)
//   GaussianBump  exp(-|x - center|^2 / (2 width^2))
// each multiplied by `scale`.
struct TerminalSpec {
  TerminalKind kind = TerminalKind::Constant;
  double c = 0.0;
  Vec a;
  Vec freq;
  Vec center;
  double width = 1.0;
  double scale = 1.0;
  double holder_kappa = std::numeric_limits<double>::infinity();

  static TerminalSpec constant(double c);
  static TerminalSpec linear(Vec a, double c);
  static TerminalSpec cosine(Vec freq);
  static TerminalSpec gaussian_bump(Vec center, double width);
};

struct TerminalValue {
  double value = 0.0;
  Vec gradient;
};

[[nodiscard]] TerminalValue terminal_eval(const TerminalSpec& spec, std::span<const double> x);
[[nodiscard]] double terminal_value(const TerminalSpec& spec, std::span<const double> x);

// E phi(x + B_tau) in closed form.
[[nodiscard]] double heat_flow(const TerminalSpec& spec, double tau, std::span<const double> x);

}  // namespace fracfk
