#pragma once

// Alternating minimization for a locally optimal hard partition.
//
// Each sweep visits every data point and moves it to the cell with the
// smallest scaled distance D'. In sequential mode the cell statistics are
// refreshed after every move, which keeps the objective non-increasing; in
// batch mode all points are reassigned against frozen statistics.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "copart/error.hpp"
#include "copart/objective.hpp"
#include "copart/report.hpp"

namespace copart {

enum class SweepMode { sequential, batch };

inline std::string_view to_string(SweepMode m) { return m == SweepMode::sequential ? "sequential" : "batch"; }

struct SolverOptions {
  std::size_t max_iterations = 500;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  /// When set, a single run starts from this assignment instead of random draws.
  std::optional<std::vector<std::size_t>> initial_assignment;
  SweepMode sweep_mode = SweepMode::sequential;
  /// A point moves only if its own cell is farther than the best by more than this.
  double tolerance = 1e-12;
  /// Sequential mode: when another cell ties with the point's own cell,
  /// try the move and keep it if the objective strictly drops.
  bool probe_ties = true;
  /// After convergence, seed each empty cell with the point farthest from its own cell.
  bool reseed_empty = false;
};

struct SweepResult {
  std::vector<std::size_t> assignment;
  std::size_t changed = 0;
  /// Sequential moves undone because the objective went up.
  std::size_t rejected = 0;
};

/// Incrementally maintained evaluation of a hard partition. After refresh()
/// the state is identical to evaluate(); after move() it agrees with it to
/// rounding.
class SweepState {
 public:
  SweepState(const ProblemSpec& spec, std::vector<std::size_t> cells)
      : spec_(&spec), cells_(std::move(cells)) {
    detail::check_dimensions(spec, Quantizer::hard(cells_, spec.num_cells));
    const std::size_t n_src = spec.source_size();
    point_joint_ = spec.joint.entries().transposed();
    point_post_ = spec.joint.posteriors().transposed();
    scratch_a_.resize(n_src);
    scratch_b_.resize(n_src);
    scratch_c_.resize(n_src);
    refresh();
  }

  const EvaluatedState& state() const noexcept { return state_; }
  const std::vector<std::size_t>& cells() const noexcept { return cells_; }
  double objective() const noexcept { return state_.objective; }
  std::size_t population(std::size_t k) const { return population_[k]; }

  void refresh() {
    const ProblemSpec& spec = *spec_;
    state_ = evaluate(spec, Quantizer::hard(cells_, spec.num_cells));
    population_.assign(spec.num_cells, 0);
    for (std::size_t c : cells_) ++population_[c];
    const Matrix out_t = state_.output_joints.entries.transposed();
    output_impurity_.resize(spec.output_size());
    for (std::size_t h = 0; h < spec.output_size(); ++h) output_impurity_[h] = cell_impurity(spec.impurity, out_t.row(h));
    cell_constraint_.resize(spec.num_cells);
    for (std::size_t k = 0; k < spec.num_cells; ++k)
      cell_constraint_[k] = constraint_value(spec.constraint, k, state_.cluster_joints.cluster_mass[k]);
  }

  void scaled_distances(std::size_t m, std::span<double> out) const {
    const std::size_t n_src = spec_->source_size();
    const auto post = point_post_.row(m);
    for (std::size_t k = 0; k < spec_->num_cells; ++k) {
      double s = 0.0;
      for (std::size_t n = 0; n < n_src; ++n) s += state_.cell_weights(k, n) * post[n];
      out[k] = s + state_.constraint_derivatives[k];
    }
  }

  /// Moves Y_m to cell `to` and updates every derived quantity.
  void move(std::size_t m, std::size_t to) {
    const ProblemSpec& spec = *spec_;
    const std::size_t from = cells_[m];
    if (from == to) return;
    const std::size_t n_src = spec.source_size(), h_out = spec.output_size(), k_cells = spec.num_cells;
    const auto x = point_joint_.row(m);
    const Matrix& a = spec.channel.entries();
    Matrix& cluster = state_.cluster_joints.entries;
    Matrix& out = state_.output_joints.entries;

    cells_[m] = to;
    --population_[from];
    ++population_[to];
    for (std::size_t n = 0; n < n_src; ++n) {
      cluster(n, from) = population_[from] == 0 ? 0.0 : std::max(cluster(n, from) - x[n], 0.0);
      cluster(n, to) += x[n];
    }
    for (std::size_t k : {from, to}) {
      state_.cluster_joints.cluster_mass[k] = cluster.col_sum(k);
      state_.constraint_derivatives[k] =
          constraint_derivative(spec.constraint, k, state_.cluster_joints.cluster_mass[k]);
      cell_constraint_[k] = constraint_value(spec.constraint, k, state_.cluster_joints.cluster_mass[k]);
    }

    for (std::size_t h = 0; h < h_out; ++h) {
      const double delta = a(to, h) - a(from, h);
      if (delta == 0.0) continue;
      for (std::size_t n = 0; n < n_src; ++n) {
        out(n, h) = std::max(out(n, h) + x[n] * delta, 0.0);
        scratch_a_[n] = out(n, h);
      }
      state_.output_joints.output_mass[h] = out.col_sum(h);
      output_impurity_[h] = cell_impurity(spec.impurity, scratch_a_);
      clamped_cell_gradient(spec.impurity, scratch_a_, scratch_b_, scratch_c_);
      for (std::size_t n = 0; n < n_src; ++n) state_.output_gradients(n, h) = scratch_b_[n];
    }

    for (std::size_t k = 0; k < k_cells; ++k)
      for (std::size_t n = 0; n < n_src; ++n) {
        double s = 0.0;
        for (std::size_t h = 0; h < h_out; ++h) s += a(k, h) * state_.output_gradients(n, h);
        state_.cell_weights(k, n) = spec.beta * s;
      }

    double f = 0.0, g = 0.0;
    for (double v : output_impurity_) f += v;
    for (double v : cell_constraint_) g += v;
    state_.F_value = f;
    state_.G_value = g;
    state_.objective = spec.beta * f + g;
  }

  SweepResult sweep(SweepMode mode, double tolerance, bool probe_ties) {
    return mode == SweepMode::sequential ? sweep_sequential(tolerance, probe_ties) : sweep_batch();
  }

 private:
  SweepResult sweep_sequential(double tolerance, bool probe_ties) {
    const std::size_t k_cells = spec_->num_cells;
    SweepResult r;
    std::vector<double> row(k_cells);
    for (std::size_t m = 0; m < cells_.size(); ++m) {
      const std::size_t own = cells_[m];
      scaled_distances(m, row);
      const std::size_t best = argmin_cell(row);
      if (row[own] - row[best] > tolerance) {
        const double before = state_.objective;
        move(m, best);
        if (state_.objective > before) {
          move(m, own);
          ++r.rejected;
        } else {
          ++r.changed;
        }
      } else if (probe_ties) {
        const double margin = std::max(tolerance, kProbeMargin);
        for (std::size_t k = 0; k < k_cells; ++k) {
          if (k == own || row[k] - row[own] > kCertificateTolerance) continue;
          const double before = state_.objective;
          move(m, k);
          if (before - state_.objective > margin) {
            ++r.changed;
            break;
          }
          move(m, own);
        }
      }
    }
    r.assignment = cells_;
    return r;
  }

  SweepResult sweep_batch() {
    const std::size_t k_cells = spec_->num_cells;
    SweepResult r;
    std::vector<double> row(k_cells);
    std::vector<std::size_t> next(cells_.size());
    for (std::size_t m = 0; m < cells_.size(); ++m) {
      scaled_distances(m, row);
      next[m] = argmin_cell(row);
      if (next[m] != cells_[m]) ++r.changed;
    }
    cells_ = std::move(next);
    refresh();
    r.assignment = cells_;
    return r;
  }

  static constexpr double kProbeMargin = 1e-12;

  const ProblemSpec* spec_;
  std::vector<std::size_t> cells_;
  std::vector<std::size_t> population_;
  EvaluatedState state_;
  Matrix point_joint_;  // M x N
  Matrix point_post_;   // M x N
  std::vector<double> output_impurity_;
  std::vector<double> cell_constraint_;
  std::vector<double> scratch_a_, scratch_b_, scratch_c_;
};

/// One reassignment pass over every data point, starting from a hard quantizer.
inline SweepResult reassign_sweep(const ProblemSpec& spec, const Quantizer& q, SweepMode mode,
                                  double tolerance = 1e-12, bool probe_ties = true) {
  SweepState ws(spec, q.cells());
  return ws.sweep(mode, tolerance, probe_ties);
}

namespace detail {

inline std::vector<std::size_t> random_assignment(std::size_t m_data, std::size_t k_cells, std::uint64_t seed,
                                                  std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, k_cells - 1);
  std::vector<std::size_t> cells(m_data);
  for (;;) {
    for (auto& c : cells) c = pick(rng);
    const bool single = std::all_of(cells.begin(), cells.end(), [&](std::size_t c) { return c == cells.front(); });
    if (k_cells == 1 || m_data < 2 || !single) return cells;
  }
}

struct RestartOutcome {
  std::vector<std::size_t> assignment;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> trace;
  bool converged = false;
};

/// Moves the point farthest from its own cell into the lowest empty cell.
/// Returns false when there is nothing to do.
inline bool reseed_one_empty_cell(SweepState& ws, std::size_t k_cells) {
  std::optional<std::size_t> empty;
  for (std::size_t k = 0; k < k_cells && !empty; ++k)
    if (ws.population(k) == 0) empty = k;
  if (!empty) return false;
  std::vector<double> row(k_cells);
  std::optional<std::size_t> farthest;
  double far_dist = 0.0;
  for (std::size_t m = 0; m < ws.cells().size(); ++m) {
    if (ws.population(ws.cells()[m]) < 2) continue;
    ws.scaled_distances(m, row);
    const double d = row[ws.cells()[m]];
    if (!farthest || d > far_dist) {
      farthest = m;
      far_dist = d;
    }
  }
  if (!farthest) return false;
  ws.move(*farthest, *empty);
  ws.refresh();
  return true;
}

inline RestartOutcome run_restart(const ProblemSpec& spec, std::vector<std::size_t> init, const SolverOptions& opts) {
  SweepState ws(spec, std::move(init));
  RestartOutcome out;
  out.trace.push_back(ws.objective());
  std::vector<std::size_t> best_cells = ws.cells();
  double best_obj = ws.objective();

  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const SweepResult r = ws.sweep(opts.sweep_mode, opts.tolerance, opts.probe_ties);
    ws.refresh();
    ++out.iterations;
    out.trace.push_back(ws.objective());

    if (opts.sweep_mode == SweepMode::batch) {
      if (ws.objective() > best_obj + 1e-12) break;  // cycling; keep best seen
      if (ws.objective() < best_obj) {
        best_obj = ws.objective();
        best_cells = ws.cells();
      }
    }
    if (r.changed == 0) {
      if (opts.reseed_empty && reseed_one_empty_cell(ws, spec.num_cells)) continue;
      out.converged = r.rejected == 0;
      break;
    }
  }

  if (opts.sweep_mode == SweepMode::batch && ws.objective() > best_obj) {
    out.assignment = std::move(best_cells);
    out.objective = best_obj;
  } else {
    out.assignment = ws.cells();
    out.objective = ws.objective();
  }
  return out;
}

}  // namespace detail

inline SolveReport solve_iterative(const ProblemSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  if (opts.max_iterations < 1) throw Error(ErrorCode::InvalidSpec, "max_iterations must be at least 1");
  if (opts.restarts < 1) throw Error(ErrorCode::InvalidSpec, "restarts must be at least 1");
  const std::size_t m_data = spec.data_size(), k_cells = spec.num_cells;

  SolveReport report;
  report.solver_name = "iterative";

  if (k_cells == 1) {
    report.assignment.assign(m_data, 0);
    report.iterations_used = {0};
    finalize_report(spec, report);
    report.objective_trace = {report.objective};
    report.restart_objectives = {report.objective};
    return report;
  }

  if (opts.initial_assignment) detail::check_dimensions(spec, Quantizer::hard(*opts.initial_assignment, k_cells));
  const std::size_t runs = opts.initial_assignment ? 1 : opts.restarts;

  std::optional<detail::RestartOutcome> best;
  for (std::size_t r = 0; r < runs; ++r) {
    auto init = opts.initial_assignment ? *opts.initial_assignment
                                        : detail::random_assignment(m_data, k_cells, opts.seed, r);
    detail::RestartOutcome o = detail::run_restart(spec, std::move(init), opts);
    report.iterations_used.push_back(o.iterations);
    report.restart_objectives.push_back(o.objective);
    if (!best || o.objective < best->objective) best = std::move(o);
  }

  report.assignment = best->assignment;
  report.objective_trace = best->trace;
  report.converged = best->converged;
  finalize_report(spec, report);
  return report;
}

}  // namespace copart
