#pragma once

// Exact solvers.
//
//  - solve_bruteforce: every one of the K^M hard assignments. Ground truth
//    for small instances.
//  - solve_binary_thresholds: binary sources only. Optimal cells are
//    intervals of the posterior p(X_1 | Y), so it enumerates contiguous
//    groupings of the sorted points and every injective labeling of the
//    groups onto channel inputs.
//  - solve_dp_identity: binary source, identity channel, same constraint on
//    every cell. The objective is then additive over intervals and an
//    O(K M^2) dynamic program is exact.
//
// check_hyperplane_separation certifies the nearest-cell condition for a
// given partition (and, for binary sources, interval structure).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "copart/error.hpp"
#include "copart/objective.hpp"
#include "copart/report.hpp"

namespace copart {

/// Objectives closer than this are treated as equal when picking a winner,
/// so the earliest candidate in enumeration order is kept.
inline constexpr double kTieBreakTolerance = 1e-12;
/// Upper bound on M log2(K) for exhaustive enumeration.
inline constexpr double kBruteForceLimit = 22.0;
/// Upper bound on the number of (grouping, labeling) candidates.
inline constexpr double kThresholdCandidateLimit = 5e7;

/// Data indices sorted by p(X_1 | Y_m) ascending; ties by original index.
inline std::vector<std::size_t> sorted_by_posterior(const JointDistribution& joint) {
  std::vector<std::size_t> order(joint.data_size());
  std::iota(order.begin(), order.end(), 0);
  const Matrix& post = joint.posteriors();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return post(0, a) < post(0, b); });
  return order;
}

inline SolveReport solve_bruteforce(const ProblemSpec& spec) {
  spec.validate();
  const std::size_t m_data = spec.data_size(), k_cells = spec.num_cells;
  const double size = static_cast<double>(m_data) * std::log2(static_cast<double>(k_cells));
  if (size > kBruteForceLimit)
    throw Error(ErrorCode::InstanceTooLarge, "brute force needs M log2 K <= 22, got " + std::to_string(size));

  std::vector<std::size_t> cells(m_data, 0), best = cells;
  double best_obj = objective_value(spec, Quantizer::hard(cells, k_cells));
  // Odometer in lexicographic order, last point fastest.
  for (;;) {
    std::size_t pos = m_data;
    while (pos > 0 && cells[pos - 1] + 1 == k_cells) cells[--pos] = 0;
    if (pos == 0) break;
    ++cells[pos - 1];
    const double obj = objective_value(spec, Quantizer::hard(cells, k_cells));
    if (obj < best_obj - kTieBreakTolerance) {
      best_obj = obj;
      best = cells;
    }
  }

  SolveReport report;
  report.solver_name = "bruteforce";
  report.assignment = std::move(best);
  finalize_report(spec, report);
  report.objective_trace = {report.objective};
  return report;
}

namespace detail {

inline void require_binary(const ProblemSpec& spec, const char* solver) {
  if (spec.source_size() != 2)
    throw Error(ErrorCode::NotBinary, std::string(solver) + " needs a binary source, got N = " +
                                          std::to_string(spec.source_size()));
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// Advances `idx` (strictly increasing, values < n) to the next combination.
inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t r = idx.size();
  for (std::size_t i = r; i-- > 0;) {
    if (idx[i] < n - r + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

/// Advances `labels` to the next injective map into {0..k-1} in lexicographic order.
inline bool next_injection(std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t j = labels.size();
  std::vector<bool> used(k, false);
  for (std::size_t pos = j; pos-- > 0;) {
    std::fill(used.begin(), used.end(), false);
    for (std::size_t i = 0; i < pos; ++i) used[labels[i]] = true;
    std::size_t c = labels[pos] + 1;
    while (c < k && used[c]) ++c;
    if (c == k) continue;
    labels[pos] = c;
    used[c] = true;
    std::size_t fill = 0;
    for (std::size_t i = pos + 1; i < j; ++i) {
      while (used[fill]) ++fill;
      labels[i] = fill;
      used[fill] = true;
    }
    return true;
  }
  return false;
}

}  // namespace detail

inline SolveReport solve_binary_thresholds(const ProblemSpec& spec) {
  spec.validate();
  detail::require_binary(spec, "threshold search");
  const std::size_t m_data = spec.data_size(), k_cells = spec.num_cells, h_out = spec.output_size();
  const std::size_t max_groups = std::min(k_cells, m_data);

  double candidates = 0.0;
  for (std::size_t j = 1; j <= max_groups; ++j) {
    double labelings = 1.0;
    for (std::size_t i = 0; i < j; ++i) labelings *= static_cast<double>(k_cells - i);
    candidates += detail::binomial(m_data - 1, j - 1) * labelings;
  }
  if (candidates > kThresholdCandidateLimit)
    throw Error(ErrorCode::InstanceTooLarge, "threshold search would visit " + std::to_string(candidates) +
                                                 " candidates");

  const std::vector<std::size_t> order = sorted_by_posterior(spec.joint);
  // prefix(i) = joint mass of the first i sorted points
  std::vector<double> pre0(m_data + 1, 0.0), pre1(m_data + 1, 0.0);
  for (std::size_t i = 0; i < m_data; ++i) {
    pre0[i + 1] = pre0[i] + spec.joint(0, order[i]);
    pre1[i + 1] = pre1[i] + spec.joint(1, order[i]);
  }
  const Matrix& a = spec.channel.entries();

  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_bounds, best_labels;
  std::vector<double> g0, g1, out0(h_out), out1(h_out), cell_mass(k_cells);

  for (std::size_t j = 1; j <= max_groups; ++j) {
    // bounds: 0 = b_0 < b_1 < ... < b_j = M; the cuts b_1..b_{j-1} range over 1..M-1
    std::vector<std::size_t> cuts(j - 1);
    std::iota(cuts.begin(), cuts.end(), 0);
    bool more_cuts = true;
    while (more_cuts) {
      std::vector<std::size_t> bounds{0};
      for (std::size_t c : cuts) bounds.push_back(c + 1);
      bounds.push_back(m_data);
      g0.assign(j, 0.0);
      g1.assign(j, 0.0);
      for (std::size_t i = 0; i < j; ++i) {
        g0[i] = pre0[bounds[i + 1]] - pre0[bounds[i]];
        g1[i] = pre1[bounds[i + 1]] - pre1[bounds[i]];
      }

      std::vector<std::size_t> labels(j);
      std::iota(labels.begin(), labels.end(), 0);
      do {
        std::fill(out0.begin(), out0.end(), 0.0);
        std::fill(out1.begin(), out1.end(), 0.0);
        std::fill(cell_mass.begin(), cell_mass.end(), 0.0);
        for (std::size_t i = 0; i < j; ++i) {
          cell_mass[labels[i]] = g0[i] + g1[i];
          for (std::size_t h = 0; h < h_out; ++h) {
            out0[h] += g0[i] * a(labels[i], h);
            out1[h] += g1[i] * a(labels[i], h);
          }
        }
        double f = 0.0;
        for (std::size_t h = 0; h < h_out; ++h) {
          const double v[2] = {std::max(out0[h], 0.0), std::max(out1[h], 0.0)};
          f += cell_impurity(spec.impurity, v);
        }
        const double obj = spec.beta * f + detail::total_constraint(spec.constraint, cell_mass);
        if (obj < best_obj - kTieBreakTolerance) {
          best_obj = obj;
          best_bounds = bounds;
          best_labels = labels;
        }
      } while (detail::next_injection(labels, k_cells));

      more_cuts = j > 1 && detail::next_combination(cuts, m_data - 1);
    }
  }

  SolveReport report;
  report.solver_name = "thresholds";
  report.assignment.assign(m_data, 0);
  for (std::size_t i = 0; i + 1 < best_bounds.size(); ++i)
    for (std::size_t p = best_bounds[i]; p < best_bounds[i + 1]; ++p) report.assignment[order[p]] = best_labels[i];
  finalize_report(spec, report);
  report.objective_trace = {report.objective};
  return report;
}

namespace detail {

/// Relabels cells by first appearance in data order. Valid only when cells
/// are interchangeable (identity channel, symmetric constraint).
inline std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& cells, std::size_t k_cells) {
  std::vector<std::size_t> map(k_cells, k_cells);
  std::size_t next = 0;
  std::vector<std::size_t> out(cells.size());
  for (std::size_t m = 0; m < cells.size(); ++m) {
    if (map[cells[m]] == k_cells) map[cells[m]] = next++;
    out[m] = map[cells[m]];
  }
  return out;
}

}  // namespace detail

inline SolveReport solve_dp_identity(const ProblemSpec& spec) {
  spec.validate();
  if (spec.source_size() != 2)
    throw Error(ErrorCode::PreconditionViolated, "dynamic program needs a binary source");
  if (!spec.channel.is_identity())
    throw Error(ErrorCode::PreconditionViolated, "dynamic program needs the identity channel");
  if (!spec.constraint.is_symmetric())
    throw Error(ErrorCode::PreconditionViolated, "dynamic program needs the same constraint on every cell");

  const std::size_t m_data = spec.data_size(), k_cells = spec.num_cells;
  const std::size_t max_groups = std::min(k_cells, m_data);
  const std::vector<std::size_t> order = sorted_by_posterior(spec.joint);
  std::vector<double> pre0(m_data + 1, 0.0), pre1(m_data + 1, 0.0);
  for (std::size_t i = 0; i < m_data; ++i) {
    pre0[i + 1] = pre0[i] + spec.joint(0, order[i]);
    pre1[i + 1] = pre1[i] + spec.joint(1, order[i]);
  }
  // With a symmetric constraint every cell uses g_0, and empty cells cost g(0) = 0.
  auto interval_cost = [&](std::size_t lo, std::size_t hi) {
    const double v[2] = {std::max(pre0[hi] - pre0[lo], 0.0), std::max(pre1[hi] - pre1[lo], 0.0)};
    return spec.beta * cell_impurity(spec.impurity, v) +
           constraint_value(spec.constraint, 0, std::min(v[0] + v[1], 1.0));
  };

  const double inf = std::numeric_limits<double>::infinity();
  // cost[j][i]: best cost of the first i sorted points in exactly j intervals
  std::vector<std::vector<double>> cost(max_groups + 1, std::vector<double>(m_data + 1, inf));
  std::vector<std::vector<std::size_t>> split(max_groups + 1, std::vector<std::size_t>(m_data + 1, 0));
  cost[0][0] = 0.0;
  for (std::size_t j = 1; j <= max_groups; ++j) {
    for (std::size_t i = j; i <= m_data; ++i) {
      double best = inf;
      std::size_t arg = j - 1;
      for (std::size_t p = j - 1; p < i; ++p) {
        if (cost[j - 1][p] == inf) continue;
        const double c = cost[j - 1][p] + interval_cost(p, i);
        if (c < best - kTieBreakTolerance) {
          best = c;
          arg = p;
        }
      }
      cost[j][i] = best;
      split[j][i] = arg;
    }
  }
  std::size_t groups = 1;
  for (std::size_t j = 2; j <= max_groups; ++j)
    if (cost[j][m_data] < cost[groups][m_data] - kTieBreakTolerance) groups = j;

  std::vector<std::size_t> cells(m_data, 0);
  std::size_t hi = m_data;
  for (std::size_t j = groups; j >= 1; --j) {
    const std::size_t lo = split[j][hi];
    for (std::size_t p = lo; p < hi; ++p) cells[order[p]] = j - 1;
    hi = lo;
  }

  SolveReport report;
  report.solver_name = "dp";
  report.assignment = detail::canonical_labels(cells, k_cells);
  finalize_report(spec, report);
  report.objective_trace = {report.objective};
  return report;
}

enum class ViolationKind { distance, interleaved };

inline std::string_view to_string(ViolationKind k) { return k == ViolationKind::distance ? "distance" : "interleaved"; }

struct SeparationViolation {
  std::size_t point;  // zero-based data index
  ViolationKind kind;
  std::size_t assigned_cell;
  std::size_t other_cell;  // nearer cell, or the cell whose interval contains the point
};

struct SeparationCheck {
  bool separated = true;
  std::vector<SeparationViolation> violations;
};

inline SeparationCheck check_hyperplane_separation(const ProblemSpec& spec, const Quantizer& q,
                                                   double tol = kCertificateTolerance) {
  if (!q.is_hard()) throw Error(ErrorCode::PreconditionViolated, "separation check needs a hard quantizer");
  const EvaluatedState state = evaluate(spec, q);
  const auto& cells = q.cells();
  const std::size_t m_data = spec.data_size(), k_cells = spec.num_cells;
  SeparationCheck out;

  std::vector<double> row(k_cells);
  for (std::size_t m = 0; m < m_data; ++m) {
    for (std::size_t k = 0; k < k_cells; ++k) row[k] = scaled_distance(state, spec, m, k);
    const std::size_t best = argmin_cell(row);
    if (row[cells[m]] - row[best] > tol) out.violations.push_back({m, ViolationKind::distance, cells[m], best});
  }

  if (spec.source_size() == 2) {
    const Matrix& post = spec.joint.posteriors();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lo(k_cells, inf), hi(k_cells, -inf);
    for (std::size_t m = 0; m < m_data; ++m) {
      lo[cells[m]] = std::min(lo[cells[m]], post(0, m));
      hi[cells[m]] = std::max(hi[cells[m]], post(0, m));
    }
    for (std::size_t m = 0; m < m_data; ++m)
      for (std::size_t k = 0; k < k_cells; ++k) {
        if (k == cells[m] || lo[k] == inf) continue;
        if (post(0, m) > lo[k] + tol && post(0, m) < hi[k] - tol) {
          out.violations.push_back({m, ViolationKind::interleaved, cells[m], k});
          break;
        }
      }
  }
  out.separated = out.violations.empty();
  return out;
}

}  // namespace copart
