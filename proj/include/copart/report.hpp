#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "copart/matrix.hpp"
#include "copart/objective.hpp"
#include "copart/prob.hpp"

namespace copart {

/// Tolerance used when certifying that each point sits in a nearest cell.
inline constexpr double kCertificateTolerance = 1e-9;

struct SolveReport {
  std::string solver_name;
  std::vector<std::size_t> assignment;  // zero-based cell per data point
  double objective = 0.0;
  double F_value = 0.0;
  double G_value = 0.0;
  std::vector<double> cell_mass;
  Matrix output_joints;  // N x H
  std::vector<std::size_t> iterations_used;  // one per restart
  std::vector<double> objective_trace;       // winning restart: initial value, then one per sweep
  std::vector<double> restart_objectives;
  bool converged = true;
  bool optimality_certificate = false;

  Quantizer quantizer(std::size_t num_cells) const { return Quantizer::hard(assignment, num_cells); }
};

/// True iff every point's own cell attains min_k D'(Y_m, Z_k) within `tol`.
inline bool satisfies_min_distance(const ProblemSpec& spec, const EvaluatedState& state,
                                   const std::vector<std::size_t>& cells, double tol = kCertificateTolerance) {
  std::vector<double> row(spec.num_cells);
  for (std::size_t m = 0; m < spec.data_size(); ++m) {
    for (std::size_t k = 0; k < spec.num_cells; ++k) row[k] = scaled_distance(state, spec, m, k);
    if (row[cells[m]] - row[argmin_cell(row)] > tol) return false;
  }
  return true;
}

/// Fills the value fields of a report from a from-scratch evaluation of its
/// assignment, so every solver reports numbers computed the same way.
inline void finalize_report(const ProblemSpec& spec, SolveReport& report) {
  const EvaluatedState state = evaluate(spec, report.quantizer(spec.num_cells));
  report.objective = state.objective;
  report.F_value = state.F_value;
  report.G_value = state.G_value;
  report.cell_mass = state.cluster_joints.cluster_mass;
  report.output_joints = state.output_joints.entries;
  report.optimality_certificate = satisfies_min_distance(spec, state, report.assignment);
}

}  // namespace copart
