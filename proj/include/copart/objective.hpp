#pragma once

// Joint objective beta F(X;T) + G(p_Z) and the per-point assignment distance.
//
// With c_h = grad F at p(X, T_h) and d_k = g_k'(p(Z_k)):
//   D(Y_m, Z_k)  = beta sum_h A_kh sum_n c_h^n p(X_n, Y_m) + d_k p(Y_m)
//   D'(Y_m, Z_k) = beta sum_h A_kh sum_n c_h^n p(X_n | Y_m) + d_k
// D = p(Y_m) D', so both rank the cells identically. Moving a point from
// cell q to cell s changes the objective at rate D(Y_m,Z_s) - D(Y_m,Z_q).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copart/error.hpp"
#include "copart/impurity.hpp"
#include "copart/matrix.hpp"
#include "copart/prob.hpp"

namespace copart {

struct ProblemSpec {
  JointDistribution joint;
  ChannelMatrix channel;
  std::size_t num_cells;
  ImpuritySpec impurity;
  ConstraintSpec constraint;
  double beta;

  std::size_t source_size() const { return joint.source_size(); }
  std::size_t data_size() const { return joint.data_size(); }
  std::size_t output_size() const { return channel.outputs(); }

  void validate() const {
    if (num_cells == 0) throw Error(ErrorCode::InvalidSpec, "num_cells must be at least 1");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidSpec, "beta must be positive");
    if (channel.inputs() != num_cells)
      throw Error(ErrorCode::InvalidSpec, "channel has " + std::to_string(channel.inputs()) + " rows but num_cells is " +
                                              std::to_string(num_cells));
    if (constraint.kind == ConstraintKind::linear && constraint.weights.size() != num_cells)
      throw Error(ErrorCode::InvalidSpec, "linear constraint needs one weight per cell");
  }
};

/// Builds and validates a spec. The channel defaults to the K x K identity.
inline ProblemSpec make_problem(JointDistribution joint, std::size_t num_cells, ImpuritySpec impurity = {},
                                ConstraintSpec constraint = {}, double beta = 1.0,
                                std::optional<ChannelMatrix> channel = std::nullopt) {
  if (num_cells == 0) throw Error(ErrorCode::InvalidSpec, "num_cells must be at least 1");
  ProblemSpec spec{std::move(joint), channel ? std::move(*channel) : ChannelMatrix::identity(num_cells),
                   num_cells, impurity, std::move(constraint), beta};
  spec.validate();
  return spec;
}

struct EvaluatedState {
  ClusterJoints cluster_joints;
  OutputJoints output_joints;
  Matrix output_gradients;              // N x H, c_h^n (floored at kGradientFloor)
  std::vector<double> constraint_derivatives;  // d_k
  Matrix cell_weights;                  // K x N, beta sum_h A_kh c_h^n
  double F_value = 0.0;
  double G_value = 0.0;
  double objective = 0.0;
};

namespace detail {

/// c_h^n for every output; columns of `outputs` are the joints p(X, T_h).
inline Matrix output_gradients(const ImpuritySpec& f, const Matrix& outputs) {
  const std::size_t n_src = outputs.rows(), h_out = outputs.cols();
  Matrix grad(n_src, h_out);
  std::vector<double> v(n_src), g(n_src), scratch(n_src);
  for (std::size_t h = 0; h < h_out; ++h) {
    for (std::size_t n = 0; n < n_src; ++n) v[n] = outputs(n, h);
    clamped_cell_gradient(f, v, g, scratch);
    for (std::size_t n = 0; n < n_src; ++n) grad(n, h) = g[n];
  }
  return grad;
}

inline Matrix cell_weights(const ChannelMatrix& channel, const Matrix& grad, double beta) {
  const std::size_t n_src = grad.rows(), h_out = grad.cols(), k_cells = channel.inputs();
  Matrix w(k_cells, n_src);
  for (std::size_t k = 0; k < k_cells; ++k)
    for (std::size_t n = 0; n < n_src; ++n) {
      double s = 0.0;
      for (std::size_t h = 0; h < h_out; ++h) s += channel(k, h) * grad(n, h);
      w(k, n) = beta * s;
    }
  return w;
}

inline double total_impurity(const ImpuritySpec& f, const Matrix& outputs) {
  const Matrix t = outputs.transposed();
  double total = 0.0;
  for (std::size_t h = 0; h < t.rows(); ++h) total += cell_impurity(f, t.row(h));
  return total;
}

inline double total_constraint(const ConstraintSpec& g, const std::vector<double>& mass) {
  double total = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) total += constraint_value(g, k, mass[k]);
  return total;
}

inline void check_dimensions(const ProblemSpec& spec, const Quantizer& q) {
  if (q.num_cells() != spec.num_cells || q.data_size() != spec.data_size())
    throw Error(ErrorCode::DimensionMismatch, "quantizer is " + std::to_string(q.data_size()) + " x " +
                                                  std::to_string(q.num_cells()) + ", problem is " +
                                                  std::to_string(spec.data_size()) + " x " +
                                                  std::to_string(spec.num_cells));
}

}  // namespace detail

/// Full evaluation from scratch. Soft quantizers are accepted.
inline EvaluatedState evaluate(const ProblemSpec& spec, const Quantizer& q) {
  detail::check_dimensions(spec, q);
  EvaluatedState s;
  s.cluster_joints = push_to_clusters(spec.joint, q);
  s.output_joints = push_through_channel(s.cluster_joints, spec.channel);
  s.output_gradients = detail::output_gradients(spec.impurity, s.output_joints.entries);
  s.constraint_derivatives.resize(spec.num_cells);
  for (std::size_t k = 0; k < spec.num_cells; ++k)
    s.constraint_derivatives[k] = constraint_derivative(spec.constraint, k, s.cluster_joints.cluster_mass[k]);
  s.cell_weights = detail::cell_weights(spec.channel, s.output_gradients, spec.beta);
  s.F_value = detail::total_impurity(spec.impurity, s.output_joints.entries);
  s.G_value = detail::total_constraint(spec.constraint, s.cluster_joints.cluster_mass);
  s.objective = spec.beta * s.F_value + s.G_value;
  return s;
}

/// Objective only; skips gradients. Used by the enumeration solvers.
inline double objective_value(const ProblemSpec& spec, const Quantizer& q) {
  detail::check_dimensions(spec, q);
  const ClusterJoints c = push_to_clusters(spec.joint, q);
  const OutputJoints o = push_through_channel(c, spec.channel);
  return spec.beta * detail::total_impurity(spec.impurity, o.entries) +
         detail::total_constraint(spec.constraint, c.cluster_mass);
}

namespace detail {

inline void check_point_cell(const ProblemSpec& spec, std::size_t m, std::size_t k) {
  if (m >= spec.data_size()) throw Error(ErrorCode::IndexOutOfRange, "data index " + std::to_string(m));
  if (k >= spec.num_cells) throw Error(ErrorCode::IndexOutOfRange, "cell index " + std::to_string(k));
}

}  // namespace detail

/// D'(Y_m, Z_k): the distance with the posterior in place of the joint.
inline double scaled_distance(const EvaluatedState& state, const ProblemSpec& spec, std::size_t m, std::size_t k) {
  detail::check_point_cell(spec, m, k);
  const Matrix& post = spec.joint.posteriors();
  double s = 0.0;
  for (std::size_t n = 0; n < spec.source_size(); ++n) s += state.cell_weights(k, n) * post(n, m);
  return s + state.constraint_derivatives[k];
}

/// D(Y_m, Z_k) = p(Y_m) D'(Y_m, Z_k).
inline double distance(const EvaluatedState& state, const ProblemSpec& spec, std::size_t m, std::size_t k) {
  return spec.joint.p_y()[m] * scaled_distance(state, spec, m, k);
}

/// M x K table of D'.
inline Matrix scaled_distance_table(const EvaluatedState& state, const ProblemSpec& spec) {
  Matrix d(spec.data_size(), spec.num_cells);
  for (std::size_t m = 0; m < spec.data_size(); ++m)
    for (std::size_t k = 0; k < spec.num_cells; ++k) d(m, k) = scaled_distance(state, spec, m, k);
  return d;
}

/// Lowest-index argmin of a row.
inline std::size_t argmin_cell(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] < row[best]) best = k;
  return best;
}

/// Objective after moving fraction t of Y_m's mass from cell q to cell s.
/// Includes the constraint terms of untouched cells, which are constant in t.
inline double path_objective(const ProblemSpec& spec, const Quantizer& q, std::size_t m, std::size_t from,
                             std::size_t to, double t) {
  detail::check_dimensions(spec, q);
  detail::check_point_cell(spec, m, from);
  detail::check_point_cell(spec, m, to);
  if (!q.is_hard() || q.cell_of(m) != from || from == to)
    throw Error(ErrorCode::InvalidMove, "data point " + std::to_string(m + 1) + " is not in the source cell");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::OutOfRange, "path parameter outside [0,1]");
  Matrix soft = q.to_soft();
  soft(m, from) = 1.0 - t;
  soft(m, to) = t;
  return evaluate(spec, Quantizer::soft(std::move(soft))).objective;
}

}  // namespace copart
