#pragma once

// Probability containers and the linear forward model
//
//   p(X_n, Z_k) = sum_m p(X_n, Y_m) p(Z_k | Y_m)
//   p(X_n, T_h) = sum_k p(X_n, Z_k) A_kh
//
// All containers are immutable once validated.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "copart/error.hpp"
#include "copart/matrix.hpp"

namespace copart {

/// Tolerance on probability invariants of derived quantities.
inline constexpr double kProbTolerance = 1e-9;
/// Input totals within this distance of one are renormalized, not rejected.
inline constexpr double kInputTolerance = 1e-6;

namespace detail {

inline void require_nonnegative(const Matrix& m, const char* what) {
  for (double x : m.data()) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::NegativeEntry, std::string(what) + " has a negative or non-finite entry");
  }
}

}  // namespace detail

/// The N x M joint pmf p(X, Y). Rows index the source symbol, columns the
/// data symbol. Marginals and posteriors are computed once at validation.
class JointDistribution {
 public:
  static JointDistribution validate(Matrix raw) {
    if (raw.rows() < 2 || raw.cols() < 1)
      throw Error(ErrorCode::InvalidDimensions, "joint distribution needs N >= 2 and M >= 1");
    detail::require_nonnegative(raw, "joint distribution");
    const double total = raw.sum();
    if (std::abs(total - 1.0) > kInputTolerance)
      throw Error(ErrorCode::SumNotOne, "joint distribution sums to " + std::to_string(total));
    for (double& x : raw.data()) x /= total;

    JointDistribution j;
    j.entries_ = std::move(raw);
    const std::size_t n = j.entries_.rows(), m = j.entries_.cols();
    j.p_x_.resize(n);
    j.p_y_.resize(m);
    for (std::size_t i = 0; i < n; ++i) j.p_x_[i] = j.entries_.row_sum(i);
    for (std::size_t c = 0; c < m; ++c) {
      j.p_y_[c] = j.entries_.col_sum(c);
      if (!(j.p_y_[c] > 0.0))
        throw Error(ErrorCode::ZeroColumn, "data symbol " + std::to_string(c + 1) + " has zero probability");
    }
    j.posteriors_ = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < m; ++c) j.posteriors_(i, c) = j.entries_(i, c) / j.p_y_[c];
    return j;
  }

  std::size_t source_size() const noexcept { return entries_.rows(); }
  std::size_t data_size() const noexcept { return entries_.cols(); }

  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t n, std::size_t m) const { return entries_(n, m); }
  const std::vector<double>& p_x() const noexcept { return p_x_; }
  const std::vector<double>& p_y() const noexcept { return p_y_; }
  /// Column m is p(X | Y_m).
  const Matrix& posteriors() const noexcept { return posteriors_; }

 private:
  JointDistribution() = default;

  Matrix entries_;
  std::vector<double> p_x_;
  std::vector<double> p_y_;
  Matrix posteriors_;
};

inline JointDistribution validate_joint(Matrix raw) { return JointDistribution::validate(std::move(raw)); }

/// Posterior columns p(X | Y_m), N x M.
inline Matrix posteriors(const JointDistribution& joint) { return joint.posteriors(); }

/// Row-stochastic K x H relay channel, A_kh = p(T_h | Z_k).
class ChannelMatrix {
 public:
  static ChannelMatrix validate(Matrix raw) {
    if (raw.rows() < 1 || raw.cols() < 1)
      throw Error(ErrorCode::InvalidDimensions, "channel needs K >= 1 and H >= 1");
    detail::require_nonnegative(raw, "channel");
    for (std::size_t k = 0; k < raw.rows(); ++k) {
      const double s = raw.row_sum(k);
      if (std::abs(s - 1.0) > kInputTolerance)
        throw Error(ErrorCode::SumNotOne, "channel row " + std::to_string(k + 1) + " sums to " + std::to_string(s));
      for (double& x : raw.row(k)) x /= s;
    }
    ChannelMatrix a;
    a.entries_ = std::move(raw);
    return a;
  }

  static ChannelMatrix identity(std::size_t k) { return validate(Matrix::identity(k)); }

  std::size_t inputs() const noexcept { return entries_.rows(); }
  std::size_t outputs() const noexcept { return entries_.cols(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t k, std::size_t h) const { return entries_(k, h); }

  bool is_identity() const {
    if (inputs() != outputs()) return false;
    for (std::size_t k = 0; k < inputs(); ++k)
      for (std::size_t h = 0; h < outputs(); ++h)
        if (entries_(k, h) != (k == h ? 1.0 : 0.0)) return false;
    return true;
  }

 private:
  ChannelMatrix() = default;
  Matrix entries_;
};

enum class QuantizerKind { hard, soft };

/// Assignment of data symbols to cells. Cell indices are zero-based.
class Quantizer {
 public:
  static Quantizer hard(std::vector<std::size_t> cells, std::size_t num_cells) {
    if (num_cells == 0) throw Error(ErrorCode::InvalidDimensions, "quantizer needs at least one cell");
    for (std::size_t c : cells)
      if (c >= num_cells) throw Error(ErrorCode::IndexOutOfRange, "cell index " + std::to_string(c) + " >= K");
    Quantizer q;
    q.kind_ = QuantizerKind::hard;
    q.num_cells_ = num_cells;
    q.cells_ = std::move(cells);
    return q;
  }

  /// M x K row-stochastic matrix of p(Z_k | Y_m).
  static Quantizer soft(Matrix assignment) {
    if (assignment.cols() == 0) throw Error(ErrorCode::InvalidDimensions, "quantizer needs at least one cell");
    for (std::size_t m = 0; m < assignment.rows(); ++m) {
      for (double x : assignment.row(m))
        if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::OutOfRange, "soft assignment entry outside [0,1]");
      if (std::abs(assignment.row_sum(m) - 1.0) > kProbTolerance)
        throw Error(ErrorCode::SumNotOne, "soft assignment row " + std::to_string(m + 1) + " does not sum to 1");
    }
    Quantizer q;
    q.kind_ = QuantizerKind::soft;
    q.num_cells_ = assignment.cols();
    q.soft_ = std::move(assignment);
    return q;
  }

  QuantizerKind kind() const noexcept { return kind_; }
  bool is_hard() const noexcept { return kind_ == QuantizerKind::hard; }
  std::size_t num_cells() const noexcept { return num_cells_; }
  std::size_t data_size() const noexcept { return is_hard() ? cells_.size() : soft_.rows(); }

  /// Hard quantizers only.
  const std::vector<std::size_t>& cells() const {
    if (!is_hard()) throw Error(ErrorCode::PreconditionViolated, "soft quantizer has no hard cell map");
    return cells_;
  }
  std::size_t cell_of(std::size_t m) const { return cells().at(m); }

  double probability(std::size_t m, std::size_t k) const {
    if (is_hard()) return cells_[m] == k ? 1.0 : 0.0;
    return soft_(m, k);
  }

  Matrix to_soft() const {
    if (!is_hard()) return soft_;
    Matrix s(cells_.size(), num_cells_);
    for (std::size_t m = 0; m < cells_.size(); ++m) s(m, cells_[m]) = 1.0;
    return s;
  }

 private:
  Quantizer() = default;

  QuantizerKind kind_ = QuantizerKind::hard;
  std::size_t num_cells_ = 0;
  std::vector<std::size_t> cells_;
  Matrix soft_;
};

/// p(X, Z): N x K, plus the cell masses p(Z_k). Empty cells are zero columns.
struct ClusterJoints {
  Matrix entries;
  std::vector<double> cluster_mass;
};

/// p(X, T): N x H, plus the output masses p(T_h).
struct OutputJoints {
  Matrix entries;
  std::vector<double> output_mass;
};

inline ClusterJoints push_to_clusters(const JointDistribution& joint, const Quantizer& q) {
  const std::size_t n_src = joint.source_size(), m_data = joint.data_size(), k_cells = q.num_cells();
  if (q.data_size() != m_data)
    throw Error(ErrorCode::DimensionMismatch, "quantizer has " + std::to_string(q.data_size()) +
                                                  " rows, joint has " + std::to_string(m_data) + " columns");
  ClusterJoints out{Matrix(n_src, k_cells), std::vector<double>(k_cells, 0.0)};
  if (q.is_hard()) {
    const auto& cells = q.cells();
    for (std::size_t m = 0; m < m_data; ++m)
      for (std::size_t n = 0; n < n_src; ++n) out.entries(n, cells[m]) += joint(n, m);
  } else {
    for (std::size_t m = 0; m < m_data; ++m)
      for (std::size_t k = 0; k < k_cells; ++k) {
        const double w = q.probability(m, k);
        if (w == 0.0) continue;
        for (std::size_t n = 0; n < n_src; ++n) out.entries(n, k) += joint(n, m) * w;
      }
  }
  for (std::size_t k = 0; k < k_cells; ++k) out.cluster_mass[k] = out.entries.col_sum(k);
  return out;
}

inline OutputJoints push_through_channel(const ClusterJoints& clusters, const ChannelMatrix& channel) {
  const std::size_t n_src = clusters.entries.rows(), k_cells = clusters.entries.cols(), h_out = channel.outputs();
  if (channel.inputs() != k_cells)
    throw Error(ErrorCode::DimensionMismatch, "channel has " + std::to_string(channel.inputs()) +
                                                  " inputs, quantizer has " + std::to_string(k_cells) + " cells");
  OutputJoints out{Matrix(n_src, h_out), std::vector<double>(h_out, 0.0)};
  for (std::size_t n = 0; n < n_src; ++n)
    for (std::size_t k = 0; k < k_cells; ++k) {
      const double v = clusters.entries(n, k);
      if (v == 0.0) continue;
      for (std::size_t h = 0; h < h_out; ++h) out.entries(n, h) += v * channel(k, h);
    }
  for (std::size_t h = 0; h < h_out; ++h) out.output_mass[h] = out.entries.col_sum(h);
  return out;
}

}  // namespace copart
