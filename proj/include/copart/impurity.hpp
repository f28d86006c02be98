#pragma once

// Concave cell impurities f and per-cell constraint functions g_k.
//
// Impurities act on an unnormalized joint vector v = p(X, T_h):
//   F(v) = w f(v / w),  w = sum_n v_n
// so F is positively homogeneous of degree one. Everything is in bits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copart/error.hpp"

namespace copart {

/// Gradients and constraint derivatives clamp probabilities at this floor.
inline constexpr double kGradientFloor = 1e-12;

enum class ImpurityKind { entropy, gini };

struct ImpuritySpec {
  ImpurityKind kind = ImpurityKind::entropy;
  friend bool operator==(const ImpuritySpec&, const ImpuritySpec&) = default;
};

enum class ConstraintKind { none, entropy, linear };

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::none;
  std::vector<double> weights;  // linear only, one per cell

  /// Same g_k for every cell.
  bool is_symmetric() const {
    if (kind != ConstraintKind::linear) return true;
    return std::adjacent_find(weights.begin(), weights.end(), std::not_equal_to<>()) == weights.end();
  }

  friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

inline std::string_view to_string(ImpurityKind k) { return k == ImpurityKind::entropy ? "entropy" : "gini"; }

inline std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::none: return "none";
    case ConstraintKind::entropy: return "entropy";
    case ConstraintKind::linear: return "linear";
  }
  return "none";
}

inline double cell_impurity(const ImpuritySpec& f, std::span<const double> v) {
  double w = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw Error(ErrorCode::NegativeEntry, "cell joint has a negative entry");
    w += x;
  }
  if (w <= 0.0) return 0.0;
  double value = 0.0;
  switch (f.kind) {
    case ImpurityKind::entropy:
      // sum_n v_n log2(w / v_n), with 0 log 0 = 0
      for (double x : v)
        if (x > 0.0) value += x * std::log2(w / x);
      break;
    case ImpurityKind::gini: {
      // w (1 - sum_n (v_n / w)^2)
      double sq = 0.0;
      for (double x : v) sq += x * x;
      value = w - sq / w;
      break;
    }
  }
  return std::max(value, 0.0);
}

/// dF/dv_n. Requires every entry strictly positive.
inline void cell_gradient(const ImpuritySpec& f, std::span<const double> v, std::span<double> out) {
  if (out.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "gradient output size");
  double w = 0.0, sq = 0.0;
  for (double x : v) {
    if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveEntry, "gradient needs strictly positive entries");
    w += x;
    sq += x * x;
  }
  switch (f.kind) {
    case ImpurityKind::entropy:
      for (std::size_t n = 0; n < v.size(); ++n) out[n] = std::log2(w / v[n]);
      break;
    case ImpurityKind::gini: {
      const double tail = sq / (w * w);
      for (std::size_t n = 0; n < v.size(); ++n) out[n] = 1.0 - 2.0 * v[n] / w + tail;
      break;
    }
  }
}

inline std::vector<double> cell_gradient(const ImpuritySpec& f, std::span<const double> v) {
  std::vector<double> out(v.size());
  cell_gradient(f, v, out);
  return out;
}

/// Gradient with every entry floored at kGradientFloor first. This is what
/// the solvers use: the entropy gradient is unbounded at the boundary.
inline void clamped_cell_gradient(const ImpuritySpec& f, std::span<const double> v, std::span<double> out,
                                  std::span<double> scratch) {
  for (std::size_t n = 0; n < v.size(); ++n) scratch[n] = std::max(v[n], kGradientFloor);
  cell_gradient(f, scratch, out);
}

namespace detail {

inline void check_constraint_cell(const ConstraintSpec& g, std::size_t k) {
  if (g.kind == ConstraintKind::linear && k >= g.weights.size())
    throw Error(ErrorCode::IndexOutOfRange, "no linear weight for cell " + std::to_string(k + 1));
}

}  // namespace detail

inline double constraint_value(const ConstraintSpec& g, std::size_t k, double p) {
  // Cell masses are sums of floating point terms; allow rounding slack.
  if (!(p >= -kGradientFloor && p <= 1.0 + 1e-9))
    throw Error(ErrorCode::OutOfRange, "cell mass " + std::to_string(p) + " outside [0,1]");
  p = std::clamp(p, 0.0, 1.0);
  detail::check_constraint_cell(g, k);
  switch (g.kind) {
    case ConstraintKind::none: return 0.0;
    case ConstraintKind::entropy: return p > 0.0 ? -p * std::log2(p) : 0.0;
    case ConstraintKind::linear: return g.weights[k] * p;
  }
  return 0.0;
}

inline double constraint_derivative(const ConstraintSpec& g, std::size_t k, double p) {
  detail::check_constraint_cell(g, k);
  switch (g.kind) {
    case ConstraintKind::none: return 0.0;
    case ConstraintKind::entropy: {
      p = std::clamp(p, kGradientFloor, 1.0);
      return -(std::log2(p) + std::numbers::log2e);
    }
    case ConstraintKind::linear: return g.weights[k];
  }
  return 0.0;
}

}  // namespace copart
