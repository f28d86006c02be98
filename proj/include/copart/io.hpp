#pragma once

// Problem files, solve reports and the posterior CSV.
//
// Problem and report documents are JSON objects carrying `"format": 1`.
// A problem file looks like
//
//   {
//     "format": 1,
//     "joint_xy": [[0.20, 0.15, 0.05, 0.10], [0.05, 0.10, 0.20, 0.15]],
//     "channel": [[0.9, 0.1], [0.1, 0.9]],          (optional, identity)
//     "num_cells": 2,
//     "beta": 1.0,
//     "impurity": "entropy",                         (entropy | gini)
//     "constraint": {"name": "linear", "weights": [2, 3]},
//     "solver": "iterative",                         (iterative | bruteforce | thresholds | dp)
//     "options": {"seed": 0, "restarts": 10, "max_iterations": 500,
//                 "sweep_mode": "sequential", "reseed_empty": false}
//   }
//
// `constraint` may also be a bare name ("none", "entropy").

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "copart/error.hpp"
#include "copart/global.hpp"
#include "copart/iterative.hpp"
#include "copart/objective.hpp"
#include "copart/report.hpp"

namespace copart {

inline constexpr int kFormatVersion = 1;

/// A problem file that failed to parse or validate. `key()` names the
/// offending top-level key (empty for syntax errors).
class ProblemFileError : public std::runtime_error {
 public:
  ProblemFileError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class SolverKind { iterative, bruteforce, thresholds, dp };

inline std::string_view to_string(SolverKind s) {
  switch (s) {
    case SolverKind::iterative: return "iterative";
    case SolverKind::bruteforce: return "bruteforce";
    case SolverKind::thresholds: return "thresholds";
    case SolverKind::dp: return "dp";
  }
  return "iterative";
}

inline std::optional<SolverKind> parse_solver_kind(std::string_view name) {
  for (SolverKind s : {SolverKind::iterative, SolverKind::bruteforce, SolverKind::thresholds, SolverKind::dp})
    if (name == to_string(s)) return s;
  return std::nullopt;
}

/// The parsed, not yet validated, contents of a problem file.
struct ProblemFile {
  std::vector<std::vector<double>> joint_xy;
  std::optional<std::vector<std::vector<double>>> channel;
  std::size_t num_cells = 0;
  double beta = 1.0;
  ImpuritySpec impurity;
  ConstraintSpec constraint;
  SolverKind solver = SolverKind::iterative;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iterations = 500;
  SweepMode sweep_mode = SweepMode::sequential;
  bool reseed_empty = false;

  friend bool operator==(const ProblemFile&, const ProblemFile&) = default;

  SolverOptions solver_options() const {
    SolverOptions o;
    o.seed = seed;
    o.restarts = restarts;
    o.max_iterations = max_iterations;
    o.sweep_mode = sweep_mode;
    o.reseed_empty = reseed_empty;
    return o;
  }
};

namespace detail {

using json = nlohmann::ordered_json;

inline std::vector<std::vector<double>> read_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ProblemFileError(key, "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& r : v) {
    if (!r.is_array() || r.empty()) throw ProblemFileError(key, "expected each row to be a non-empty array");
    std::vector<double> row;
    for (const auto& x : r) {
      if (!x.is_number()) throw ProblemFileError(key, "expected numbers");
      row.push_back(x.get<double>());
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ProblemFileError(key, "rows differ in length");
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T read_unsigned(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && (!v.is_number_integer() || v.get<std::int64_t>() < 0))
    throw ProblemFileError(key, "expected a non-negative integer");
  return static_cast<T>(v.get<std::uint64_t>());
}

}  // namespace detail

inline ProblemFile parse_problem(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ProblemFileError("", "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ProblemFileError("", "top level must be an object");

  static const char* const known[] = {"format", "joint_xy", "channel", "num_cells", "beta",
                                      "impurity", "constraint", "solver", "options"};
  for (const auto& [key, _] : doc.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ProblemFileError(key, "unknown key");

  if (!doc.contains("format") || doc["format"] != kFormatVersion)
    throw ProblemFileError("format", "expected format 1");

  ProblemFile f;
  if (!doc.contains("joint_xy")) throw ProblemFileError("joint_xy", "missing");
  f.joint_xy = detail::read_matrix(doc["joint_xy"], "joint_xy");
  if (doc.contains("channel") && !doc["channel"].is_null()) f.channel = detail::read_matrix(doc["channel"], "channel");

  if (!doc.contains("num_cells")) throw ProblemFileError("num_cells", "missing");
  f.num_cells = detail::read_unsigned<std::size_t>(doc["num_cells"], "num_cells");

  if (doc.contains("beta")) {
    if (!doc["beta"].is_number()) throw ProblemFileError("beta", "expected a number");
    f.beta = doc["beta"].get<double>();
  }

  if (doc.contains("impurity")) {
    const auto& v = doc["impurity"];
    if (v == "entropy") f.impurity.kind = ImpurityKind::entropy;
    else if (v == "gini") f.impurity.kind = ImpurityKind::gini;
    else throw ProblemFileError("impurity", "expected \"entropy\" or \"gini\"");
  }

  if (doc.contains("constraint")) {
    const auto& v = doc["constraint"];
    json name = v.is_object() ? v.value("name", json()) : v;
    if (name == "none") f.constraint.kind = ConstraintKind::none;
    else if (name == "entropy") f.constraint.kind = ConstraintKind::entropy;
    else if (name == "linear") f.constraint.kind = ConstraintKind::linear;
    else throw ProblemFileError("constraint", "expected name none, entropy or linear");
    if (v.is_object() && v.contains("weights")) {
      if (!v["weights"].is_array()) throw ProblemFileError("constraint", "weights must be an array");
      for (const auto& w : v["weights"]) {
        if (!w.is_number()) throw ProblemFileError("constraint", "weights must be numbers");
        f.constraint.weights.push_back(w.get<double>());
      }
    }
    if (f.constraint.kind != ConstraintKind::linear && !f.constraint.weights.empty())
      throw ProblemFileError("constraint", "weights are only allowed for the linear constraint");
  }

  if (doc.contains("solver")) {
    const auto& v = doc["solver"];
    auto kind = v.is_string() ? parse_solver_kind(v.get<std::string>()) : std::nullopt;
    if (!kind) throw ProblemFileError("solver", "expected iterative, bruteforce, thresholds or dp");
    f.solver = *kind;
  }

  if (doc.contains("options")) {
    const auto& o = doc["options"];
    if (!o.is_object()) throw ProblemFileError("options", "expected an object");
    for (const auto& [key, v] : o.items()) {
      if (key == "seed") f.seed = detail::read_unsigned<std::uint64_t>(v, "options");
      else if (key == "restarts") f.restarts = detail::read_unsigned<std::size_t>(v, "options");
      else if (key == "max_iterations") f.max_iterations = detail::read_unsigned<std::size_t>(v, "options");
      else if (key == "sweep_mode") {
        if (v == "sequential") f.sweep_mode = SweepMode::sequential;
        else if (v == "batch") f.sweep_mode = SweepMode::batch;
        else throw ProblemFileError("options", "sweep_mode must be sequential or batch");
      } else if (key == "reseed_empty") {
        if (!v.is_boolean()) throw ProblemFileError("options", "reseed_empty must be a boolean");
        f.reseed_empty = v.get<bool>();
      } else {
        throw ProblemFileError("options", "unknown option " + key);
      }
    }
  }
  return f;
}

inline std::string serialize_problem(const ProblemFile& f) {
  using detail::json;
  json doc;
  doc["format"] = kFormatVersion;
  doc["joint_xy"] = f.joint_xy;
  if (f.channel) doc["channel"] = *f.channel;
  doc["num_cells"] = f.num_cells;
  doc["beta"] = f.beta;
  doc["impurity"] = to_string(f.impurity.kind);
  json c;
  c["name"] = to_string(f.constraint.kind);
  if (f.constraint.kind == ConstraintKind::linear) c["weights"] = f.constraint.weights;
  doc["constraint"] = c;
  doc["solver"] = to_string(f.solver);
  doc["options"] = {{"seed", f.seed},
                    {"restarts", f.restarts},
                    {"max_iterations", f.max_iterations},
                    {"sweep_mode", to_string(f.sweep_mode)},
                    {"reseed_empty", f.reseed_empty}};
  return doc.dump(2) + "\n";
}

/// Validates a problem file into a ProblemSpec, attributing failures to keys.
inline ProblemSpec build_spec(const ProblemFile& f) {
  auto attribute = [](const std::string& key, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw ProblemFileError(key, e.what());
    }
  };
  JointDistribution joint = attribute("joint_xy", [&] { return validate_joint(Matrix::from_rows(f.joint_xy)); });
  if (f.num_cells == 0) throw ProblemFileError("num_cells", "must be at least 1");
  ChannelMatrix channel = attribute("channel", [&] {
    if (!f.channel) return ChannelMatrix::identity(f.num_cells);
    ChannelMatrix a = ChannelMatrix::validate(Matrix::from_rows(*f.channel));
    if (a.inputs() != f.num_cells)
      throw Error(ErrorCode::DimensionMismatch, "channel has " + std::to_string(a.inputs()) +
                                                    " rows but num_cells is " + std::to_string(f.num_cells));
    return a;
  });
  if (!(f.beta > 0.0) || !std::isfinite(f.beta)) throw ProblemFileError("beta", "must be positive");
  if (f.constraint.kind == ConstraintKind::linear && f.constraint.weights.size() != f.num_cells)
    throw ProblemFileError("constraint", "linear constraint needs one weight per cell");
  if (f.restarts < 1) throw ProblemFileError("options", "restarts must be at least 1");
  if (f.max_iterations < 1) throw ProblemFileError("options", "max_iterations must be at least 1");
  return make_problem(std::move(joint), f.num_cells, f.impurity, f.constraint, f.beta, std::move(channel));
}

/// Runs the solver named by `kind`.
inline SolveReport run_solver(const ProblemSpec& spec, SolverKind kind, const SolverOptions& opts) {
  switch (kind) {
    case SolverKind::iterative: return solve_iterative(spec, opts);
    case SolverKind::bruteforce: return solve_bruteforce(spec);
    case SolverKind::thresholds: return solve_binary_thresholds(spec);
    case SolverKind::dp: return solve_dp_identity(spec);
  }
  return solve_iterative(spec, opts);
}

/// Report document. Assignments are one-based; numbers are written in the
/// shortest form that round-trips to the same double.
inline std::string serialize_report(const SolveReport& r) {
  using detail::json;
  json doc;
  doc["format"] = kFormatVersion;
  doc["solver"] = r.solver_name;
  doc["objective"] = r.objective;
  doc["F_value"] = r.F_value;
  doc["G_value"] = r.G_value;
  std::vector<std::size_t> one_based(r.assignment);
  for (auto& c : one_based) ++c;
  doc["assignment"] = one_based;
  doc["cell_mass"] = r.cell_mass;
  doc["output_joints"] = r.output_joints.to_rows();
  doc["optimality_certificate"] = r.optimality_certificate;
  doc["converged"] = r.converged;
  doc["iterations_used"] = r.iterations_used;
  doc["objective_trace"] = r.objective_trace;
  return doc.dump(2) + "\n";
}

namespace detail {

inline std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// One row per data symbol in original order:
/// index, p_Y, p_X1|Y .. p_XN|Y, assigned_cell (both indices one-based).
inline std::string posterior_csv(const JointDistribution& joint, const std::vector<std::size_t>& assignment) {
  std::ostringstream os;
  os << "index,p_Y";
  for (std::size_t n = 0; n < joint.source_size(); ++n) os << ",p_X" << n + 1 << "|Y";
  os << ",assigned_cell\n";
  for (std::size_t m = 0; m < joint.data_size(); ++m) {
    os << m + 1 << ',' << detail::format_number(joint.p_y()[m]);
    for (std::size_t n = 0; n < joint.source_size(); ++n) os << ',' << detail::format_number(joint.posteriors()(n, m));
    os << ',' << assignment.at(m) + 1 << '\n';
  }
  return os.str();
}

}  // namespace copart
