#pragma once

// Command line front end: `solve` and `compare`. Kept in a header so the
// exit-code contract can be tested in-process.
//
// Exit codes: 0 success, 2 input error, 3 solver precondition or size
// guard, 4 exact solvers disagree.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copart/io.hpp"

namespace copart::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitDisagreement = 4;

/// Exact solvers must agree to this absolute tolerance.
inline constexpr double kAgreementTolerance = 1e-9;

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError("", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct SolveArgs {
  std::string input;
  std::string solver;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> restarts;
  std::string posteriors_path;
  std::string output_path;
};

inline int run_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  ProblemFile file;
  ProblemSpec* spec_ptr = nullptr;
  std::optional<ProblemSpec> spec;
  try {
    file = parse_problem(read_file(args.input));
    if (!args.solver.empty()) {
      auto kind = parse_solver_kind(args.solver);
      if (!kind) throw ProblemFileError("solver", "unknown solver " + args.solver);
      file.solver = *kind;
    }
    if (args.seed) file.seed = *args.seed;
    if (args.restarts) file.restarts = *args.restarts;
    spec = build_spec(file);
    spec_ptr = &*spec;
  } catch (const ProblemFileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  SolveReport report;
  try {
    report = run_solver(*spec_ptr, file.solver, file.solver_options());
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_precondition() ? kExitPrecondition : kExitInput;
  }

  const std::string text = serialize_report(report);
  try {
    if (args.output_path.empty()) out << text;
    else write_file(args.output_path, text);
    if (!args.posteriors_path.empty())
      write_file(args.posteriors_path, posterior_csv(spec_ptr->joint, report.assignment));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

struct CompareRow {
  SolverKind solver;
  std::string status;  // "ok", "not applicable", "too large"
  double objective = 0.0;
  double runtime_ms = 0.0;
};

inline bool is_applicable(const ProblemSpec& spec, SolverKind s) {
  switch (s) {
    case SolverKind::iterative:
    case SolverKind::bruteforce: return true;
    case SolverKind::thresholds: return spec.source_size() == 2;
    case SolverKind::dp:
      return spec.source_size() == 2 && spec.channel.is_identity() && spec.constraint.is_symmetric();
  }
  return false;
}

inline int run_compare(const std::string& input, const std::vector<std::string>& solver_names, std::ostream& out,
                       std::ostream& err) {
  std::optional<ProblemSpec> spec;
  ProblemFile file;
  std::vector<SolverKind> solvers;
  try {
    file = parse_problem(read_file(input));
    spec = build_spec(file);
    if (solver_names.empty()) {
      solvers = {SolverKind::bruteforce, SolverKind::thresholds, SolverKind::dp, SolverKind::iterative};
    } else {
      for (const auto& name : solver_names) {
        auto kind = parse_solver_kind(name);
        if (!kind) throw ProblemFileError("solver", "unknown solver " + name);
        solvers.push_back(*kind);
      }
    }
  } catch (const ProblemFileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  std::vector<CompareRow> rows;
  int code = kExitOk;
  for (SolverKind s : solvers) {
    CompareRow row{s, "ok"};
    if (!is_applicable(*spec, s)) {
      row.status = "not applicable";
      rows.push_back(row);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      row.objective = run_solver(*spec, s, file.solver_options()).objective;
    } catch (const Error& e) {
      if (!e.is_precondition()) throw;
      err << "error: " << to_string(s) << ": " << e.what() << '\n';
      row.status = "too large";
      code = kExitPrecondition;
    }
    row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }

  std::optional<double> exact;
  for (const auto& r : rows)
    if (r.status == "ok" && r.solver != SolverKind::iterative) exact = exact ? std::min(*exact, r.objective) : r.objective;
  if (exact) {
    for (auto& r : rows) {
      if (r.status != "ok") continue;
      const bool is_exact = r.solver != SolverKind::iterative;
      const bool bad = is_exact ? std::abs(r.objective - *exact) > kAgreementTolerance
                                : r.objective < *exact - kAgreementTolerance;
      if (bad) {
        r.status = "DISAGREES";
        if (code == kExitOk) code = kExitDisagreement;
      }
    }
  }

  out << std::left << std::setw(12) << "solver" << std::setw(22) << "objective" << std::setw(14) << "runtime_ms"
      << "status\n";
  for (const auto& r : rows) {
    std::ostringstream obj, ms;
    obj.imbue(std::locale::classic());
    ms.imbue(std::locale::classic());
    if (r.status == "ok" || r.status == "DISAGREES") obj << std::setprecision(15) << r.objective;
    else obj << "-";
    ms << std::fixed << std::setprecision(3) << r.runtime_ms;
    out << std::left << std::setw(12) << to_string(r.solver) << std::setw(22) << obj.str() << std::setw(14)
        << ms.str() << r.status << '\n';
  }
  if (code == kExitDisagreement) err << "error: exact solvers disagree beyond " << kAgreementTolerance << '\n';
  return code;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design channel-optimized partitions of a discrete data alphabet"};
  app.require_subcommand(1);

  detail::SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem file and print a report");
  solve_cmd->add_option("file", solve.input, "Problem file")->required();
  solve_cmd->add_option("--solver", solve.solver, "iterative | bruteforce | thresholds | dp");
  solve_cmd->add_option("--seed", solve.seed, "Random seed for the iterative solver");
  solve_cmd->add_option("--restarts", solve.restarts, "Restarts for the iterative solver");
  solve_cmd->add_option("--emit-posteriors", solve.posteriors_path, "Write p(X|Y) and assignments as CSV");
  solve_cmd->add_option("--output", solve.output_path, "Write the report here instead of stdout");

  std::string compare_input;
  std::vector<std::string> compare_solvers;
  auto* compare_cmd = app.add_subcommand("compare", "Run every applicable solver and cross-check them");
  compare_cmd->add_option("file", compare_input, "Problem file")->required();
  compare_cmd->add_option("--solvers", compare_solvers, "Subset of solvers to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitInput;
  }

  if (*solve_cmd) return detail::run_solve(solve, out, err);
  return detail::run_compare(compare_input, compare_solvers, out, err);
}

}  // namespace copart::cli
