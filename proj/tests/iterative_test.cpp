#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <set>
#include <vector>

#include "copart/global.hpp"
#include "copart/iterative.hpp"
#include "test_support.hpp"

namespace copart {
namespace {

using testing::e1_spec;

// Exact dyadic joint whose cells {Y1,Y2} and {Y3,Y4} have identical statistics.
ProblemSpec twin_cells_spec() {
  return make_problem(validate_joint(Matrix{{0.1875, 0.0625, 0.0625, 0.1875}, {0.0625, 0.1875, 0.1875, 0.0625}}), 2);
}

TEST(ReassignSweep, FixedPointAtOptimum) {
  auto spec = e1_spec();
  for (SweepMode mode : {SweepMode::sequential, SweepMode::batch}) {
    auto r = reassign_sweep(spec, Quantizer::hard({0, 0, 1, 1}, 2), mode);
    EXPECT_EQ(r.changed, 0u);
    EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0, 1, 1}));
  }
}

TEST(ReassignSweep, TiesGoToLowestCellInBatchMode) {
  auto spec = twin_cells_spec();
  auto state = evaluate(spec, Quantizer::hard({0, 0, 1, 1}, 2));
  for (std::size_t m = 0; m < 4; ++m)
    EXPECT_EQ(scaled_distance(state, spec, m, 0), scaled_distance(state, spec, m, 1));
  auto r = reassign_sweep(spec, Quantizer::hard({0, 0, 1, 1}, 2), SweepMode::batch);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>(4, 0)));
  EXPECT_EQ(r.changed, 2u);
}

// In the E1 partition {Y1,Y3}/{Y2,Y4} both cells hold (0.25, 0.25), so every
// point is equidistant from both cells and the distance rule alone cannot
// move anything. Tie probing still finds a strictly better move.
TEST(ReassignSweep, E1InterleavedPartitionIsAllTies) {
  auto spec = e1_spec();
  const auto q = Quantizer::hard({0, 1, 0, 1}, 2);
  auto state = evaluate(spec, q);
  for (std::size_t m = 0; m < 4; ++m)
    EXPECT_NEAR(scaled_distance(state, spec, m, 0), scaled_distance(state, spec, m, 1), 1e-12);

  auto plain = reassign_sweep(spec, q, SweepMode::sequential, 1e-12, false);
  EXPECT_EQ(plain.changed, 0u);

  auto probed = reassign_sweep(spec, q, SweepMode::sequential, 1e-12, true);
  EXPECT_GT(probed.changed, 0u);
  EXPECT_LT(evaluate(spec, Quantizer::hard(probed.assignment, 2)).objective, state.objective - 1e-3);
}

TEST(SweepState, IncrementalMovesTrackReferenceEvaluation) {
  std::mt19937_64 rng(41);
  for (int inst = 0; inst < 100; ++inst) {
    auto spec = testing::random_instance(rng);
    auto cells = testing::random_hard(rng, spec.data_size(), spec.num_cells);
    SweepState ws(spec, cells);
    std::uniform_int_distribution<std::size_t> pm(0, spec.data_size() - 1), pk(0, spec.num_cells - 1);
    for (int step = 0; step < 30; ++step) {
      const std::size_t m = pm(rng), k = pk(rng);
      ws.move(m, k);
      cells[m] = k;
      const auto ref = evaluate(spec, Quantizer::hard(cells, spec.num_cells));
      ASSERT_NEAR(ws.objective(), ref.objective, 1e-12);
      std::vector<double> row(spec.num_cells);
      ws.scaled_distances(m, row);
      for (std::size_t c = 0; c < spec.num_cells; ++c)
        ASSERT_NEAR(row[c], scaled_distance(ref, spec, m, c), 1e-9 * std::max(1.0, std::abs(row[c])));
    }
    ws.refresh();
    const auto ref = evaluate(spec, Quantizer::hard(cells, spec.num_cells));
    EXPECT_EQ(ws.objective(), ref.objective);
  }
}

TEST(SolveIterative, E1FromOptimumIsAFixedPoint) {
  auto spec = e1_spec();
  SolverOptions o;
  o.initial_assignment = std::vector<std::size_t>{0, 0, 1, 1};
  auto r = solve_iterative(spec, o);
  EXPECT_EQ(r.iterations_used, (std::vector<std::size_t>{1}));
  EXPECT_TRUE(r.optimality_certificate);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.objective, 0.881291, 1e-6);
}

TEST(SolveIterative, E1FromInterleavedStartImproves) {
  auto spec = e1_spec();
  SolverOptions o;
  o.initial_assignment = std::vector<std::size_t>{0, 1, 0, 1};
  auto r = solve_iterative(spec, o);
  EXPECT_LT(r.objective, 1.0 - 1e-3);
  EXPECT_TRUE(r.optimality_certificate);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    EXPECT_LE(r.objective_trace[i] - r.objective_trace[i - 1], 1e-12);
}

TEST(SolveIterative, E1WithRestartsFindsGlobalOptimum) {
  auto r = solve_iterative(e1_spec());
  EXPECT_NEAR(r.objective, 0.881291, 1e-6);
  EXPECT_TRUE(testing::same_partition(r.assignment, {0, 0, 1, 1}));
}

TEST(SolveIterative, SingleCellNeedsNoSweeps) {
  auto spec = e1_spec({ConstraintKind::entropy, {}}, 1, {}, 2.0);
  auto r = solve_iterative(spec);
  EXPECT_EQ(r.iterations_used, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>(4, 0)));
  EXPECT_NEAR(r.objective, 2.0 * 1.0 + 0.0, 1e-15);
}

TEST(SolveIterative, OptionValidation) {
  SolverOptions o;
  o.restarts = 0;
  EXPECT_THROW(solve_iterative(e1_spec(), o), Error);
  o.restarts = 1;
  o.max_iterations = 0;
  EXPECT_THROW(solve_iterative(e1_spec(), o), Error);
}

TEST(SolveIterative, Deterministic) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20; ++i) {
    auto spec = testing::random_instance(rng);
    SolverOptions o;
    o.seed = 1234 + i;
    auto a = solve_iterative(spec, o), b = solve_iterative(spec, o);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    EXPECT_EQ(a.iterations_used, b.iterations_used);
  }
}

TEST(SolveIterative, SequentialIsMonotoneCertifiedAndNeverBeatsGlobal) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 150; ++i) {
    auto spec = testing::random_instance(rng);
    SolverOptions o;
    o.seed = static_cast<std::uint64_t>(i);
    o.restarts = 3;
    auto r = solve_iterative(spec, o);
    for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
      EXPECT_LE(r.objective_trace[t] - r.objective_trace[t - 1], 1e-12);
    if (r.converged) EXPECT_TRUE(r.optimality_certificate);
    EXPECT_GE(r.objective, solve_bruteforce(spec).objective - 1e-9);
    EXPECT_EQ(r.objective, spec.beta * r.F_value + r.G_value);
  }
}

TEST(SolveIterative, ZeroToleranceNeverRevisitsAPartition) {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 60; ++i) {
    auto spec = testing::random_instance(rng);
    SweepState ws(spec, testing::random_hard(rng, spec.data_size(), spec.num_cells));
    std::set<std::vector<std::size_t>> seen{ws.cells()};
    for (int sweep = 0; sweep < 50; ++sweep) {
      const auto r = ws.sweep(SweepMode::sequential, 0.0, true);
      ws.refresh();
      if (r.changed == 0) break;
      EXPECT_TRUE(seen.insert(ws.cells()).second);
    }
  }
}

TEST(SolveIterative, BatchModeKeepsBestSeen) {
  std::mt19937_64 rng(45);
  for (int i = 0; i < 60; ++i) {
    auto spec = testing::random_instance(rng);
    SolverOptions o;
    o.sweep_mode = SweepMode::batch;
    o.seed = static_cast<std::uint64_t>(i);
    auto r = solve_iterative(spec, o);
    EXPECT_LE(r.objective, *std::min_element(r.objective_trace.begin(), r.objective_trace.end()) + 1e-12);
    EXPECT_GE(r.objective, solve_bruteforce(spec).objective - 1e-9);
  }
}

TEST(SolveIterative, ReseedFillsEmptyCells) {
  // Four well separated posteriors and K = 4: a start with everything in one
  // cell and no constraint should end with all four cells populated.
  auto spec = make_problem(validate_joint(Matrix{{0.24, 0.16, 0.08, 0.02}, {0.01, 0.09, 0.17, 0.23}}), 4);
  SolverOptions o;
  o.initial_assignment = std::vector<std::size_t>{0, 0, 0, 0};
  o.reseed_empty = true;
  auto r = solve_iterative(spec, o);
  std::set<std::size_t> used(r.assignment.begin(), r.assignment.end());
  EXPECT_EQ(used.size(), 4u);
}

TEST(SolveIterative, SweepCostIsLinearInDataSize) {
  // Spot check only; the acceptance suite pins the 3x-7x window.
  std::mt19937_64 rng(46);
  auto make = [&](std::size_t m) {
    auto joint = validate_joint(testing::random_joint_raw(rng, 4, m));
    return make_problem(std::move(joint), 8, {}, {}, 1.0, testing::random_channel(rng, 8, 8));
  };
  auto spec = make(20000);
  auto cells = testing::random_hard(rng, 20000, 8);
  const auto t0 = std::chrono::steady_clock::now();
  reassign_sweep(spec, Quantizer::hard(cells, 8), SweepMode::sequential);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 1.0);
}

}  // namespace
}  // namespace copart
