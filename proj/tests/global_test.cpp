#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "copart/global.hpp"
#include "copart/iterative.hpp"
#include "test_support.hpp"

namespace copart {
namespace {

using testing::e1_spec;
using testing::same_partition;

TEST(SortedByPosterior, AscendingWithIndexTieBreak) {
  EXPECT_EQ(sorted_by_posterior(testing::e1_joint()), (std::vector<std::size_t>{2, 3, 1, 0}));
  auto j = validate_joint(Matrix{{0.1, 0.2, 0.1}, {0.1, 0.2, 0.3}});
  EXPECT_EQ(sorted_by_posterior(j), (std::vector<std::size_t>{2, 0, 1}));
}

TEST(BruteForce, E1) {
  auto r = solve_bruteforce(e1_spec());
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_NEAR(r.objective, 0.881291, 1e-6);
  EXPECT_TRUE(r.optimality_certificate);
}

TEST(BruteForce, SinglePointAndSingleCell) {
  auto one = make_problem(validate_joint(Matrix{{0.3}, {0.7}}), 2, {}, {ConstraintKind::entropy, {}}, 2.0);
  auto r = solve_bruteforce(one);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(r.objective, 2.0 * testing::h2(0.3), 1e-15);

  auto r1 = solve_bruteforce(e1_spec({}, 1));
  EXPECT_EQ(r1.assignment, (std::vector<std::size_t>(4, 0)));
  EXPECT_NEAR(r1.objective, 1.0, 1e-15);
}

TEST(BruteForce, GuardsAgainstLargeInstances) {
  std::mt19937_64 rng(51);
  auto spec = make_problem(validate_joint(testing::random_joint_raw(rng, 2, 30)), 2);
  try {
    solve_bruteforce(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InstanceTooLarge);
  }
  auto k1 = make_problem(validate_joint(testing::random_joint_raw(rng, 2, 30)), 1);
  EXPECT_NO_THROW(solve_bruteforce(k1));
}

TEST(Thresholds, E1MatchesBruteForce) {
  auto r = solve_binary_thresholds(e1_spec());
  EXPECT_NEAR(r.objective, 0.881291, 1e-6);
  EXPECT_TRUE(same_partition(r.assignment, {0, 0, 1, 1}));
}

TEST(Thresholds, NoisyChannelMatchesBruteForce) {
  auto spec = make_problem(testing::e1_joint(), 2, {}, {}, 1.0,
                           ChannelMatrix::validate(Matrix{{0.9, 0.1}, {0.1, 0.9}}));
  auto t = solve_binary_thresholds(spec);
  auto b = solve_bruteforce(spec);
  EXPECT_NEAR(t.objective, b.objective, 1e-12);
  // The channel is symmetric, so swapping the two labels costs nothing.
  EXPECT_TRUE(same_partition(t.assignment, b.assignment));
}

TEST(Thresholds, IdenticalPosteriorsCollapse) {
  auto spec = make_problem(validate_joint(Matrix{{0.1, 0.2, 0.1}, {0.15, 0.3, 0.15}}), 2);
  auto r = solve_binary_thresholds(spec);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>(3, 0)));
  EXPECT_NEAR(r.objective, solve_bruteforce(make_problem(spec.joint, 1)).objective, 1e-12);
}

TEST(Thresholds, RejectsNonBinarySources) {
  std::mt19937_64 rng(52);
  auto spec = make_problem(validate_joint(testing::random_joint_raw(rng, 3, 4)), 2);
  try {
    solve_binary_thresholds(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotBinary);
  }
}

TEST(DynamicProgram, E1Cases) {
  EXPECT_NEAR(solve_dp_identity(e1_spec()).objective, 0.881291, 1e-6);
  EXPECT_TRUE(same_partition(solve_dp_identity(e1_spec()).assignment, {0, 0, 1, 1}));
  EXPECT_EQ(solve_dp_identity(e1_spec()).assignment, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_NEAR(solve_dp_identity(e1_spec({}, 4)).objective, 0.846439, 1e-6);
  EXPECT_NEAR(solve_dp_identity(e1_spec({}, 1)).objective, 1.0, 1e-15);
}

TEST(DynamicProgram, Preconditions) {
  std::mt19937_64 rng(53);
  auto noisy = make_problem(testing::e1_joint(), 2, {}, {}, 1.0, ChannelMatrix::validate(Matrix{{0.9, 0.1}, {0.1, 0.9}}));
  auto asym = e1_spec({ConstraintKind::linear, {1.0, 2.0}});
  auto ternary = make_problem(validate_joint(testing::random_joint_raw(rng, 3, 4)), 2);
  for (const auto* spec : {&noisy, &asym, &ternary}) {
    try {
      solve_dp_identity(*spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
    }
  }
  // Equal linear weights make G constant, which is fine.
  EXPECT_NO_THROW(solve_dp_identity(e1_spec({ConstraintKind::linear, {1.5, 1.5}})));
}

TEST(HyperplaneCheck, E1Partitions) {
  auto spec = e1_spec();
  EXPECT_TRUE(check_hyperplane_separation(spec, Quantizer::hard({0, 0, 1, 1}, 2)).separated);
  EXPECT_TRUE(check_hyperplane_separation(e1_spec({}, 1), Quantizer::hard({0, 0, 0, 0}, 1)).separated);

  // {Y1,Y3}/{Y2,Y4}: distances all tie, but the second cell's posteriors
  // (0.6, 0.4) sit strictly inside the first cell's range [0.2, 0.8].
  auto bad = check_hyperplane_separation(spec, Quantizer::hard({0, 1, 0, 1}, 2));
  EXPECT_FALSE(bad.separated);
  std::vector<std::size_t> points;
  for (const auto& v : bad.violations) {
    EXPECT_EQ(v.kind, ViolationKind::interleaved);
    points.push_back(v.point);
  }
  EXPECT_EQ(points, (std::vector<std::size_t>{1, 3}));
}

TEST(HyperplaneCheck, FlagsDistanceViolations) {
  // Y1 (posterior 0.8) put with Y3, Y4 (0.2, 0.4) and Y2 alone.
  auto spec = e1_spec();
  auto r = check_hyperplane_separation(spec, Quantizer::hard({0, 1, 0, 0}, 2));
  EXPECT_FALSE(r.separated);
  bool has_distance = false;
  for (const auto& v : r.violations) has_distance = has_distance || v.kind == ViolationKind::distance;
  EXPECT_TRUE(has_distance);
}

TEST(ExactSolvers, AgreeWithBruteForceOnRandomInstances) {
  std::mt19937_64 rng(54);
  for (int i = 0; i < 200; ++i) {
    auto spec = testing::random_instance(rng);
    const auto brute = solve_bruteforce(spec);
    EXPECT_TRUE(check_hyperplane_separation(spec, brute.quantizer(spec.num_cells)).separated) << "instance " << i;
    if (spec.source_size() == 2) {
      EXPECT_NEAR(solve_binary_thresholds(spec).objective, brute.objective, 1e-9) << "instance " << i;
      if (spec.channel.is_identity() && spec.constraint.is_symmetric())
        EXPECT_NEAR(solve_dp_identity(spec).objective, brute.objective, 1e-9) << "instance " << i;
    }
  }
}

TEST(ExactSolvers, OptimumIsMonotoneInCellCount) {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 60; ++i) {
    const std::size_t n = 2 + i % 2, m = 3 + i % 5;
    auto joint = validate_joint(testing::random_joint_raw(rng, n, m));
    const ImpuritySpec f{i % 2 ? ImpurityKind::gini : ImpurityKind::entropy};
    double prev = solve_bruteforce(make_problem(joint, 1, f)).objective;
    for (std::size_t k = 2; k <= 4; ++k) {
      const double cur = solve_bruteforce(make_problem(joint, k, f)).objective;
      EXPECT_LE(cur, prev + 1e-9);
      prev = cur;
    }
  }
}

TEST(DynamicProgram, MatchesThresholdsOnLargerInstances) {
  std::mt19937_64 rng(56);
  for (int i = 0; i < 20; ++i) {
    auto joint = validate_joint(testing::random_joint_raw(rng, 2, 20));
    for (ConstraintKind g : {ConstraintKind::none, ConstraintKind::entropy}) {
      auto spec = make_problem(joint, 3, {}, {g, {}}, 0.5 + i);
      EXPECT_NEAR(solve_dp_identity(spec).objective, solve_binary_thresholds(spec).objective, 1e-9);
    }
  }
}

}  // namespace
}  // namespace copart
