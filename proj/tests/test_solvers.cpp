// Copyright 2026 The routegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "routegen/dsl.hpp"
#include "routegen/solvers.hpp"
#include "routegen/vrplib.hpp"
#include "test_support.hpp"

namespace routegen {
namespace {

using testing::fixture;

Instance tsp_from(std::initializer_list<std::pair<double, double>> pts) {
  Instance inst;
  inst.name = "t";
  inst.nodes.resize(static_cast<Index>(pts.size()), 2);
  Index i = 0;
  for (const auto& [x, y] : pts) inst.nodes.row(i++) << x, y;
  return inst;
}

/// Exhaustive optimum with node 0 fixed first.
double brute_force_tsp(const Instance& inst) {
  std::vector<Index> rest(static_cast<std::size_t>(inst.size() - 1));
  std::iota(rest.begin(), rest.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<Index> order = {0};
    order.insert(order.end(), rest.begin(), rest.end());
    best = std::min(best, tour_length(inst.nodes, order));
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

TEST(Tour, LengthAndPermutation) {
  const Instance sq = tsp_from({{0, 0}, {3, 0}, {3, 4}, {0, 4}});
  EXPECT_DOUBLE_EQ(tour_length(sq.nodes, {0, 1, 2, 3}), 14.0);
  EXPECT_DOUBLE_EQ(tour_length(sq.nodes, {0, 2, 1, 3}), 18.0);
  EXPECT_TRUE(is_permutation_of({2, 0, 1, 3}, 4));
  EXPECT_FALSE(is_permutation_of({0, 0, 1, 3}, 4));
  EXPECT_FALSE(is_permutation_of({0, 1, 2}, 4));
}

TEST(NearestNeighbor, HandTraced) {
  // From 0: nearest is 2 (d=1), then 1 (d=2 vs 3 at distance 3), then 3.
  const Instance inst = tsp_from({{0, 0}, {3, 0}, {1, 0}, {-2, 0}});
  const Tour t = nearest_neighbor_tour(inst);
  EXPECT_EQ(t.order, (std::vector<Index>{0, 2, 1, 3}));
  EXPECT_DOUBLE_EQ(t.length, 10.0);
}

TEST(NearestNeighbor, TieGoesToLowerIndex) {
  const Instance inst = tsp_from({{0, 0}, {1, 0}, {-1, 0}, {0, 5}});
  EXPECT_EQ(nearest_neighbor_tour(inst).order[1], 1);
}

TEST(TwoOpt, RemovesCrossing) {
  const Instance sq = tsp_from({{0, 0}, {3, 0}, {3, 4}, {0, 4}});
  Tour crossed{{0, 2, 1, 3}, 18.0};
  const Tour t = two_opt(sq, crossed);
  EXPECT_DOUBLE_EQ(t.length, 14.0);
  EXPECT_TRUE(is_permutation_of(t.order, 4));
  EXPECT_THROW(two_opt(sq, Tour{{0, 1, 1, 3}, 0}), Error);
}

TEST(TwoOpt, NeverWorseAndNearOptimalOnSmallInstances) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    Instance inst;
    inst.nodes.resize(8, 2);
    for (Index i = 0; i < 8; ++i) inst.nodes.row(i) << rng.uniform(), rng.uniform();
    const Tour nn = nearest_neighbor_tour(inst);
    const Tour opt = two_opt(inst, nn);
    const double best = brute_force_tsp(inst);
    EXPECT_LE(opt.length, nn.length + 1e-12);
    EXPECT_GE(opt.length, best - 1e-9);
    EXPECT_NEAR(opt.length, tour_length(inst.nodes, opt.order), 1e-9);
    EXPECT_LE(opt.length, best * 1.2);
  }
}

TEST(TwoOpt, NeighborListPathOnLargeInstance) {
  Rng rng(1);
  Instance inst;
  inst.nodes.resize(700, 2);
  for (Index i = 0; i < 700; ++i) inst.nodes.row(i) << rng.uniform(), rng.uniform();
  const Tour nn = nearest_neighbor_tour(inst);
  const Tour opt = two_opt(inst, nn);
  EXPECT_TRUE(is_permutation_of(opt.order, 700));
  EXPECT_LT(opt.length, nn.length * 0.95);
}

TEST(Berlin52, PinnedRegression) {
  Instance inst = read_instance_file(fixture("berlin52.tsp"));
  const Tour nn = nearest_neighbor_tour(inst);
  EXPECT_NEAR(nn.length, 8980.918279, 1e-5);
  const Tour opt = two_opt(inst, nn);
  EXPECT_NEAR(opt.length, 8060.651583, 1e-5);
  EXPECT_LE(gap(opt.length, 7542.0), 0.10);
  inst.best_known = 7542.0;
  const SolveResult r = solve_instance(inst);
  EXPECT_NEAR(r.objective, 8060.651583, 1e-5);
  ASSERT_TRUE(r.gap);
  EXPECT_EQ(format_gap_percent(*r.gap), "6.88%");
}

TEST(Gap, PaperRows) {
  EXPECT_EQ(format_gap_percent(gap(9445.60, 7542)), "25.24%");
  EXPECT_EQ(format_gap_percent(gap(108159.44, 108159)), "0.00%");
  EXPECT_NEAR(gap(9445.60, 7542) * 100.0, 25.24, 0.01);
  EXPECT_EQ(format_gap_percent(-0.00001), "0.00%");
  try {
    gap(1.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNonPositiveOptimum);
  }
  const auto report = make_gap_report(110, 100);
  EXPECT_DOUBLE_EQ(report.gap, 0.1);
}

Instance cvrp_line() {
  // Depot at origin; customers 1,2 to the east, 3 to the west.
  Instance inst;
  inst.name = "line";
  inst.kind = ProblemKind::kCvrp;
  inst.nodes.resize(4, 2);
  inst.nodes << 0, 0, 1, 0, 2, 0, -1, 0;
  inst.depot_index = 0;
  Eigen::VectorXd d(4);
  d << 0, 3, 3, 3;
  inst.demands = d;
  inst.capacity = 6;
  return inst;
}

TEST(Savings, HandTraced) {
  // Savings: s(1,2) = 1 + 2 - 1 = 2, s(1,3) = 0, s(2,3) = 0. Merge {1,2}
  // (load 6), customer 3 stays alone.
  const Instance inst = cvrp_line();
  const CvrpSolution sol = savings_cvrp(inst);
  ASSERT_EQ(sol.routes.size(), 2u);
  EXPECT_TRUE(is_feasible(inst, sol));
  EXPECT_DOUBLE_EQ(sol.cost, 6.0);
  EXPECT_DOUBLE_EQ(solution_cost(inst, sol), 6.0);
  EXPECT_DOUBLE_EQ(route_length(inst.nodes, 0, {1, 2}), 4.0);
}

TEST(Savings, CapacityBlocksMerge) {
  Instance inst = cvrp_line();
  inst.capacity = 5;
  const CvrpSolution sol = savings_cvrp(inst);
  EXPECT_EQ(sol.routes.size(), 3u);
  EXPECT_TRUE(is_feasible(inst, sol));
  inst.capacity = 2;
  try {
    savings_cvrp(inst);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInfeasibleDemand);
  }
}

TEST(Savings, FeasibilityChecker) {
  const Instance inst = cvrp_line();
  EXPECT_FALSE(is_feasible(inst, CvrpSolution{{{1, 2, 3}}, 0}));   // over capacity
  EXPECT_FALSE(is_feasible(inst, CvrpSolution{{{1, 2}}, 0}));      // 3 unserved
  EXPECT_FALSE(is_feasible(inst, CvrpSolution{{{1}, {1, 2}, {3}}, 0}));
  EXPECT_TRUE(is_feasible(inst, CvrpSolution{{{1}, {2}, {3}}, 0}));
}

TEST(Savings, FeasibleOnSampledInstances) {
  const auto program = seed_program(ProgramCategory::kCvrp);
  for (std::uint64_t s = 0; s < 25; ++s) {
    const Instance inst = sample_instance(program, 50, s);
    const CvrpSolution sol = savings_cvrp(inst);
    EXPECT_TRUE(is_feasible(inst, sol)) << s;
    EXPECT_NEAR(sol.cost, solution_cost(inst, sol), 1e-9);
  }
}

TEST(Solve, CvrpResult) {
  const Instance inst = sample_instance(seed_program(ProgramCategory::kCvrp), 30, 3);
  const SolveResult r = solve_instance(inst);
  EXPECT_FALSE(r.gap);
  EXPECT_GT(r.objective, 0.0);
  EXPECT_GE(r.routes.size(), 1u);
}

}  // namespace
}  // namespace routegen
