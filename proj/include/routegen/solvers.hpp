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

#pragma once

#include <string>
#include <vector>

#include "routegen/core.hpp"

namespace routegen {

/// Closed tour over every node of a TSP instance.
struct Tour {
  std::vector<Index> order;
  double length = 0.0;
};

/// Closed-cycle Euclidean length of `order` over `nodes`.
double tour_length(const PointSet2d& nodes, const std::vector<Index>& order);

/// True when `order` is a permutation of {0..n-1}.
bool is_permutation_of(const std::vector<Index>& order, Index n);

/// Greedy nearest-unvisited construction. Ties go to the lower index.
Tour nearest_neighbor_tour(const Instance& instance, Index start = 0);

inline constexpr int kDefaultTwoOptPasses = 1000;
inline constexpr Index kNeighborListThreshold = 500;
inline constexpr Index kNeighborListSize = 20;

/// First-improvement 2-opt. Above kNeighborListThreshold nodes the candidate
/// moves are restricted to the kNeighborListSize nearest neighbours.
Tour two_opt(const Instance& instance, const Tour& tour, int max_passes = kDefaultTwoOptPasses);

/// Customer sequences, one per vehicle; the depot is implicit at both ends.
struct CvrpSolution {
  std::vector<std::vector<Index>> routes;
  double cost = 0.0;
};

double route_length(const PointSet2d& nodes, Index depot, const std::vector<Index>& route);
double solution_cost(const Instance& instance, const CvrpSolution& solution);

/// Every customer served exactly once and every route within capacity.
bool is_feasible(const Instance& instance, const CvrpSolution& solution);

/// Clarke-Wright parallel savings followed by 2-opt inside each route.
/// Savings ties are broken by the lower (i, j) pair. Throws
/// kInfeasibleDemand when a single demand exceeds the capacity.
CvrpSolution savings_cvrp(const Instance& instance);

/// (objective - optimum) / optimum. Throws kNonPositiveOptimum.
double gap(double objective, double optimum);

/// Gap as a percentage with two decimals, e.g. "25.24%".
std::string format_gap_percent(double gap_fraction);

struct GapReport {
  double objective = 0.0;
  double optimum = 0.0;
  double gap = 0.0;
};

GapReport make_gap_report(double objective, double optimum);

/// Desk-scale reference solution: nearest neighbour plus 2-opt for TSP,
/// savings for CVRP.
struct SolveResult {
  std::string name;
  double objective = 0.0;
  std::optional<double> gap;
  double wall_time_ms = 0.0;
  std::vector<std::vector<Index>> routes;  // one closed tour for TSP
};

SolveResult solve_instance(const Instance& instance);

}  // namespace routegen
