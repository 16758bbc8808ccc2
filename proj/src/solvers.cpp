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

#include "routegen/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "routegen/util.hpp"

namespace routegen {
namespace {

constexpr double kImproveEps = 1e-10;

std::vector<std::vector<Index>> neighbor_lists(const PointSet2d& nodes, const std::vector<Index>& ids,
                                               Index k) {
  const auto n = static_cast<Index>(ids.size());
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> cand;
  for (Index a = 0; a < n; ++a) {
    cand.clear();
    for (Index b = 0; b < n; ++b) {
      if (b != a) cand.emplace_back(node_distance(nodes, ids[a], ids[b]), b);
    }
    const auto take = std::min<Index>(k, static_cast<Index>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    auto& out = lists[static_cast<std::size_t>(a)];
    for (Index t = 0; t < take; ++t) out.push_back(cand[static_cast<std::size_t>(t)].second);
  }
  return lists;
}

/// 2-opt over a closed cycle of node ids. Positions in `cycle` are local
/// slots; `ids` maps slots to instance nodes.
void two_opt_cycle(const PointSet2d& nodes, std::vector<Index>& cycle, int max_passes,
                   bool use_neighbors) {
  const auto n = static_cast<Index>(cycle.size());
  if (n < 4) return;
  auto dist = [&](Index a, Index b) { return node_distance(nodes, a, b); };
  auto reverse = [&](Index from, Index to) {
    std::reverse(cycle.begin() + from, cycle.begin() + to + 1);
  };

  if (!use_neighbors) {
    for (int pass = 0; pass < max_passes; ++pass) {
      bool improved = false;
      for (Index i = 0; i + 2 < n; ++i) {
        for (Index j = i + 2; j < n; ++j) {
          if (i == 0 && j == n - 1) continue;
          const Index a = cycle[i], b = cycle[i + 1];
          const Index c = cycle[j], d = cycle[(j + 1) % n];
          const double delta = dist(a, c) + dist(b, d) - dist(a, b) - dist(c, d);
          if (delta < -kImproveEps) {
            reverse(i + 1, j);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    return;
  }

  // Neighbour lists are built over the node ids in the cycle.
  std::vector<Index> ids = cycle;
  std::vector<Index> slot_of_node;
  const Index max_id = *std::max_element(ids.begin(), ids.end());
  slot_of_node.assign(static_cast<std::size_t>(max_id + 1), -1);
  for (Index s = 0; s < n; ++s) slot_of_node[static_cast<std::size_t>(ids[s])] = s;
  const auto lists = neighbor_lists(nodes, ids, kNeighborListSize);
  std::vector<Index> pos(static_cast<std::size_t>(n));
  auto refresh = [&](Index from, Index to) {
    for (Index p = from; p <= to; ++p) {
      pos[static_cast<std::size_t>(slot_of_node[static_cast<std::size_t>(cycle[p])])] = p;
    }
  };
  refresh(0, n - 1);
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (Index i = 0; i < n; ++i) {
      const Index a = cycle[i], b = cycle[(i + 1) % n];
      const double ab = dist(a, b);
      for (Index cs : lists[static_cast<std::size_t>(slot_of_node[static_cast<std::size_t>(a)])]) {
        const Index c = ids[cs];
        const double ac = dist(a, c);
        if (ac >= ab) break;  // sorted lists: no later candidate can gain
        const Index j = pos[static_cast<std::size_t>(cs)];
        const Index d = cycle[(j + 1) % n];
        if (c == b || d == a) continue;
        const double delta = ac + dist(b, d) - ab - dist(c, d);
        if (delta < -kImproveEps) {
          const Index lo = std::min(i, j), hi = std::max(i, j);
          reverse(lo + 1, hi);
          refresh(lo + 1, hi);
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
  }
}

double customer_demand(const Instance& instance, Index node) {
  return (*instance.demands)(node);
}

}  // namespace

double tour_length(const PointSet2d& nodes, const std::vector<Index>& order) {
  double total = 0.0;
  const auto n = order.size();
  for (std::size_t i = 0; i < n; ++i) total += node_distance(nodes, order[i], order[(i + 1) % n]);
  return total;
}

bool is_permutation_of(const std::vector<Index>& order, Index n) {
  if (static_cast<Index>(order.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index v : order) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

Tour nearest_neighbor_tour(const Instance& instance, Index start) {
  const Index n = instance.size();
  if (n < 1 || start < 0 || start >= n) {
    throw Error(Errc::kInvalidArgument, "nearest_neighbor_tour: bad start node");
  }
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  Tour tour;
  tour.order.reserve(static_cast<std::size_t>(n));
  Index current = start;
  visited[static_cast<std::size_t>(current)] = true;
  tour.order.push_back(current);
  for (Index step = 1; step < n; ++step) {
    Index best = -1;
    double best_d = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (visited[static_cast<std::size_t>(j)]) continue;
      const double d = node_distance(instance.nodes, current, j);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    visited[static_cast<std::size_t>(best)] = true;
    tour.order.push_back(best);
    current = best;
  }
  tour.length = tour_length(instance.nodes, tour.order);
  return tour;
}

Tour two_opt(const Instance& instance, const Tour& tour, int max_passes) {
  if (!is_permutation_of(tour.order, instance.size())) {
    throw Error(Errc::kInvalidArgument, "two_opt: tour is not a permutation of the nodes");
  }
  Tour out = tour;
  two_opt_cycle(instance.nodes, out.order, max_passes,
                instance.size() > kNeighborListThreshold);
  out.length = tour_length(instance.nodes, out.order);
  if (out.length > tour.length) {
    out = tour;
    out.length = tour_length(instance.nodes, out.order);
  }
  return out;
}

double route_length(const PointSet2d& nodes, Index depot, const std::vector<Index>& route) {
  if (route.empty()) return 0.0;
  double total = node_distance(nodes, depot, route.front()) + node_distance(nodes, route.back(), depot);
  for (std::size_t i = 0; i + 1 < route.size(); ++i) total += node_distance(nodes, route[i], route[i + 1]);
  return total;
}

double solution_cost(const Instance& instance, const CvrpSolution& solution) {
  double total = 0.0;
  for (const auto& r : solution.routes) total += route_length(instance.nodes, *instance.depot_index, r);
  return total;
}

bool is_feasible(const Instance& instance, const CvrpSolution& solution) {
  if (!instance.is_cvrp() || !instance.depot_index || !instance.demands || !instance.capacity) {
    return false;
  }
  const Index depot = *instance.depot_index;
  std::vector<int> served(static_cast<std::size_t>(instance.size()), 0);
  for (const auto& r : solution.routes) {
    double load = 0.0;
    for (Index c : r) {
      if (c < 0 || c >= instance.size() || c == depot) return false;
      ++served[static_cast<std::size_t>(c)];
      load += customer_demand(instance, c);
    }
    if (load > *instance.capacity * (1.0 + 1e-12)) return false;
  }
  for (Index v = 0; v < instance.size(); ++v) {
    if (v != depot && served[static_cast<std::size_t>(v)] != 1) return false;
  }
  return true;
}

CvrpSolution savings_cvrp(const Instance& instance) {
  instance.check();
  if (!instance.is_cvrp()) throw Error(Errc::kInvalidArgument, "savings_cvrp needs a CVRP instance");
  const Index depot = *instance.depot_index;
  const double cap = *instance.capacity;
  const Index n = instance.size();
  const auto& nodes = instance.nodes;

  std::vector<Index> customers;
  for (Index v = 0; v < n; ++v) {
    if (v == depot) continue;
    if (customer_demand(instance, v) > cap) {
      throw Error(Errc::kInfeasibleDemand,
                  "demand of node " + std::to_string(v) + " exceeds the vehicle capacity");
    }
    customers.push_back(v);
  }

  // Route bookkeeping indexed by node id.
  std::vector<Index> route_of(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> routes;
  std::vector<double> loads;
  for (Index c : customers) {
    route_of[static_cast<std::size_t>(c)] = static_cast<Index>(routes.size());
    routes.push_back({c});
    loads.push_back(customer_demand(instance, c));
  }

  struct Saving {
    double value;
    Index i, j;
  };
  std::vector<Saving> savings;
  savings.reserve(customers.size() * (customers.size() - 1) / 2);
  for (std::size_t a = 0; a < customers.size(); ++a) {
    for (std::size_t b = a + 1; b < customers.size(); ++b) {
      const Index i = customers[a], j = customers[b];
      const double s = node_distance(nodes, depot, i) + node_distance(nodes, depot, j) -
                       node_distance(nodes, i, j);
      if (s > kImproveEps) savings.push_back({s, i, j});
    }
  }
  std::sort(savings.begin(), savings.end(), [](const Saving& x, const Saving& y) {
    if (x.value != y.value) return x.value > y.value;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });

  for (const auto& s : savings) {
    const Index ri = route_of[static_cast<std::size_t>(s.i)];
    const Index rj = route_of[static_cast<std::size_t>(s.j)];
    if (ri == rj) continue;
    auto& a = routes[static_cast<std::size_t>(ri)];
    auto& b = routes[static_cast<std::size_t>(rj)];
    if (loads[ri] + loads[rj] > cap * (1.0 + 1e-12)) continue;
    const bool i_end = a.back() == s.i, i_start = a.front() == s.i;
    const bool j_end = b.back() == s.j, j_start = b.front() == s.j;
    if (!(i_end || i_start) || !(j_end || j_start)) continue;
    if (!i_end) std::reverse(a.begin(), a.end());
    if (!j_start) std::reverse(b.begin(), b.end());
    for (Index c : b) route_of[static_cast<std::size_t>(c)] = ri;
    a.insert(a.end(), b.begin(), b.end());
    b.clear();
    loads[ri] += loads[rj];
    loads[rj] = 0.0;
  }

  CvrpSolution sol;
  for (auto& r : routes) {
    if (r.empty()) continue;
    std::vector<Index> cycle;
    cycle.reserve(r.size() + 1);
    cycle.push_back(depot);
    cycle.insert(cycle.end(), r.begin(), r.end());
    const double before = route_length(nodes, depot, r);
    two_opt_cycle(nodes, cycle, kDefaultTwoOptPasses, static_cast<Index>(cycle.size()) > kNeighborListThreshold);
    const auto at = std::find(cycle.begin(), cycle.end(), depot);
    std::rotate(cycle.begin(), at, cycle.end());
    std::vector<Index> polished(cycle.begin() + 1, cycle.end());
    if (route_length(nodes, depot, polished) <= before) r = std::move(polished);
    sol.routes.push_back(std::move(r));
  }
  std::sort(sol.routes.begin(), sol.routes.end(), [](const auto& x, const auto& y) {
    return *std::min_element(x.begin(), x.end()) < *std::min_element(y.begin(), y.end());
  });
  sol.cost = solution_cost(instance, sol);
  return sol;
}

double gap(double objective, double optimum) {
  if (!(optimum > 0.0) || !std::isfinite(optimum)) {
    throw Error(Errc::kNonPositiveOptimum, "optimum must be positive, got " + std::to_string(optimum));
  }
  return (objective - optimum) / optimum;
}

std::string format_gap_percent(double gap_fraction) {
  return format_fixed(gap_fraction * 100.0, 2) + "%";
}

GapReport make_gap_report(double objective, double optimum) {
  return {objective, optimum, gap(objective, optimum)};
}

SolveResult solve_instance(const Instance& instance) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  res.name = instance.name;
  if (instance.is_cvrp()) {
    auto sol = savings_cvrp(instance);
    res.objective = sol.cost;
    res.routes = std::move(sol.routes);
  } else {
    const Tour t = two_opt(instance, nearest_neighbor_tour(instance, 0));
    res.objective = t.length;
    res.routes = {t.order};
  }
  if (instance.best_known) res.gap = gap(res.objective, *instance.best_known);
  res.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace routegen
