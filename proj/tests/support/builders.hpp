#pragma once

// Small helpers for constructing populations and networks by hand in tests.

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "adoptsim/geo.hpp"
#include "adoptsim/netgen.hpp"

namespace testutil {

// One-city population with explicit adopter types.
inline adoptsim::AgentPopulation make_population(
    const std::vector<adoptsim::AdopterType>& types) {
  adoptsim::AgentPopulation pop;
  const auto n = static_cast<std::uint32_t>(types.size());
  pop.city_row.assign(n, 0);
  pop.type = types;
  pop.city_offset = {0, n};
  pop.city_id = {0};
  return pop;
}

// Network from an explicit undirected edge list.
inline adoptsim::Network make_network(adoptsim::AgentPopulation pop,
                                      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  adoptsim::Network net;
  const std::size_t n = pop.size();
  net.agents = std::move(pop);
  net.offsets.assign(n + 1, 0);
  for (const auto& [a, b] : edges) {
    ++net.offsets[a + 1];
    ++net.offsets[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) net.offsets[i + 1] += net.offsets[i];
  net.adj.resize(2 * edges.size());
  std::vector<std::uint32_t> cursor(net.offsets.begin(), net.offsets.end() - 1);
  for (const auto& [a, b] : edges) {
    net.adj[cursor[a]++] = b;
    net.adj[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(net.adj.begin() + net.offsets[i], net.adj.begin() + net.offsets[i + 1]);
  return net;
}

inline adoptsim::Network make_network(const std::vector<adoptsim::AdopterType>& types,
                                      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  return make_network(make_population(types), edges);
}

// Complete graph over n agents, all regular unless stated.
inline adoptsim::Network make_complete(std::size_t n,
                                       adoptsim::AdopterType t = adoptsim::AdopterType::Regular) {
  std::vector<adoptsim::AdopterType> types(n, t);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return make_network(types, edges);
}

}  // namespace testutil
