#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "adoptsim/errors.hpp"
#include "adoptsim/geo.hpp"
#include "adoptsim/parallel.hpp"

namespace adoptsim {

// Distances inside a city are floored here so the kernel stays finite while
// intra-city ties remain the most likely.
inline constexpr double kIntraCityFloorKm = 1.0;

struct NetGenParams {
  double mean_degree = 7.0;
  double gamma = 1.2;            // kernel exponent
  double nu_km = 1000.0;         // kernel truncation distance
  double homophily_target = 0.0; // measured early-adopter homophily to aim for
  bool geo_biased = false;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(mean_degree > 0.0)) throw ValidationError("netgen.mean_degree must be > 0");
    if (!(gamma > 0.0)) throw ValidationError("netgen.gamma must be > 0");
    if (!(nu_km > 0.0)) throw ValidationError("netgen.nu_km must be > 0");
    if (homophily_target < 0.0 || homophily_target > 1.0)
      throw ValidationError("netgen.homophily_target must be in [0,1]");
  }
};

// Power-law distance kernel, constant beyond nu_km, floored at 1 km.
// Positive and non-increasing in r.
inline double kernel_weight(double r_km, double gamma, double nu_km) {
  const double r = std::min(std::max(r_km, kIntraCityFloorKm), nu_km);
  return std::pow(r, -gamma);
}

// City-pair kernel weights, computed once per (table, gamma, nu) and shared
// across all networks generated from the same table.
struct GeoKernel {
  std::size_t n_cities = 0;
  std::vector<double> w;  // row-major n_cities x n_cities

  static GeoKernel build(const CityTable& cities, double gamma, double nu_km) {
    GeoKernel k;
    k.n_cities = cities.size();
    k.w.resize(k.n_cities * k.n_cities);
    for (std::size_t a = 0; a < k.n_cities; ++a) {
      k.w[a * k.n_cities + a] = kernel_weight(0.0, gamma, nu_km);
      for (std::size_t b = a + 1; b < k.n_cities; ++b) {
        const double wab = kernel_weight(distance_km(cities[a], cities[b]), gamma, nu_km);
        k.w[a * k.n_cities + b] = wab;
        k.w[b * k.n_cities + a] = wab;
      }
    }
    return k;
  }

  const double* row(std::size_t city) const { return w.data() + city * n_cities; }
};

// Undirected simple graph in CSR form plus the population it was built over.
struct Network {
  std::vector<std::uint32_t> offsets;  // size n+1
  std::vector<std::uint32_t> adj;      // neighbor lists, sorted ascending per node
  AgentPopulation agents;
  NetGenParams params;

  std::size_t node_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t edge_count() const { return adj.size() / 2; }
  std::size_t degree(std::uint32_t i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const std::uint32_t> neighbors(std::uint32_t i) const {
    return {adj.data() + offsets[i], adj.data() + offsets[i + 1]};
  }
};

// I.i.d. Poisson(mean_degree) draws; if their sum is odd one uniformly chosen
// entry is incremented so stub matching can pair everything.
inline std::vector<std::uint32_t> sample_degrees(std::size_t n, double mean_degree,
                                                 std::mt19937_64& rng) {
  if (n < 1) throw ValidationError("sample_degrees: n must be >= 1");
  std::poisson_distribution<std::uint32_t> poisson(mean_degree);
  std::vector<std::uint32_t> deg(n);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = poisson(rng);
    sum += deg[i];
  }
  if (sum % 2 == 1) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    ++deg[pick(rng)];
  }
  return deg;
}

namespace detail {

// Expected measured homophily when a fraction q of early-owned stubs commits
// to an early-only partner pool and everything else mixes freely:
//   measured(q) = q + (1-q) * f_general(q),
// where f_general is the early share of the uncommitted pool. Monotone in q,
// spanning [f_stub, 1].
inline double predicted_homophily(double q, double f_stub) {
  const double general_early = (1.0 - q) * f_stub;
  const double general_total = general_early + (1.0 - f_stub);
  const double f_general = general_total > 0.0 ? general_early / general_total : 0.0;
  return q + (1.0 - q) * f_general;
}

// Inverts predicted_homophily by bisection so the measured homophily tracks
// the requested target. Targets at or below the random-mixing level map to
// q = 0 (no anti-homophily mechanism is provided).
inline double commit_probability(double target, double f_stub) {
  if (f_stub >= 1.0) return 0.0;  // all-early population, homophily is 1 regardless
  if (target <= f_stub) return 0.0;
  if (target >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (predicted_homophily(mid, f_stub) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Matches the stubs of one pool into edges. Partner stubs are drawn
// proportionally to the city-pair kernel when a kernel is given, uniformly
// otherwise. Self-loops and duplicate edges are redrawn up to retry_budget
// times, after which the choosing stub is discarded.
class StubMatcher {
 public:
  StubMatcher(const AgentPopulation& pop, const GeoKernel* kernel,
              std::mt19937_64& rng, std::unordered_set<std::uint64_t>& edge_set,
              std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges)
      : pop_(pop), kernel_(kernel), rng_(rng), edge_set_(edge_set), edges_(edges) {}

  static constexpr int kRetryBudget = 100;

  // stub_owners: one entry per stub. Returns the number of discarded stubs.
  std::size_t match(std::vector<std::uint32_t> stub_owners, const std::string& pool_name) {
    if (stub_owners.size() < 2) return 0;
    matches_ = 0;
    discards_ = 0;
    if (kernel_ == nullptr) {
      match_uniform(std::move(stub_owners));
    } else {
      match_weighted(std::move(stub_owners));
    }
    if (stuck(stub_owners_hint_)) {
      throw GenerationError(
          "network generation stuck in " + pool_name + " pool: " +
          std::to_string(matches_) + " matches, " + std::to_string(discards_) +
          " discarded stubs of " + std::to_string(stub_owners_hint_) +
          " (check homophily_target against the early-adopter supply)");
    }
    return discards_;
  }

 private:
  bool stuck(std::size_t pool_size) const {
    if (pool_size < 2) return false;
    if (matches_ == 0 && discards_ > 0) return true;
    return static_cast<double>(discards_) >
           std::max(4.0, 0.05 * static_cast<double>(pool_size));
  }

  bool try_accept(std::uint32_t owner_a, std::uint32_t owner_b) {
    if (owner_a == owner_b) return false;
    if (!edge_set_.insert(edge_key(owner_a, owner_b)).second) return false;
    edges_.emplace_back(owner_a, owner_b);
    ++matches_;
    return true;
  }

  void match_uniform(std::vector<std::uint32_t> avail) {
    stub_owners_hint_ = avail.size();
    std::shuffle(avail.begin(), avail.end(), rng_);
    while (avail.size() >= 2) {
      const std::uint32_t chooser = avail.back();
      avail.pop_back();
      bool matched = false;
      for (int attempt = 0; attempt < kRetryBudget && !matched; ++attempt) {
        std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
        const std::size_t j = pick(rng_);
        if (try_accept(chooser, avail[j])) {
          avail[j] = avail.back();
          avail.pop_back();
          matched = true;
        }
      }
      if (!matched) ++discards_;
    }
  }

  void match_weighted(std::vector<std::uint32_t> stub_owners) {
    stub_owners_hint_ = stub_owners.size();
    const std::size_t n_stubs = stub_owners.size();
    const std::size_t n_cities = kernel_->n_cities;

    // Per-city buckets of live stubs, with back-pointers for O(1) removal.
    std::vector<std::vector<std::uint32_t>> bucket(n_cities);  // stub ids
    std::vector<std::uint32_t> pos(n_stubs);
    std::vector<std::uint8_t> consumed(n_stubs, 0);
    for (std::uint32_t s = 0; s < n_stubs; ++s) {
      auto& b = bucket[pop_.city_row[stub_owners[s]]];
      pos[s] = static_cast<std::uint32_t>(b.size());
      b.push_back(s);
    }
    auto remove_stub = [&](std::uint32_t s) {
      auto& b = bucket[pop_.city_row[stub_owners[s]]];
      const std::uint32_t p = pos[s];
      b[p] = b.back();
      pos[b[p]] = p;
      b.pop_back();
      consumed[s] = 1;
    };

    std::vector<std::uint32_t> order(n_stubs);
    for (std::uint32_t s = 0; s < n_stubs; ++s) order[s] = s;
    std::shuffle(order.begin(), order.end(), rng_);

    std::vector<double> cum(n_cities);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (const std::uint32_t chooser : order) {
      if (consumed[chooser]) continue;
      remove_stub(chooser);  // a stub never partners itself
      const std::uint32_t chooser_owner = stub_owners[chooser];
      const double* kw = kernel_->row(pop_.city_row[chooser_owner]);

      bool matched = false;
      for (int attempt = 0; attempt < kRetryBudget && !matched; ++attempt) {
        double total = 0.0;
        for (std::size_t c = 0; c < n_cities; ++c) {
          total += kw[c] * static_cast<double>(bucket[c].size());
          cum[c] = total;
        }
        if (total <= 0.0) break;  // no live partner stubs anywhere
        const double target = unit(rng_) * total;
        const std::size_t c = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
        auto& b = bucket[c];
        std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
        const std::uint32_t partner = b[pick(rng_)];
        if (try_accept(chooser_owner, stub_owners[partner])) {
          remove_stub(partner);
          matched = true;
        }
      }
      if (!matched) ++discards_;
    }
  }

  const AgentPopulation& pop_;
  const GeoKernel* kernel_;
  std::mt19937_64& rng_;
  std::unordered_set<std::uint64_t>& edge_set_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges_;
  std::size_t matches_ = 0;
  std::size_t discards_ = 0;
  std::size_t stub_owners_hint_ = 0;
};

}  // namespace detail

// Builds the social network by stub matching. Every node draws a Poisson
// degree; a calibrated fraction of early-owned stubs commits to an
// early-only pool (so measured homophily tracks homophily_target), and the
// remaining stubs mix freely. Partner selection is distance-weighted when
// geo_biased. Deterministic given params.rng_seed.
inline Network build_network(const AgentPopulation& pop, const CityTable& cities,
                             const NetGenParams& params,
                             const GeoKernel* kernel_cache = nullptr) {
  params.validate();
  const std::size_t n = pop.size();
  if (n < 1) throw ValidationError("build_network: empty population");
  if (pop.city_offset.size() != cities.size() + 1)
    throw ValidationError("build_network: population does not match city table");

  GeoKernel local_kernel;
  const GeoKernel* kernel = nullptr;
  if (params.geo_biased) {
    if (kernel_cache != nullptr) {
      kernel = kernel_cache;
    } else {
      local_kernel = GeoKernel::build(cities, params.gamma, params.nu_km);
      kernel = &local_kernel;
    }
    if (kernel->n_cities != cities.size())
      throw ValidationError("build_network: kernel cache does not match city table");
  }

  std::mt19937_64 rng(params.rng_seed);
  const auto degrees = sample_degrees(n, params.mean_degree, rng);

  std::uint64_t total_stubs = 0, early_stubs = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    total_stubs += degrees[i];
    if (pop.type[i] == AdopterType::Early) early_stubs += degrees[i];
  }

  const double f_stub = total_stubs > 0
                            ? static_cast<double>(early_stubs) / static_cast<double>(total_stubs)
                            : 0.0;
  const double q = detail::commit_probability(params.homophily_target, f_stub);

  // Split stubs into the committed early pool and the general pool.
  std::vector<std::uint32_t> early_pool, general_pool;
  early_pool.reserve(static_cast<std::size_t>(static_cast<double>(early_stubs) * q) + 16);
  general_pool.reserve(static_cast<std::size_t>(total_stubs));
  std::bernoulli_distribution commit(q);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t d = 0; d < degrees[i]; ++d) {
      if (pop.type[i] == AdopterType::Early && q > 0.0 && commit(rng)) {
        early_pool.push_back(i);
      } else {
        general_pool.push_back(i);
      }
    }
  }
  if (early_pool.size() % 2 == 1) {
    // Re-even the early pool. At q = 1 the odd stub is dropped outright so a
    // full-homophily network never gains an early-regular edge.
    std::uniform_int_distribution<std::size_t> pick(0, early_pool.size() - 1);
    const std::size_t j = pick(rng);
    if (q < 1.0) general_pool.push_back(early_pool[j]);
    early_pool[j] = early_pool.back();
    early_pool.pop_back();
  }

  std::unordered_set<std::uint64_t> edge_set;
  edge_set.reserve(total_stubs);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(total_stubs / 2);

  detail::StubMatcher matcher(pop, kernel, rng, edge_set, edges);
  matcher.match(std::move(early_pool), "early");
  matcher.match(std::move(general_pool), "general");

  Network net;
  net.agents = pop;
  net.params = params;
  net.offsets.assign(n + 1, 0);
  for (const auto& [a, b] : edges) {
    ++net.offsets[a + 1];
    ++net.offsets[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) net.offsets[i + 1] += net.offsets[i];
  net.adj.resize(2 * edges.size());
  {
    std::vector<std::uint32_t> cursor(net.offsets.begin(), net.offsets.end() - 1);
    for (const auto& [a, b] : edges) {
      net.adj[cursor[a]++] = b;
      net.adj[cursor[b]++] = a;
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    auto begin = net.adj.begin() + net.offsets[i];
    auto end = net.adj.begin() + net.offsets[i + 1];
    std::sort(begin, end);
    if (std::adjacent_find(begin, end) != end)
      throw GenerationError("build_network: duplicate edge slipped through");
    if (std::find(begin, end, i) != end)
      throw GenerationError("build_network: self-loop slipped through");
  }
  return net;
}

// Mean over early adopters with degree >= 1 of the early share of their
// neighborhoods.
inline double measure_homophily(const Network& net) {
  double sum = 0.0;
  std::size_t counted = 0;
  const std::size_t n = net.node_count();
  for (std::uint32_t i = 0; i < n; ++i) {
    if (net.agents.type[i] != AdopterType::Early) continue;
    const auto nbrs = net.neighbors(i);
    if (nbrs.empty()) continue;
    std::size_t early = 0;
    for (const std::uint32_t j : nbrs)
      if (net.agents.type[j] == AdopterType::Early) ++early;
    sum += static_cast<double>(early) / static_cast<double>(nbrs.size());
    ++counted;
  }
  if (counted == 0)
    throw ValidationError("measure_homophily: no early adopter with degree >= 1");
  return sum / static_cast<double>(counted);
}

// Size of the largest connected component of the early-adopter-induced
// subgraph, as a fraction of all early adopters.
inline double early_giant_component(const Network& net) {
  const std::size_t n = net.node_count();
  std::size_t n_early = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    if (net.agents.type[i] == AdopterType::Early) ++n_early;
  if (n_early == 0)
    throw ValidationError("early_giant_component: no early adopters");

  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::uint32_t> stack;
  std::size_t best = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (visited[s] || net.agents.type[s] != AdopterType::Early) continue;
    std::size_t size = 0;
    visited[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::uint32_t u = stack.back();
      stack.pop_back();
      ++size;
      for (const std::uint32_t v : net.neighbors(u)) {
        if (!visited[v] && net.agents.type[v] == AdopterType::Early) {
          visited[v] = 1;
          stack.push_back(v);
        }
      }
    }
    best = std::max(best, size);
  }
  return static_cast<double>(best) / static_cast<double>(n_early);
}

struct ComponentCurveRow {
  double homophily_target = 0.0;
  bool geo_biased = false;
  double mean_gc_fraction = 0.0;
  double mean_measured_homophily = 0.0;
  std::size_t networks_ok = 0;
  std::size_t networks_failed = 0;
};

// For each homophily level and each bias setting, generates n_networks
// networks (fresh placement each, seed = rng_seed + global network index)
// and averages the early giant component. Generation failures are recorded
// per cell; they do not abort the sweep.
inline std::vector<ComponentCurveRow> component_curve(const CityTable& cities,
                                                      const NetGenParams& base,
                                                      const std::vector<double>& h_grid,
                                                      std::size_t n_networks,
                                                      unsigned jobs = 1) {
  base.validate();
  if (h_grid.empty()) throw ValidationError("component_curve: h_grid must be non-empty");
  if (n_networks < 1) throw ValidationError("component_curve: n_networks must be >= 1");

  const GeoKernel kernel = GeoKernel::build(cities, base.gamma, base.nu_km);
  const bool bias_settings[2] = {false, true};
  const std::size_t n_cells = h_grid.size() * 2;
  const std::size_t n_total = n_cells * n_networks;

  struct Sample {
    double gc = 0.0;
    double homophily = 0.0;
    bool ok = false;
  };
  std::vector<Sample> samples(n_total);

  parallel_for(n_total, jobs, [&](std::size_t idx) {
    const std::size_t cell = idx / n_networks;
    const std::size_t h_idx = cell / 2;
    const bool biased = bias_settings[cell % 2];
    NetGenParams p = base;
    p.homophily_target = h_grid[h_idx];
    p.geo_biased = biased;
    p.rng_seed = base.rng_seed + idx;
    try {
      const AgentPopulation pop = place_agents(cities, p.rng_seed);
      const Network net = build_network(pop, cities, p, biased ? &kernel : nullptr);
      samples[idx].gc = early_giant_component(net);
      samples[idx].homophily = measure_homophily(net);
      samples[idx].ok = true;
    } catch (const std::exception&) {
      samples[idx].ok = false;
    }
  });

  std::vector<ComponentCurveRow> rows;
  rows.reserve(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    ComponentCurveRow row;
    row.homophily_target = h_grid[cell / 2];
    row.geo_biased = bias_settings[cell % 2];
    double gc_sum = 0.0, h_sum = 0.0;
    for (std::size_t k = 0; k < n_networks; ++k) {
      const Sample& s = samples[cell * n_networks + k];
      if (s.ok) {
        gc_sum += s.gc;
        h_sum += s.homophily;
        ++row.networks_ok;
      } else {
        ++row.networks_failed;
      }
    }
    if (row.networks_ok > 0) {
      row.mean_gc_fraction = gc_sum / static_cast<double>(row.networks_ok);
      row.mean_measured_homophily = h_sum / static_cast<double>(row.networks_ok);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace adoptsim
