#pragma once

// Test-only reference implementations, kept independent of the library code
// they check. Nothing in here may call into adoptsim/ beyond plain types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

// --- exact SI-with-media enumeration -----------------------------------
//
// Full outcome enumeration over <= ~20-node state spaces: per-agent
// probability of being infected after `steps` synchronous weeks, where a
// susceptible agent with m infected neighbors stays susceptible with
// probability (1 - beta_agent)^m * (1 - alpha_m). Written straight from the
// update rule, not from the engine.

inline std::vector<double> exact_infection_probability(
    const std::vector<std::vector<int>>& adj, const std::vector<double>& beta,
    double alpha_m, std::uint32_t seed_mask, int steps) {
  const int n = static_cast<int>(adj.size());
  if (n > 20) throw std::invalid_argument("enumeration oracle: graph too large");
  const std::uint32_t n_states = 1u << n;

  std::vector<double> prob(n_states, 0.0);
  prob[seed_mask] = 1.0;

  for (int t = 0; t < steps; ++t) {
    std::vector<double> next(n_states, 0.0);
    for (std::uint32_t mask = 0; mask < n_states; ++mask) {
      const double p_state = prob[mask];
      if (p_state == 0.0) continue;

      std::vector<int> susceptible;
      std::vector<double> p_adopt;
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) continue;
        int m = 0;
        for (const int j : adj[i])
          if (mask & (1u << j)) ++m;
        susceptible.push_back(i);
        p_adopt.push_back(1.0 - std::pow(1.0 - beta[i], m) * (1.0 - alpha_m));
      }

      const std::uint32_t n_sub = 1u << susceptible.size();
      for (std::uint32_t sub = 0; sub < n_sub; ++sub) {
        double p_sub = p_state;
        std::uint32_t new_mask = mask;
        for (std::size_t k = 0; k < susceptible.size(); ++k) {
          if (sub & (1u << k)) {
            p_sub *= p_adopt[k];
            new_mask |= 1u << susceptible[k];
          } else {
            p_sub *= 1.0 - p_adopt[k];
          }
        }
        next[new_mask] += p_sub;
      }
    }
    prob = std::move(next);
  }

  std::vector<double> per_agent(n, 0.0);
  for (std::uint32_t mask = 0; mask < n_states; ++mask) {
    if (prob[mask] == 0.0) continue;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) per_agent[i] += prob[mask];
  }
  return per_agent;
}

// --- chi-square goodness of fit -----------------------------------------

// Regularized lower incomplete gamma P(a, x) via series / continued fraction.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Lentz continued fraction for Q(a, x)
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_p_value(double statistic, int dof) {
  return 1.0 - gamma_p(static_cast<double>(dof) / 2.0, statistic / 2.0);
}

// Poisson pmf by recurrence.
inline std::vector<double> poisson_pmf(double lambda, std::size_t k_max) {
  std::vector<double> pmf(k_max + 1);
  pmf[0] = std::exp(-lambda);
  for (std::size_t k = 1; k <= k_max; ++k)
    pmf[k] = pmf[k - 1] * lambda / static_cast<double>(k);
  return pmf;
}

// Chi-square GOF of observed integer draws against Poisson(lambda), pooling
// tail bins so every expected count is >= 5. Returns the p-value.
inline double poisson_gof_p_value(const std::vector<std::uint32_t>& draws, double lambda) {
  std::uint32_t max_k = 0;
  for (const auto d : draws) max_k = std::max(max_k, d);
  std::vector<std::uint64_t> observed(max_k + 1, 0);
  for (const auto d : draws) ++observed[d];

  const double n = static_cast<double>(draws.size());
  const auto pmf = poisson_pmf(lambda, max_k);
  double tail = 1.0;
  std::vector<double> expected(max_k + 1);
  for (std::size_t k = 0; k <= max_k; ++k) {
    expected[k] = pmf[k] * n;
    tail -= pmf[k];
  }

  // pool from the right until the pooled bin's expectation is >= 5
  double pool_exp = tail * n;
  double pool_obs = 0.0;
  std::size_t cut = max_k + 1;
  while (cut > 1 && pool_exp < 5.0) {
    --cut;
    pool_exp += expected[cut];
    pool_obs += static_cast<double>(observed[cut]);
  }

  double stat = 0.0;
  int bins = 0;
  for (std::size_t k = 0; k < cut; ++k) {
    if (expected[k] < 5.0) {  // left tail: merge into the next bin
      if (k + 1 < cut) {
        expected[k + 1] += expected[k];
        observed[k + 1] += observed[k];
        continue;
      }
    }
    const double diff = static_cast<double>(observed[k]) - expected[k];
    stat += diff * diff / expected[k];
    ++bins;
  }
  if (pool_exp > 0.0) {
    const double diff = pool_obs - pool_exp;
    stat += diff * diff / pool_exp;
    ++bins;
  }
  return chi_square_p_value(stat, bins - 1);
}

// --- independent configuration-model graph ------------------------------
//
// Plain Poisson stub matching with rejection, used as the reference for the
// full-homophily early subgraph. Returns the largest-component fraction.

inline double poisson_graph_gc_fraction(std::size_t n, double mean_degree,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> poisson(mean_degree);
  std::vector<int> stubs;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = poisson(rng);
    for (int d = 0; d < k; ++d) stubs.push_back(static_cast<int>(i));
  }
  if (stubs.size() % 2 == 1) stubs.push_back(static_cast<int>(
      std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)));
  std::shuffle(stubs.begin(), stubs.end(), rng);

  std::set<std::pair<int, int>> edges;
  for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
    int a = stubs[k], b = stubs[k + 1];
    if (a == b) continue;  // dropping collisions is fine at this scale
    if (a > b) std::swap(a, b);
    edges.insert({a, b});
  }

  // union-find
  std::vector<int> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  std::vector<int> size(n, 1);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : edges) {
    int ra = find(a), rb = find(b);
    if (ra == rb) continue;
    if (size[ra] < size[rb]) std::swap(ra, rb);
    parent[rb] = ra;
    size[ra] += size[rb];
  }
  int best = 1;
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, size[find(static_cast<int>(i))]);
  return static_cast<double>(best) / static_cast<double>(n);
}

// --- independent great-circle distance ----------------------------------
// asin form, distinct from the library's atan2 form.

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kRadius = 6371.0;
  const double p1 = lat1 * kPi / 180.0, p2 = lat2 * kPi / 180.0;
  const double dp = (lat2 - lat1) * kPi / 180.0, dl = (lon2 - lon1) * kPi / 180.0;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kRadius * std::asin(std::min(1.0, std::sqrt(a)));
}

}  // namespace oracle
