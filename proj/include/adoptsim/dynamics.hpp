#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adoptsim/errors.hpp"
#include "adoptsim/geo.hpp"
#include "adoptsim/media.hpp"
#include "adoptsim/netgen.hpp"
#include "adoptsim/parallel.hpp"
#include "adoptsim/rng.hpp"

namespace adoptsim {

// Who starts infected: either a fraction of the whole population or explicit
// per-city counts. City seeds take that city's early adopters first.
struct SeedSpec {
  std::optional<double> fraction;
  std::vector<std::pair<std::int64_t, std::uint32_t>> city_counts;  // (city id, count)

  static SeedSpec fraction_of(double f) {
    SeedSpec s;
    s.fraction = f;
    return s;
  }
  static SeedSpec in_city(std::int64_t city_id, std::uint32_t count) {
    SeedSpec s;
    s.city_counts.emplace_back(city_id, count);
    return s;
  }

  void validate() const {
    if (fraction.has_value() && !city_counts.empty())
      throw ValidationError("seeding: fraction and city counts are mutually exclusive");
    if (!fraction.has_value() && city_counts.empty())
      throw ValidationError("seeding: either a fraction or at least one city count is required");
    if (fraction.has_value() && (*fraction < 0.0 || *fraction > 1.0))
      throw ValidationError("seeding: fraction must be in [0,1]");
  }

  bool operator==(const SeedSpec&) const = default;
};

struct SimParams {
  double beta_r = 0.05;    // weekly per-contact transmission, regular adopters
  double ratio_R = 1.0;    // beta_e / beta_r
  double alpha = 0.0;      // media susceptibility
  std::uint32_t horizon_T = 1;
  SeedSpec seeding;
  MediaMode media_mode = MediaMode::None;
  double shock_scale = 0.0;
  double media_activation_fraction = 0.135;
  double media_exponent = 1.0;
  std::uint64_t rng_seed = 0;

  double beta_e() const { return ratio_R * beta_r; }

  MediaParams media() const {
    MediaParams m;
    m.mode = media_mode;
    m.alpha = alpha;
    m.shock_scale = shock_scale;
    m.activation_fraction = media_activation_fraction;
    m.exponent = media_exponent;
    return m;
  }

  void validate() const {
    if (beta_r < 0.0 || beta_r > 1.0) throw ValidationError("sim.beta_r must be in [0,1]");
    if (ratio_R < 1.0) throw ValidationError("sim.ratio_R must be >= 1");
    if (beta_e() > 1.0)
      throw ValidationError("sim.ratio_R * sim.beta_r exceeds 1; rejected rather than clipped");
    if (alpha < 0.0 || alpha > 1.0) throw ValidationError("sim.alpha must be in [0,1]");
    if (horizon_T < 1) throw ValidationError("sim.horizon_T must be >= 1");
    seeding.validate();
    media().validate();
  }
};

// Live state of one run. Infection is irreversible; adoption_week is set
// exactly when an agent becomes infected and never changes afterwards.
struct SimState {
  std::uint32_t week = 0;
  std::vector<std::uint8_t> infected;
  std::vector<std::int32_t> adoption_week;  // -1 until adoption
  std::uint64_t infected_count = 0;
  double media_volume = 0.0;
  std::uint64_t run_seed = 0;
  bool cm_latched = false;

  // engine indexes, maintained incrementally
  std::vector<std::uint32_t> infected_neighbors;  // per agent
  std::vector<std::uint32_t> susceptible;         // ids of susceptible agents
  std::vector<std::uint32_t> contacted;           // susceptibles with >= 1 infected neighbor
  std::vector<std::uint32_t> newly;               // adopters of the last step

  static SimState fresh(std::size_t n, std::uint64_t run_seed) {
    SimState s;
    s.infected.assign(n, 0);
    s.adoption_week.assign(n, -1);
    s.infected_neighbors.assign(n, 0);
    s.run_seed = run_seed;
    return s;
  }

  void check_conservation() const {
    if (infected_count + susceptible.size() != infected.size())
      throw std::logic_error("state invariant violated: S + I != N");
  }
};

// Per-week output of one run. new_adopters_by_week[0] counts the seeds.
struct AdoptionTrace {
  std::uint32_t horizon_T = 0;
  std::uint32_t n_cities = 0;
  std::uint64_t population = 0;
  std::vector<std::uint32_t> new_adopters_by_week;       // length T+1
  std::vector<std::uint32_t> new_adopters_by_city_week;  // n_cities x (T+1), optional
  std::vector<double> media_series;                      // length T+1, [0] = 0
  std::vector<std::int32_t> adoption_week;               // per agent, optional

  bool has_city_series() const { return !new_adopters_by_city_week.empty(); }

  std::uint32_t city_new(std::size_t city, std::size_t week) const {
    return new_adopters_by_city_week[city * (horizon_T + 1) + week];
  }

  std::vector<std::uint64_t> cumulative() const {
    std::vector<std::uint64_t> cum(new_adopters_by_week.size());
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < cum.size(); ++w) {
      acc += new_adopters_by_week[w];
      cum[w] = acc;
    }
    return cum;
  }

  std::vector<std::uint64_t> city_cumulative(std::size_t city) const {
    std::vector<std::uint64_t> cum(horizon_T + 1);
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w <= horizon_T; ++w) {
      acc += city_new(city, w);
      cum[w] = acc;
    }
    return cum;
  }

  std::uint64_t final_cumulative() const {
    std::uint64_t acc = 0;
    for (const auto v : new_adopters_by_week) acc += v;
    return acc;
  }
};

struct RunOptions {
  bool record_city_series = true;
  bool record_adoption_weeks = true;
};

namespace detail {

inline void post_seed_index(SimState& state, const Network& net) {
  const std::size_t n = net.node_count();
  state.susceptible.clear();
  state.susceptible.reserve(n - static_cast<std::size_t>(state.infected_count));
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) {
    if (!state.infected[i]) {
      state.susceptible.push_back(i);
    } else {
      for (const std::uint32_t v : net.neighbors(i)) ++state.infected_neighbors[v];
    }
  }
  state.contacted.clear();
  for (const std::uint32_t i : state.susceptible)
    if (state.infected_neighbors[i] > 0) state.contacted.push_back(i);
}

inline void mark_seeded(SimState& state, std::span<const std::uint32_t> agents) {
  for (const std::uint32_t a : agents) {
    state.infected[a] = 1;
    state.adoption_week[a] = 0;
  }
  state.infected_count += agents.size();
}

}  // namespace detail

// Marks the selected agents infected at week 0 and builds the engine
// indexes. Precondition: fresh state, counts within each city's supply.
inline void seed_infection(SimState& state, const Network& net, const SeedSpec& spec,
                           std::mt19937_64& rng) {
  spec.validate();
  const std::size_t n = net.node_count();
  const AgentPopulation& pop = net.agents;

  if (spec.fraction.has_value()) {
    const auto want = static_cast<std::uint64_t>(
        round_half_up(*spec.fraction * static_cast<double>(n)));
    std::vector<std::uint32_t> ids(n);
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i) ids[i] = i;
    for (std::uint64_t k = 0; k < want; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(ids[k], ids[pick(rng)]);
    }
    detail::mark_seeded(state, std::span(ids.data(), want));
  } else {
    std::vector<std::uint32_t> chosen;
    for (const auto& [city_id, count] : spec.city_counts) {
      const std::size_t row = pop.row_of_city_id(city_id);
      std::vector<std::uint32_t> early, regular;
      for (std::uint32_t a = pop.city_begin(row); a < pop.city_end(row); ++a) {
        if (state.infected[a]) continue;
        (pop.type[a] == AdopterType::Early ? early : regular).push_back(a);
      }
      if (count > early.size() + regular.size())
        throw ValidationError("seeding: city " + std::to_string(city_id) + " has only " +
                              std::to_string(early.size() + regular.size()) +
                              " susceptible agents, " + std::to_string(count) + " requested");
      std::shuffle(early.begin(), early.end(), rng);
      std::shuffle(regular.begin(), regular.end(), rng);
      chosen.clear();
      for (std::uint32_t k = 0; k < count; ++k)
        chosen.push_back(k < early.size() ? early[k]
                                          : regular[k - static_cast<std::uint32_t>(early.size())]);
      detail::mark_seeded(state, chosen);
    }
  }
  detail::post_seed_index(state, net);
  state.check_conservation();
}

// One synchronous week. A susceptible agent with m infected neighbors stays
// susceptible with probability (1-beta_type)^m * (1 - alpha*M); this week's
// adopters transmit from next week only. Returns the new adopters (a view
// into the state, valid until the next step).
inline std::span<const std::uint32_t> step(SimState& state, const Network& net,
                                           const SimParams& params, double media_volume) {
  if (media_volume < 0.0 || media_volume > 1.0)
    throw std::logic_error("step: media volume out of [0,1]");
  const double media_infect = media_prob(params.alpha, media_volume);
  const double keep_media = 1.0 - media_infect;
  const std::uint32_t week = state.week + 1;

  // (1-beta)^m lookups, grown on demand
  const double kr = 1.0 - params.beta_r;
  const double ke = 1.0 - params.beta_e();
  std::vector<double> keep_r{1.0}, keep_e{1.0};
  auto keep_wom = [&](AdopterType t, std::uint32_t m) {
    auto& tab = (t == AdopterType::Early) ? keep_e : keep_r;
    const double base = (t == AdopterType::Early) ? ke : kr;
    while (tab.size() <= m) tab.push_back(tab.back() * base);
    return tab[m];
  };

  auto& newly = state.newly;
  newly.clear();

  auto consider = [&](std::uint32_t i) {
    const std::uint32_t m = state.infected_neighbors[i];
    if (m == 0 && media_infect == 0.0) return;
    const double p_adopt = 1.0 - keep_wom(net.agents.type[i], m) * keep_media;
    if (p_adopt <= 0.0) return;
    const double u = unit_uniform(stream_draw(state.run_seed, agent_week_counter(week, i)));
    if (u < p_adopt) newly.push_back(i);
  };

  if (media_infect > 0.0) {
    for (const std::uint32_t i : state.susceptible) consider(i);
  } else {
    // Only contacted agents can adopt; compact out stale entries as we scan.
    std::size_t keep = 0;
    for (std::size_t k = 0; k < state.contacted.size(); ++k) {
      const std::uint32_t i = state.contacted[k];
      if (state.infected[i]) continue;
      state.contacted[keep++] = i;
      consider(i);
    }
    state.contacted.resize(keep);
  }

  // Commit after the scan: synchronous update.
  for (const std::uint32_t i : newly) {
    state.infected[i] = 1;
    state.adoption_week[i] = static_cast<std::int32_t>(week);
  }
  state.infected_count += newly.size();
  if (!newly.empty()) {
    std::size_t keep = 0;
    for (std::size_t k = 0; k < state.susceptible.size(); ++k) {
      const std::uint32_t i = state.susceptible[k];
      if (!state.infected[i]) state.susceptible[keep++] = i;
    }
    state.susceptible.resize(keep);
    for (const std::uint32_t i : newly) {
      for (const std::uint32_t v : net.neighbors(i)) {
        if (state.infected_neighbors[v]++ == 0 && !state.infected[v])
          state.contacted.push_back(v);
      }
    }
  }
  state.week = week;
  state.media_volume = media_volume;
  state.check_conservation();
  return newly;
}

// Seeds, then runs horizon_T synchronous weeks, resolving the media volume
// each week from the configured mode (None -> 0). Deterministic given
// params.rng_seed.
inline AdoptionTrace run(const Network& net, const SimParams& params,
                         std::span<const double> media_input = {},
                         const RunOptions& options = {}) {
  params.validate();
  if (params.media_mode == MediaMode::Exogenous) {
    if (media_input.size() < params.horizon_T)
      throw ValidationError("run: exogenous media series shorter than horizon_T (" +
                            std::to_string(media_input.size()) + " < " +
                            std::to_string(params.horizon_T) + ")");
  } else if (!media_input.empty()) {
    throw ValidationError("run: media series given but media_mode is not exogenous");
  }

  const std::size_t n = net.node_count();
  const std::size_t n_cities = net.agents.city_count();
  const std::uint32_t T = params.horizon_T;

  SimState state = SimState::fresh(n, params.rng_seed);
  std::mt19937_64 seed_rng(mix64(params.rng_seed) ^ 0x5eedULL);
  seed_infection(state, net, params.seeding, seed_rng);

  AdoptionTrace trace;
  trace.horizon_T = T;
  trace.n_cities = static_cast<std::uint32_t>(n_cities);
  trace.population = n;
  trace.new_adopters_by_week.assign(T + 1, 0);
  trace.media_series.assign(T + 1, 0.0);
  if (options.record_city_series)
    trace.new_adopters_by_city_week.assign(n_cities * (T + 1), 0);

  auto record = [&](std::uint32_t week, std::span<const std::uint32_t> adopters) {
    trace.new_adopters_by_week[week] = static_cast<std::uint32_t>(adopters.size());
    if (options.record_city_series) {
      for (const std::uint32_t a : adopters)
        ++trace.new_adopters_by_city_week[net.agents.city_row[a] * (T + 1) + week];
    }
  };

  {
    // seeds carry adoption_week == 0
    std::vector<std::uint32_t> seeds;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i)
      if (state.infected[i]) seeds.push_back(i);
    record(0, seeds);
  }

  const double activation_threshold =
      params.media_activation_fraction * static_cast<double>(n);
  for (std::uint32_t t = 0; t < T; ++t) {
    double volume = 0.0;
    switch (params.media_mode) {
      case MediaMode::None:
        break;
      case MediaMode::Exogenous:
        volume = exogenous_volume(media_input, t);
        break;
      case MediaMode::Endogenous: {
        if (!state.cm_latched &&
            static_cast<double>(state.infected_count) + 1e-9 >= activation_threshold)
          state.cm_latched = true;
        const double u =
            unit_uniform(stream_draw(state.run_seed, media_week_counter(t + 1)));
        volume = endogenous_volume(state.infected_count, n, state.cm_latched,
                                   params.shock_scale, u, params.media_exponent);
        break;
      }
    }
    if (volume < 0.0 || volume > 1.0)
      throw std::logic_error("run: media volume out of [0,1]");
    const auto adopters = step(state, net, params, volume);
    record(t + 1, adopters);
    trace.media_series[t + 1] = volume;
  }

  if (options.record_adoption_weeks) trace.adoption_week = state.adoption_week;
  return trace;
}

// Either a fixed network shared by every run or a recipe for a fresh network
// per run.
struct NetworkRecipe {
  const CityTable* cities = nullptr;
  NetGenParams params;
};

struct ReplicationEnsemble {
  std::vector<AdoptionTrace> traces;
  std::vector<std::uint8_t> failed;
  std::vector<std::string> failure_messages;  // empty string for healthy runs
  std::size_t failure_count = 0;

  std::size_t size() const { return traces.size(); }
};

// n_runs independent runs with seeds params.rng_seed + run_index. With a
// recipe, each run also gets a fresh network (netgen seed + run index);
// otherwise the fixed network is shared read-only. Per-run failures are
// recorded, not fatal.
inline ReplicationEnsemble run_replications(const Network& net, const SimParams& params,
                                            std::size_t n_runs,
                                            const RunOptions& options = {},
                                            unsigned jobs = 1) {
  if (n_runs < 1) throw ValidationError("run_replications: n_runs must be >= 1");
  ReplicationEnsemble ens;
  ens.traces.resize(n_runs);
  ens.failed.assign(n_runs, 0);
  ens.failure_messages.assign(n_runs, "");
  parallel_for(n_runs, jobs, [&](std::size_t i) {
    SimParams p = params;
    p.rng_seed = params.rng_seed + i;
    try {
      ens.traces[i] = run(net, p, {}, options);
    } catch (const std::exception& e) {
      ens.failed[i] = 1;
      ens.failure_messages[i] = e.what();
    }
  });
  for (const auto f : ens.failed) ens.failure_count += f;
  return ens;
}

inline ReplicationEnsemble run_replications(const NetworkRecipe& recipe,
                                            const SimParams& params, std::size_t n_runs,
                                            const RunOptions& options = {},
                                            unsigned jobs = 1) {
  if (recipe.cities == nullptr)
    throw ValidationError("run_replications: recipe needs a city table");
  if (n_runs < 1) throw ValidationError("run_replications: n_runs must be >= 1");
  const GeoKernel kernel =
      GeoKernel::build(*recipe.cities, recipe.params.gamma, recipe.params.nu_km);
  ReplicationEnsemble ens;
  ens.traces.resize(n_runs);
  ens.failed.assign(n_runs, 0);
  ens.failure_messages.assign(n_runs, "");
  parallel_for(n_runs, jobs, [&](std::size_t i) {
    try {
      NetGenParams np = recipe.params;
      np.rng_seed = recipe.params.rng_seed + i;
      const AgentPopulation pop = place_agents(*recipe.cities, np.rng_seed);
      const Network net = build_network(pop, *recipe.cities, np,
                                        np.geo_biased ? &kernel : nullptr);
      SimParams p = params;
      p.rng_seed = params.rng_seed + i;
      ens.traces[i] = run(net, p, {}, options);
    } catch (const std::exception& e) {
      ens.failed[i] = 1;
      ens.failure_messages[i] = e.what();
    }
  });
  for (const auto f : ens.failed) ens.failure_count += f;
  return ens;
}

}  // namespace adoptsim
