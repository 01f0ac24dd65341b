#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adoptsim/dynamics.hpp"
#include "adoptsim/errors.hpp"

namespace adoptsim {

inline constexpr double kCriticalMassFraction = 0.135;

enum class AdopterClass : std::uint8_t {
  EarlyAdopter = 0,
  EarlyMajority = 1,
  LateMajority = 2,
  Laggard = 3,
};

inline const char* to_string(AdopterClass c) {
  switch (c) {
    case AdopterClass::EarlyAdopter: return "early_adopter";
    case AdopterClass::EarlyMajority: return "early_majority";
    case AdopterClass::LateMajority: return "late_majority";
    case AdopterClass::Laggard: return "laggard";
  }
  return "?";
}

namespace stats {

inline double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double population_stddev(std::span<const double> xs) {
  const double mu = mean(xs);
  double acc = 0.0;
  for (const double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Nearest-rank quantile of a sorted sample: the ceil(p*n)-th smallest value.
inline double nearest_rank(std::span<const double> sorted, double p) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

inline double quantile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  return nearest_rank(xs, p);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

inline double interquartile_range(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return nearest_rank(xs, 0.75) - nearest_rank(xs, 0.25);
}

}  // namespace stats

// Labels each adoption time against the mean and population standard
// deviation of the whole sample:
//   t <  mu - sd          early adopter
//   mu - sd <= t <= mu    early majority
//   mu < t <= mu + sd     late majority
//   t >  mu + sd          laggard
// With sd = 0 every time equals mu and lands in the early majority.
inline std::vector<AdopterClass> classify_adopters(std::span<const double> times) {
  if (times.size() < 2)
    throw ValidationError("classify_adopters: need at least 2 adoption times");
  const double mu = stats::mean(times);
  const double sd = stats::population_stddev(times);
  std::vector<AdopterClass> out;
  out.reserve(times.size());
  for (const double t : times) {
    if (t < mu - sd) out.push_back(AdopterClass::EarlyAdopter);
    else if (t <= mu) out.push_back(AdopterClass::EarlyMajority);
    else if (t <= mu + sd) out.push_back(AdopterClass::LateMajority);
    else out.push_back(AdopterClass::Laggard);
  }
  return out;
}

// Class shares of one city's adopters; absent when the city has none.
struct CityComposition {
  bool has_adopters = false;
  std::array<double, 4> fraction{0.0, 0.0, 0.0, 0.0};  // indexed by AdopterClass
};

// Per-city adopter-class composition. Classes are assigned on the global
// adoption-time distribution; fractions are over each city's own adopters
// and sum to 1 within 1e-9.
inline std::vector<CityComposition> city_composition(std::span<const std::uint32_t> city_row,
                                                     std::span<const std::int32_t> adoption_week,
                                                     std::size_t n_cities) {
  if (city_row.size() != adoption_week.size())
    throw ValidationError("city_composition: per-agent arrays disagree in length");

  std::vector<double> times;
  std::vector<std::size_t> adopter_city;
  for (std::size_t a = 0; a < adoption_week.size(); ++a) {
    if (adoption_week[a] < 0) continue;
    times.push_back(static_cast<double>(adoption_week[a]));
    adopter_city.push_back(city_row[a]);
  }
  const auto classes = classify_adopters(times);

  std::vector<CityComposition> out(n_cities);
  std::vector<std::size_t> counts(n_cities, 0);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const std::size_t c = adopter_city[k];
    out[c].has_adopters = true;
    out[c].fraction[static_cast<std::size_t>(classes[k])] += 1.0;
    ++counts[c];
  }
  for (std::size_t c = 0; c < n_cities; ++c) {
    if (!out[c].has_adopters) continue;
    for (double& f : out[c].fraction) f /= static_cast<double>(counts[c]);
  }
  return out;
}

// First week at which a non-decreasing cumulative series reaches
// fraction * final_count. The threshold comparison carries a small epsilon
// so exact-integer thresholds are not missed to floating-point noise.
inline std::uint32_t critical_mass_time(std::span<const std::uint64_t> cumulative,
                                        std::uint64_t final_count,
                                        double fraction = kCriticalMassFraction) {
  if (final_count < 1)
    throw ValidationError("critical_mass_time: final_count must be >= 1");
  if (cumulative.empty() || cumulative.back() != final_count)
    throw ValidationError("critical_mass_time: series must end at final_count");
  const double threshold = fraction * static_cast<double>(final_count);
  for (std::size_t w = 0; w < cumulative.size(); ++w) {
    if (static_cast<double>(cumulative[w]) + 1e-9 >= threshold)
      return static_cast<std::uint32_t>(w);
  }
  throw ValidationError("critical_mass_time: threshold never reached");  // unreachable
}

// Per-week ensemble mean and central nearest-rank intervals of the
// cumulative adoption curves.
struct EnsembleBands {
  std::vector<double> mean;
  std::vector<double> lo75, hi75;
  std::vector<double> lo95, hi95;
  std::size_t runs_used = 0;
};

inline EnsembleBands ensemble_bands(const ReplicationEnsemble& ens) {
  std::vector<const AdoptionTrace*> live;
  for (std::size_t i = 0; i < ens.size(); ++i)
    if (!ens.failed[i]) live.push_back(&ens.traces[i]);
  if (live.size() < 2)
    throw ValidationError("ensemble_bands: need at least 2 successful traces");

  const std::size_t weeks = live.front()->new_adopters_by_week.size();
  for (const auto* t : live)
    if (t->new_adopters_by_week.size() != weeks)
      throw ValidationError("ensemble_bands: traces disagree on horizon");

  EnsembleBands bands;
  bands.runs_used = live.size();
  bands.mean.resize(weeks);
  bands.lo75.resize(weeks);
  bands.hi75.resize(weeks);
  bands.lo95.resize(weeks);
  bands.hi95.resize(weeks);

  std::vector<std::vector<std::uint64_t>> cums;
  cums.reserve(live.size());
  for (const auto* t : live) cums.push_back(t->cumulative());

  std::vector<double> column(live.size());
  for (std::size_t w = 0; w < weeks; ++w) {
    for (std::size_t i = 0; i < live.size(); ++i)
      column[i] = static_cast<double>(cums[i][w]);
    std::sort(column.begin(), column.end());
    bands.mean[w] = stats::mean(column);
    bands.lo75[w] = stats::nearest_rank(column, 0.125);
    bands.hi75[w] = stats::nearest_rank(column, 0.875);
    bands.lo95[w] = stats::nearest_rank(column, 0.025);
    bands.hi95[w] = stats::nearest_rank(column, 0.975);
  }
  return bands;
}

// Deterministic mean-field companion of the engine's weekly update:
//   I(t+1) = I(t) + (N - I(t)) * (1 - (1-beta)^(k * I(t)/N)).
// Returns the cumulative curve including week 0.
inline std::vector<double> si_meanfield(double beta, double mean_degree, std::uint64_t N,
                                        std::uint64_t I0, std::uint32_t T) {
  if (beta < 0.0 || beta > 1.0) throw ValidationError("si_meanfield: beta must be in [0,1]");
  if (N < 1 || I0 > N) throw ValidationError("si_meanfield: need 0 <= I0 <= N, N >= 1");
  std::vector<double> curve;
  curve.reserve(T + 1);
  double I = static_cast<double>(I0);
  const double n = static_cast<double>(N);
  curve.push_back(I);
  for (std::uint32_t t = 0; t < T; ++t) {
    const double p = 1.0 - std::pow(1.0 - beta, mean_degree * I / n);
    I += (n - I) * p;
    if (I > n) I = n;
    curve.push_back(I);
  }
  return curve;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("spearman: need two equal-length samples of size >= 2");
  const std::size_t n = x.size();

  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return v[a] < v[b];
    });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = stats::mean(rx);
  const double my = stats::mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("spearman: a sample is constant, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace adoptsim
