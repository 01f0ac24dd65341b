#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adoptsim/errors.hpp"

namespace adoptsim {

enum class MediaMode : std::uint8_t { None = 0, Exogenous = 1, Endogenous = 2 };

inline const char* to_string(MediaMode m) {
  switch (m) {
    case MediaMode::None: return "none";
    case MediaMode::Exogenous: return "exogenous";
    case MediaMode::Endogenous: return "endogenous";
  }
  return "?";
}

struct MediaParams {
  MediaMode mode = MediaMode::None;
  double alpha = 0.0;                 // media susceptibility
  double shock_scale = 0.0;           // shock half-width relative to the base volume
  double activation_fraction = 0.135; // volume stays 0 until this adoption share; 0 disables gating
  double exponent = 1.0;              // volume = (I/N)^exponent; 1 is the linear baseline

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ValidationError("media.alpha must be in [0,1]");
    if (shock_scale < 0.0) throw ValidationError("media.shock_scale must be >= 0");
    if (activation_fraction < 0.0 || activation_fraction > 1.0)
      throw ValidationError("media.activation_fraction must be in [0,1]");
    if (!(exponent > 0.0)) throw ValidationError("media.exponent must be > 0");
  }
};

// Probability that the weekly broadcast converts one susceptible agent.
inline double media_prob(double alpha, double volume) {
  return alpha * volume;
}

// Weekly media volume when the media responds to last week's adopters.
// Zero until the cumulative critical mass has been reached; afterwards
// base = (I_prev/N)^exponent plus a symmetric relative shock of half-width
// shock_scale, clamped into [0,1]. `shock_unit` is a uniform draw in [0,1).
inline double endogenous_volume(std::uint64_t infected_prev, std::uint64_t population,
                                bool cumulative_cm_reached, double shock_scale,
                                double shock_unit, double exponent = 1.0) {
  if (population == 0) throw ValidationError("endogenous_volume: population must be > 0");
  if (infected_prev > population)
    throw ValidationError("endogenous_volume: infected count exceeds population");
  if (!cumulative_cm_reached) return 0.0;
  const double base =
      std::pow(static_cast<double>(infected_prev) / static_cast<double>(population), exponent);
  const double shock = base * (2.0 * shock_unit - 1.0) * shock_scale;
  return std::clamp(base + shock, 0.0, 1.0);
}

// Week t of a pre-normalized series.
inline double exogenous_volume(std::span<const double> series, std::size_t t) {
  if (t >= series.size())
    throw ValidationError("exogenous_volume: week " + std::to_string(t) +
                          " out of range (series length " + std::to_string(series.size()) + ")");
  return series[t];
}

}  // namespace adoptsim
