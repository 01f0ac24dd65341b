#pragma once

#include <cstdint>

namespace adoptsim {

// splitmix64 finalizer. Bijective, well-mixed; the workhorse for seed
// derivation and counter-based streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Top 53 bits -> uniform double in [0, 1).
inline double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based draw: position `counter` of the stream identified by `seed`.
// Draws are independent of iteration order, so a run consumes the same
// randomness for agent i at week w no matter how the engine schedules work.
// That gives common random numbers across parameter settings sharing a seed.
inline std::uint64_t stream_draw(std::uint64_t seed, std::uint64_t counter) {
  return mix64(mix64(seed) + counter * 0x9e3779b97f4a7c15ULL);
}

// Counter layout for simulation draws: bit 63 tags non-agent draws
// (media shocks), the rest is week << 32 | agent.
inline std::uint64_t agent_week_counter(std::uint32_t week, std::uint32_t agent) {
  return (static_cast<std::uint64_t>(week) << 32) | agent;
}

inline std::uint64_t media_week_counter(std::uint32_t week) {
  return (1ULL << 63) | week;
}

}  // namespace adoptsim
