#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "adoptsim/csv.hpp"
#include "adoptsim/errors.hpp"

namespace adoptsim {

inline constexpr double kEarthRadiusKm = 6371.0;

// One geographic meta-population. `frac_early` is the share of its agents
// that are early adopters.
struct City {
  std::int64_t id = 0;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t n_agents = 0;
  double frac_early = 0.0;
};

class CityTable {
 public:
  CityTable() = default;
  explicit CityTable(std::vector<City> rows) : rows_(std::move(rows)) { validate(); }

  const std::vector<City>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const City& operator[](std::size_t row) const { return rows_[row]; }

  std::int64_t total_agents() const {
    std::int64_t n = 0;
    for (const auto& c : rows_) n += c.n_agents;
    return n;
  }

  // Row index for a city id; throws if the id is unknown.
  std::size_t row_of(std::int64_t city_id) const {
    auto it = row_by_id_.find(city_id);
    if (it == row_by_id_.end())
      throw ValidationError("unknown city id " + std::to_string(city_id));
    return it->second;
  }

  bool has_id(std::int64_t city_id) const { return row_by_id_.count(city_id) != 0; }

 private:
  void validate() {
    row_by_id_.clear();
    row_by_id_.reserve(rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const City& c = rows_[r];
      const std::string where = "city row " + std::to_string(r) + " (id " + std::to_string(c.id) + ")";
      if (c.n_agents < 0) throw ValidationError(where + ": n_agents must be >= 0");
      if (c.frac_early < 0.0 || c.frac_early > 1.0)
        throw ValidationError(where + ": frac_early must be in [0,1], got " + std::to_string(c.frac_early));
      if (c.lat < -90.0 || c.lat > 90.0)
        throw ValidationError(where + ": lat must be in [-90,90]");
      if (c.lon < -180.0 || c.lon > 180.0)
        throw ValidationError(where + ": lon must be in [-180,180]");
      if (!row_by_id_.emplace(c.id, r).second)
        throw ValidationError(where + ": duplicate city id");
    }
  }

  std::vector<City> rows_;
  std::unordered_map<std::int64_t, std::size_t> row_by_id_;
};

// Loads the `id,name,lat,lon,n_agents,frac_early` table. Row order is
// preserved; every malformed row is reported with its 1-based line number.
inline CityTable load_cities(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ValidationError(path + ": empty file, header required");

  static constexpr const char* kHeader = "id,name,lat,lon,n_agents,frac_early";
  {
    auto head = csv::split_line(lines[0]);
    auto expect = csv::split_line(kHeader);
    if (head != expect)
      throw ValidationError(path + " line 1: header must be '" + std::string(kHeader) + "'");
  }

  std::vector<City> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const std::string where = path + " line " + std::to_string(i + 1);
    auto fields = csv::split_line(lines[i]);
    if (fields.size() != 6)
      throw ValidationError(where + ": expected 6 fields, got " + std::to_string(fields.size()));
    City c;
    c.id = csv::parse_int(fields[0], where + ", column id");
    c.name = std::string(csv::trim(fields[1]));
    c.lat = csv::parse_double(fields[2], where + ", column lat");
    c.lon = csv::parse_double(fields[3], where + ", column lon");
    c.n_agents = csv::parse_int(fields[4], where + ", column n_agents");
    c.frac_early = csv::parse_double(fields[5], where + ", column frac_early");
    rows.push_back(std::move(c));
  }

  try {
    return CityTable(std::move(rows));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Great-circle distance in km between two cities (haversine, mean Earth
// radius). Symmetric, non-negative, zero for identical coordinates.
inline double distance_km(const City& a, const City& b) {
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double sin_lat = std::sin(dlat / 2.0);
  const double sin_lon = std::sin(dlon / 2.0);
  double h = sin_lat * sin_lat + std::cos(lat1) * std::cos(lat2) * sin_lon * sin_lon;
  h = std::clamp(h, 0.0, 1.0);  // guard rounding before the sqrt
  return 2.0 * kEarthRadiusKm * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

enum class AdopterType : std::uint8_t { Regular = 0, Early = 1 };

// Agents of one city occupy a contiguous id block; block order follows the
// table's row order.
struct AgentPopulation {
  std::vector<std::uint32_t> city_row;     // agent id -> city row
  std::vector<AdopterType> type;           // agent id -> adopter type
  std::vector<std::uint32_t> city_offset;  // city row -> first agent id; size L+1
  std::vector<std::int64_t> city_id;       // city row -> id from the source table

  std::size_t size() const { return city_row.size(); }
  std::size_t city_count() const { return city_id.size(); }

  std::size_t row_of_city_id(std::int64_t id) const {
    for (std::size_t r = 0; r < city_id.size(); ++r)
      if (city_id[r] == id) return r;
    throw ValidationError("unknown city id " + std::to_string(id));
  }

  std::size_t early_count() const {
    return static_cast<std::size_t>(
        std::count(type.begin(), type.end(), AdopterType::Early));
  }

  std::uint32_t city_begin(std::size_t row) const { return city_offset[row]; }
  std::uint32_t city_end(std::size_t row) const { return city_offset[row + 1]; }
};

inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

// Places agents into cities. Each city receives exactly n_agents agents of
// which round(frac_early * n_agents) are Early (half-up); which ones are
// Early is shuffled by the seed.
inline AgentPopulation place_agents(const CityTable& cities, std::uint64_t rng_seed) {
  const std::int64_t total = cities.total_agents();
  if (total < 1) throw ValidationError("place_agents: total agent count must be >= 1");

  AgentPopulation pop;
  pop.city_row.resize(static_cast<std::size_t>(total));
  pop.type.assign(static_cast<std::size_t>(total), AdopterType::Regular);
  pop.city_offset.resize(cities.size() + 1);
  pop.city_id.reserve(cities.size());
  for (const auto& c : cities.rows()) pop.city_id.push_back(c.id);

  std::mt19937_64 rng(rng_seed);
  std::uint32_t next_id = 0;
  std::vector<std::uint32_t> local;
  for (std::size_t r = 0; r < cities.size(); ++r) {
    pop.city_offset[r] = next_id;
    const City& c = cities[r];
    const auto n = static_cast<std::uint32_t>(c.n_agents);
    const auto n_early = static_cast<std::uint32_t>(
        std::min<std::int64_t>(c.n_agents, round_half_up(c.frac_early * static_cast<double>(c.n_agents))));

    local.resize(n);
    std::iota(local.begin(), local.end(), next_id);
    std::shuffle(local.begin(), local.end(), rng);
    for (std::uint32_t k = 0; k < n; ++k) {
      pop.city_row[local[k]] = static_cast<std::uint32_t>(r);
      pop.type[local[k]] = k < n_early ? AdopterType::Early : AdopterType::Regular;
    }
    next_id += n;
  }
  pop.city_offset[cities.size()] = next_id;
  return pop;
}

// --- Synthetic tables for experiments ---------------------------------
// Coordinates are sampled uniformly in a continental-US-like box so the
// inter-city distance distribution spans the kernel's working range.

namespace detail {
inline City synth_city(std::size_t row, double lat, double lon,
                       std::int64_t agents, double frac) {
  City c;
  c.id = static_cast<std::int64_t>(row);
  c.name = "city_" + std::to_string(row);
  c.lat = lat;
  c.lon = lon;
  c.n_agents = agents;
  c.frac_early = frac;
  return c;
}
}  // namespace detail

inline CityTable make_uniform_cities(std::size_t n_cities, std::int64_t agents_per_city,
                                     double frac_early, std::uint64_t coord_seed) {
  std::mt19937_64 rng(coord_seed);
  std::uniform_real_distribution<double> lat(25.0, 49.0);
  std::uniform_real_distribution<double> lon(-124.0, -67.0);
  std::vector<City> rows;
  rows.reserve(n_cities);
  for (std::size_t r = 0; r < n_cities; ++r)
    rows.push_back(detail::synth_city(r, lat(rng), lon(rng), agents_per_city, frac_early));
  return CityTable(std::move(rows));
}

// frac_early ramps from lo to hi across rows as lo + (hi-lo) * (r/(L-1))^shape.
// shape > 1 concentrates early adopters in the last few rows.
inline CityTable make_gradient_cities(std::size_t n_cities, std::int64_t agents_per_city,
                                      double frac_lo, double frac_hi, double shape,
                                      std::uint64_t coord_seed) {
  if (n_cities < 2) throw ValidationError("make_gradient_cities: need at least 2 cities");
  std::mt19937_64 rng(coord_seed);
  std::uniform_real_distribution<double> lat(25.0, 49.0);
  std::uniform_real_distribution<double> lon(-124.0, -67.0);
  std::vector<City> rows;
  rows.reserve(n_cities);
  for (std::size_t r = 0; r < n_cities; ++r) {
    const double u = static_cast<double>(r) / static_cast<double>(n_cities - 1);
    const double frac = frac_lo + (frac_hi - frac_lo) * std::pow(u, shape);
    rows.push_back(detail::synth_city(r, lat(rng), lon(rng), agents_per_city, frac));
  }
  return CityTable(std::move(rows));
}

}  // namespace adoptsim
