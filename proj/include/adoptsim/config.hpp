#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adoptsim/csv.hpp"
#include "adoptsim/dynamics.hpp"
#include "adoptsim/errors.hpp"
#include "adoptsim/geo.hpp"
#include "adoptsim/media.hpp"
#include "adoptsim/netgen.hpp"

namespace adoptsim {

enum class Scenario : std::uint8_t {
  ClassicSI,
  GeoHomophily,
  ExogenousMedia,
  EndogenousMedia,
  ComponentCurve,
};

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::ClassicSI: return "classic_si";
    case Scenario::GeoHomophily: return "geo_homophily";
    case Scenario::ExogenousMedia: return "exogenous_media";
    case Scenario::EndogenousMedia: return "endogenous_media";
    case Scenario::ComponentCurve: return "component_curve";
  }
  return "?";
}

inline Scenario scenario_from_string(std::string_view s, const std::string& where) {
  if (s == "classic_si") return Scenario::ClassicSI;
  if (s == "geo_homophily") return Scenario::GeoHomophily;
  if (s == "exogenous_media") return Scenario::ExogenousMedia;
  if (s == "endogenous_media") return Scenario::EndogenousMedia;
  if (s == "component_curve") return Scenario::ComponentCurve;
  throw ValidationError(where + ": unknown scenario '" + std::string(s) + "'");
}

// Where the agents live: an on-disk table or a synthetic one.
struct CitySpec {
  std::string path;                  // non-empty -> load from file
  std::string synthetic = "uniform"; // uniform | gradient
  std::uint64_t n_cities = 408;
  std::int64_t agents_per_city = 1000;
  double frac_early = 0.1;       // uniform
  double frac_early_min = 0.02;  // gradient
  double frac_early_max = 0.30;
  double frac_shape = 1.0;
  std::uint64_t coord_seed = 12345;

  bool operator==(const CitySpec&) const = default;

  CityTable realize() const {
    if (!path.empty()) return load_cities(path);
    if (synthetic == "uniform")
      return make_uniform_cities(n_cities, agents_per_city, frac_early, coord_seed);
    if (synthetic == "gradient")
      return make_gradient_cities(n_cities, agents_per_city, frac_early_min, frac_early_max,
                                  frac_shape, coord_seed);
    throw ValidationError("cities.synthetic: unknown kind '" + synthetic + "'");
  }
};

struct CurveSpec {
  std::vector<double> h_grid;
  std::uint64_t n_networks = 100;

  bool operator==(const CurveSpec&) const = default;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::ClassicSI;
  CitySpec cities;
  NetGenParams netgen;
  SimParams sim;
  CurveSpec curve;
  std::string media_path;  // exogenous input series
  std::uint64_t n_runs = 200;
  std::string output_dir = "out";
  bool output_dir_provided = false;  // config gave output_dir explicitly
  bool fresh_network_per_run = false;
  unsigned jobs = 0;  // 0 = all processors
  std::uint64_t root_seed = 1;
  std::string seed_city = "auto";  // "auto" or a city id
  std::uint32_t seed_count = 10;
  std::optional<double> seed_fraction;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

struct IniEntry {
  std::string value;
  std::size_t line = 0;
  mutable bool consumed = false;
};

class IniFile {
 public:
  IniFile(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = csv::trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ValidationError(source_ + " line " + std::to_string(line_no) +
                                ": malformed section header");
        section = std::string(csv::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ValidationError(source_ + " line " + std::to_string(line_no) +
                              ": expected key = value");
      std::string key = std::string(csv::trim(line.substr(0, eq)));
      if (section.empty())
        throw ValidationError(source_ + " line " + std::to_string(line_no) +
                              ": key '" + key + "' outside any [section]");
      const std::string full = section + "." + key;
      IniEntry entry{std::string(csv::trim(line.substr(eq + 1))), line_no, false};
      if (!entries_.emplace(full, std::move(entry)).second)
        throw ValidationError(source_ + " line " + std::to_string(line_no) +
                              ": duplicate key " + full);
    }
  }

  const std::string& source() const { return source_; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.consumed = true;
    return it->second.value;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.consumed)
        throw ValidationError(source_ + " line " + std::to_string(entry.line) +
                              ": unknown key " + key);
    }
  }

 private:
  std::string source_;
  std::map<std::string, IniEntry> entries_;
};

inline double ini_double(const IniFile& ini, const std::string& key, double fallback) {
  auto v = ini.get(key);
  return v ? csv::parse_double(*v, ini.source() + ": " + key) : fallback;
}

inline std::uint64_t ini_uint(const IniFile& ini, const std::string& key, std::uint64_t fallback) {
  auto v = ini.get(key);
  return v ? csv::parse_uint(*v, ini.source() + ": " + key) : fallback;
}

inline std::int64_t ini_int(const IniFile& ini, const std::string& key, std::int64_t fallback) {
  auto v = ini.get(key);
  return v ? csv::parse_int(*v, ini.source() + ": " + key) : fallback;
}

inline bool ini_bool(const IniFile& ini, const std::string& key, bool fallback) {
  auto v = ini.get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ValidationError(ini.source() + ": " + key + ": expected true/false, got '" + *v + "'");
}

inline std::string ini_string(const IniFile& ini, const std::string& key,
                              const std::string& fallback) {
  auto v = ini.get(key);
  return v ? *v : fallback;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// Parses and fully validates a config. Scenario defaults are applied first,
// explicit keys override them, and contradictions (e.g. a classic_si run
// with ratio_R != 1) are rejected with the offending key path.
inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  detail::IniFile ini(text, source);
  ExperimentConfig cfg;

  {
    auto s = ini.get("experiment.scenario");
    if (!s) throw ValidationError(source + ": missing required key experiment.scenario");
    cfg.scenario = scenario_from_string(*s, source + ": experiment.scenario");
  }

  const bool media_scenario = cfg.scenario == Scenario::ExogenousMedia ||
                              cfg.scenario == Scenario::EndogenousMedia;

  cfg.n_runs = detail::ini_uint(ini, "experiment.n_runs", 200);
  cfg.output_dir_provided = ini.has("experiment.output_dir");
  cfg.output_dir = detail::ini_string(ini, "experiment.output_dir", "out");
  cfg.root_seed = detail::ini_uint(ini, "experiment.root_seed", 1);
  cfg.jobs = static_cast<unsigned>(detail::ini_uint(ini, "experiment.jobs", 0));
  cfg.fresh_network_per_run = detail::ini_bool(ini, "experiment.fresh_network_per_run", false);

  // cities
  cfg.cities.path = detail::ini_string(ini, "cities.path", "");
  cfg.cities.synthetic = detail::ini_string(ini, "cities.synthetic", "uniform");
  cfg.cities.n_cities = detail::ini_uint(ini, "cities.n_cities", 408);
  cfg.cities.agents_per_city = detail::ini_int(ini, "cities.agents_per_city", 1000);
  cfg.cities.frac_early = detail::ini_double(ini, "cities.frac_early", 0.1);
  cfg.cities.frac_early_min = detail::ini_double(ini, "cities.frac_early_min", 0.02);
  cfg.cities.frac_early_max = detail::ini_double(ini, "cities.frac_early_max", 0.30);
  cfg.cities.frac_shape = detail::ini_double(ini, "cities.frac_shape", 1.0);
  cfg.cities.coord_seed = detail::ini_uint(ini, "cities.coord_seed", 12345);
  if (!cfg.cities.path.empty() &&
      (ini.has("cities.synthetic") || ini.has("cities.n_cities") ||
       ini.has("cities.agents_per_city") || ini.has("cities.frac_early") ||
       ini.has("cities.frac_early_min") || ini.has("cities.frac_early_max") ||
       ini.has("cities.frac_shape") || ini.has("cities.coord_seed")))
    throw ValidationError(source + ": cities.path excludes the synthetic-table keys");
  if (cfg.cities.synthetic != "uniform" && cfg.cities.synthetic != "gradient")
    throw ValidationError(source + ": cities.synthetic must be uniform or gradient");

  // netgen
  cfg.netgen.mean_degree = detail::ini_double(ini, "netgen.mean_degree", 7.0);
  cfg.netgen.gamma = detail::ini_double(ini, "netgen.gamma", 1.2);
  cfg.netgen.nu_km = detail::ini_double(ini, "netgen.nu_km", 1000.0);
  cfg.netgen.homophily_target = detail::ini_double(ini, "netgen.homophily_target", 0.0);
  const bool default_bias = cfg.scenario != Scenario::ClassicSI;
  cfg.netgen.geo_biased = detail::ini_bool(ini, "netgen.geo_biased", default_bias);
  cfg.netgen.rng_seed = cfg.root_seed;

  // sim
  cfg.sim.beta_r = detail::ini_double(ini, "sim.beta_r", 0.05);
  cfg.sim.ratio_R = detail::ini_double(ini, "sim.ratio_R",
                                       cfg.scenario == Scenario::ClassicSI ? 1.0 : 3.0);
  cfg.sim.horizon_T = static_cast<std::uint32_t>(detail::ini_uint(ini, "sim.horizon_T", 80));
  cfg.seed_city = detail::ini_string(ini, "sim.seed_city", "auto");
  cfg.seed_count = static_cast<std::uint32_t>(detail::ini_uint(ini, "sim.seed_count", 10));
  if (auto v = ini.get("sim.seed_fraction")) {
    cfg.seed_fraction = csv::parse_double(*v, source + ": sim.seed_fraction");
    if (ini.has("sim.seed_city") || ini.has("sim.seed_count"))
      throw ValidationError(source + ": sim.seed_fraction excludes seed_city/seed_count");
  }

  // media
  cfg.sim.alpha = detail::ini_double(ini, "media.alpha", media_scenario ? 0.15 : 0.0);
  cfg.sim.shock_scale = detail::ini_double(ini, "media.shock_scale",
                                           cfg.scenario == Scenario::EndogenousMedia ? 1.0 : 0.0);
  cfg.sim.media_activation_fraction =
      detail::ini_double(ini, "media.activation_fraction", 0.135);
  cfg.sim.media_exponent = detail::ini_double(ini, "media.exponent", 1.0);
  cfg.media_path = detail::ini_string(ini, "media.path", "");
  switch (cfg.scenario) {
    case Scenario::ExogenousMedia: cfg.sim.media_mode = MediaMode::Exogenous; break;
    case Scenario::EndogenousMedia: cfg.sim.media_mode = MediaMode::Endogenous; break;
    default: cfg.sim.media_mode = MediaMode::None; break;
  }

  // curve
  if (auto v = ini.get("curve.h_grid")) {
    for (const auto& field : csv::split_line(*v))
      cfg.curve.h_grid.push_back(csv::parse_double(field, source + ": curve.h_grid"));
  }
  cfg.curve.n_networks = detail::ini_uint(ini, "curve.n_networks", 100);

  ini.reject_unknown();

  // scenario constraints
  if (cfg.scenario == Scenario::ClassicSI) {
    if (cfg.sim.ratio_R != 1.0)
      throw ValidationError(source + ": sim.ratio_R: classic_si requires ratio_R = 1");
    if (cfg.sim.alpha != 0.0)
      throw ValidationError(source + ": media.alpha: classic_si requires alpha = 0");
    if (cfg.netgen.geo_biased)
      throw ValidationError(source + ": netgen.geo_biased: classic_si requires unbiased geography");
  }
  if (cfg.scenario == Scenario::ExogenousMedia && cfg.media_path.empty())
    throw ValidationError(source + ": media.path is required for exogenous_media");
  if (cfg.scenario != Scenario::ExogenousMedia && !cfg.media_path.empty())
    throw ValidationError(source + ": media.path is only valid for exogenous_media");
  if (cfg.scenario == Scenario::ComponentCurve) {
    if (cfg.curve.h_grid.empty())
      throw ValidationError(source + ": curve.h_grid is required for component_curve");
    for (const double h : cfg.curve.h_grid)
      if (h < 0.0 || h > 1.0)
        throw ValidationError(source + ": curve.h_grid values must be in [0,1]");
    if (cfg.curve.n_networks < 1)
      throw ValidationError(source + ": curve.n_networks must be >= 1");
  } else if (!cfg.curve.h_grid.empty()) {
    throw ValidationError(source + ": curve.h_grid is only valid for component_curve");
  }
  if (cfg.n_runs < 1) throw ValidationError(source + ": experiment.n_runs must be >= 1");
  if (cfg.seed_city != "auto")
    csv::parse_int(cfg.seed_city, source + ": sim.seed_city");

  cfg.netgen.validate();
  if (cfg.scenario != Scenario::ComponentCurve) {
    // seeding is resolved against the realized table later; validate the rest
    SimParams probe = cfg.sim;
    probe.seeding = cfg.seed_fraction ? SeedSpec::fraction_of(*cfg.seed_fraction)
                                      : SeedSpec::in_city(0, cfg.seed_count);
    probe.validate();
  }
  if (!cfg.cities.path.empty()) {
    // surfacing missing files at validation time beats failing mid-run
    csv::read_lines(cfg.cities.path);
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  const auto lines = csv::read_lines(path);
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  return parse_config_text(text, path);
}

// Full echo of a resolved config; parse_config_text(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& cfg) {
  using detail::format_double;
  std::ostringstream out;
  out << "[experiment]\n";
  out << "scenario = " << to_string(cfg.scenario) << "\n";
  out << "n_runs = " << cfg.n_runs << "\n";
  if (cfg.output_dir_provided) out << "output_dir = " << cfg.output_dir << "\n";
  out << "root_seed = " << cfg.root_seed << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  out << "fresh_network_per_run = " << (cfg.fresh_network_per_run ? "true" : "false") << "\n";

  out << "\n[cities]\n";
  if (!cfg.cities.path.empty()) {
    out << "path = " << cfg.cities.path << "\n";
  } else {
    out << "synthetic = " << cfg.cities.synthetic << "\n";
    out << "n_cities = " << cfg.cities.n_cities << "\n";
    out << "agents_per_city = " << cfg.cities.agents_per_city << "\n";
    if (cfg.cities.synthetic == "uniform") {
      out << "frac_early = " << format_double(cfg.cities.frac_early) << "\n";
    } else {
      out << "frac_early_min = " << format_double(cfg.cities.frac_early_min) << "\n";
      out << "frac_early_max = " << format_double(cfg.cities.frac_early_max) << "\n";
      out << "frac_shape = " << format_double(cfg.cities.frac_shape) << "\n";
    }
    out << "coord_seed = " << cfg.cities.coord_seed << "\n";
  }

  out << "\n[netgen]\n";
  out << "mean_degree = " << format_double(cfg.netgen.mean_degree) << "\n";
  out << "gamma = " << format_double(cfg.netgen.gamma) << "\n";
  out << "nu_km = " << format_double(cfg.netgen.nu_km) << "\n";
  out << "homophily_target = " << format_double(cfg.netgen.homophily_target) << "\n";
  out << "geo_biased = " << (cfg.netgen.geo_biased ? "true" : "false") << "\n";

  if (cfg.scenario != Scenario::ComponentCurve) {
    out << "\n[sim]\n";
    out << "beta_r = " << format_double(cfg.sim.beta_r) << "\n";
    out << "ratio_R = " << format_double(cfg.sim.ratio_R) << "\n";
    out << "horizon_T = " << cfg.sim.horizon_T << "\n";
    if (cfg.seed_fraction) {
      out << "seed_fraction = " << format_double(*cfg.seed_fraction) << "\n";
    } else {
      out << "seed_city = " << cfg.seed_city << "\n";
      out << "seed_count = " << cfg.seed_count << "\n";
    }
    out << "\n[media]\n";
    out << "alpha = " << format_double(cfg.sim.alpha) << "\n";
    out << "shock_scale = " << format_double(cfg.sim.shock_scale) << "\n";
    out << "activation_fraction = " << format_double(cfg.sim.media_activation_fraction) << "\n";
    out << "exponent = " << format_double(cfg.sim.media_exponent) << "\n";
    if (!cfg.media_path.empty()) out << "path = " << cfg.media_path << "\n";
  } else {
    out << "\n[curve]\n";
    out << "h_grid = ";
    for (std::size_t i = 0; i < cfg.curve.h_grid.size(); ++i) {
      if (i) out << ",";
      out << format_double(cfg.curve.h_grid[i]);
    }
    out << "\n";
    out << "n_networks = " << cfg.curve.n_networks << "\n";
  }
  return out.str();
}

// Resolves the configured seeding against a realized city table. "auto"
// picks the city with the highest early-adopter share (lowest row on ties),
// the adoption origin.
inline SeedSpec resolve_seeding(const ExperimentConfig& cfg, const CityTable& cities) {
  if (cfg.seed_fraction) return SeedSpec::fraction_of(*cfg.seed_fraction);
  std::int64_t city_id = 0;
  if (cfg.seed_city == "auto") {
    std::size_t best = 0;
    for (std::size_t r = 1; r < cities.size(); ++r)
      if (cities[r].frac_early > cities[best].frac_early) best = r;
    city_id = cities[best].id;
  } else {
    city_id = csv::parse_int(cfg.seed_city, "sim.seed_city");
    cities.row_of(city_id);  // unknown id -> error now, not mid-run
  }
  return SeedSpec::in_city(city_id, cfg.seed_count);
}

// Loads the `week,volume` series: gaps fill with 0, values max-normalize
// to [0,1]. Negative volumes are rejected.
inline std::vector<double> load_media_series(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw ValidationError(path + ": empty file, header required");
  {
    auto head = csv::split_line(lines[0]);
    if (head != std::vector<std::string>{"week", "volume"})
      throw ValidationError(path + " line 1: header must be 'week,volume'");
  }
  std::vector<double> series;
  std::vector<std::uint8_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const std::string where = path + " line " + std::to_string(i + 1);
    auto fields = csv::split_line(lines[i]);
    if (fields.size() != 2)
      throw ValidationError(where + ": expected 2 fields, got " + std::to_string(fields.size()));
    const auto week = csv::parse_uint(fields[0], where + ", column week");
    const double volume = csv::parse_double(fields[1], where + ", column volume");
    if (volume < 0.0) throw ValidationError(where + ": volume must be >= 0");
    if (week >= series.size()) {
      series.resize(week + 1, 0.0);
      seen.resize(week + 1, 0);
    }
    if (seen[week]) throw ValidationError(where + ": duplicate week " + std::to_string(week));
    seen[week] = 1;
    series[week] = volume;
  }
  const double peak = series.empty() ? 0.0 : *std::max_element(series.begin(), series.end());
  if (peak > 0.0)
    for (double& v : series) v /= peak;
  return series;
}

}  // namespace adoptsim
