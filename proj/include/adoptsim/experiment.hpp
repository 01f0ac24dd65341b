#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adoptsim/config.hpp"
#include "adoptsim/dynamics.hpp"
#include "adoptsim/errors.hpp"
#include "adoptsim/metrics.hpp"
#include "adoptsim/netgen.hpp"
#include "adoptsim/version.hpp"

namespace adoptsim {

namespace detail {

inline std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path + ": cannot open file for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[20];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::strtoull(hex, nullptr, 16);  // normalized through hex for clarity
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

class FileWriter {
 public:
  explicit FileWriter(const std::filesystem::path& path) : path_(path.string()), out_(path) {
    if (!out_) throw std::runtime_error(path_ + ": cannot open for writing");
  }
  template <typename T>
  FileWriter& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error(path_ + ": write failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace detail

// Single-run trace files: the global weekly series and the per-city series.
inline void write_global_trace(const AdoptionTrace& trace, const std::filesystem::path& path) {
  detail::FileWriter out(path);
  out << "week,new_adopters,cumulative,media_volume\n";
  const auto cum = trace.cumulative();
  for (std::size_t w = 0; w < trace.new_adopters_by_week.size(); ++w) {
    out << w << "," << trace.new_adopters_by_week[w] << "," << cum[w] << ","
        << detail::fmt(trace.media_series[w]) << "\n";
  }
  out.close();
}

inline void write_city_trace(const AdoptionTrace& trace, const AgentPopulation& pop,
                             const std::filesystem::path& path) {
  if (!trace.has_city_series())
    throw ValidationError("write_city_trace: trace has no per-city series");
  detail::FileWriter out(path);
  out << "week,city_id,new_adopters\n";
  for (std::size_t w = 0; w <= trace.horizon_T; ++w)
    for (std::size_t c = 0; c < trace.n_cities; ++c)
      out << w << "," << pop.city_id[c] << "," << trace.city_new(c, w) << "\n";
  out.close();
}

inline void write_adoption_weeks(const AdoptionTrace& trace, const AgentPopulation& pop,
                                 const std::filesystem::path& path) {
  if (trace.adoption_week.empty())
    throw ValidationError("write_adoption_weeks: trace has no per-agent weeks");
  detail::FileWriter out(path);
  out << "agent_id,city_id,adopter_type,adoption_week\n";
  for (std::size_t a = 0; a < trace.adoption_week.size(); ++a) {
    out << a << "," << pop.city_id[pop.city_row[a]] << ","
        << (pop.type[a] == AdopterType::Early ? "early" : "regular") << ","
        << trace.adoption_week[a] << "\n";
  }
  out.close();
}

inline void write_ensemble_traces(const ReplicationEnsemble& ens,
                                  const std::filesystem::path& path) {
  detail::FileWriter out(path);
  out << "run,week,new_adopters,cumulative,media_volume\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (ens.failed[i]) continue;
    const auto& trace = ens.traces[i];
    const auto cum = trace.cumulative();
    for (std::size_t w = 0; w < trace.new_adopters_by_week.size(); ++w) {
      out << i << "," << w << "," << trace.new_adopters_by_week[w] << "," << cum[w] << ","
          << detail::fmt(trace.media_series[w]) << "\n";
    }
  }
  out.close();
}

inline void write_bands(const EnsembleBands& bands, const std::filesystem::path& path) {
  detail::FileWriter out(path);
  out << "week,mean,lo75,hi75,lo95,hi95\n";
  for (std::size_t w = 0; w < bands.mean.size(); ++w) {
    out << w << "," << detail::fmt(bands.mean[w]) << "," << detail::fmt(bands.lo75[w]) << ","
        << detail::fmt(bands.hi75[w]) << "," << detail::fmt(bands.lo95[w]) << ","
        << detail::fmt(bands.hi95[w]) << "\n";
  }
  out.close();
}

// Per-run, per-city critical-mass weeks. Cities with no adopters in a run
// are omitted for that run.
inline void write_city_cm_weeks(const ReplicationEnsemble& ens, const AgentPopulation& pop,
                                const std::filesystem::path& path) {
  detail::FileWriter out(path);
  out << "run,city_id,cm_week\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (ens.failed[i]) continue;
    const auto& trace = ens.traces[i];
    if (!trace.has_city_series()) continue;
    for (std::size_t c = 0; c < trace.n_cities; ++c) {
      const auto cum = trace.city_cumulative(c);
      if (cum.back() == 0) continue;
      out << i << "," << pop.city_id[c] << "," << critical_mass_time(cum, cum.back()) << "\n";
    }
  }
  out.close();
}

inline void write_city_report(const AdoptionTrace& trace, const AgentPopulation& pop,
                              const std::filesystem::path& path) {
  detail::FileWriter out(path);
  out << "city_id,cm_week,frac_early_adopter,frac_early_majority,frac_late_majority,frac_laggard\n";
  const auto comps =
      city_composition(pop.city_row, trace.adoption_week, pop.city_count());
  for (std::size_t c = 0; c < pop.city_count(); ++c) {
    out << pop.city_id[c] << ",";
    const auto cum = trace.city_cumulative(c);
    if (cum.back() == 0 || !comps[c].has_adopters) {
      out << ",,,,\n";  // absent, not zero
      continue;
    }
    out << critical_mass_time(cum, cum.back());
    for (const double f : comps[c].fraction) out << "," << detail::fmt(f);
    out << "\n";
  }
  out.close();
}

inline void export_network(const Network& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    detail::FileWriter out(dir / "edges.csv");
    out << "src,dst\n";
    const std::size_t n = net.node_count();
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(n); ++i)
      for (const std::uint32_t j : net.neighbors(i))
        if (i < j) out << i << "," << j << "\n";
    out.close();
  }
  {
    nlohmann::json meta;
    meta["tool"] = "adoptsim";
    meta["version"] = kVersion;
    meta["nodes"] = net.node_count();
    meta["edges"] = net.edge_count();
    meta["params"] = {
        {"mean_degree", net.params.mean_degree},
        {"gamma", net.params.gamma},
        {"nu_km", net.params.nu_km},
        {"homophily_target", net.params.homophily_target},
        {"geo_biased", net.params.geo_biased},
        {"rng_seed", net.params.rng_seed},
    };
    detail::FileWriter out(dir / "network_meta.json");
    out << meta.dump(2) << "\n";
    out.close();
  }
}

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::size_t n_runs = 0;
  std::size_t failure_count = 0;
  std::vector<std::string> files_written;
};

// Runs one configured experiment and writes its artifact files. Everything
// except the manifest timestamp is a pure function of the config, so a rerun
// with the same seed reproduces the files byte for byte. All writes happen
// on the calling thread after the parallel phase completes.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::string& config_path = "") {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  ExperimentResult result;
  result.output_dir = dir;

  nlohmann::json manifest;
  manifest["tool"] = "adoptsim";
  manifest["version"] = kVersion;
  manifest["scenario"] = to_string(cfg.scenario);
  manifest["root_seed"] = cfg.root_seed;
  manifest["created_utc"] = detail::utc_timestamp();
  manifest["seed_plan"] = {
      {"placement", "root_seed (+ run index with fresh networks)"},
      {"network", "root_seed (+ run index with fresh networks, + network index in sweeps)"},
      {"runs", "root_seed + run_index"},
  };
  manifest["inputs"] = nlohmann::json::array();
  auto note_input = [&](const std::string& path) {
    if (path.empty()) return;
    manifest["inputs"].push_back(
        {{"path", path}, {"fnv1a64", detail::hex64(detail::fnv1a64_file(path))}});
  };
  note_input(config_path);
  note_input(cfg.cities.path);

  auto add_file = [&](const std::string& name) { result.files_written.push_back(name); };

  {
    detail::FileWriter echo(dir / "config_echo.ini");
    echo << emit_config(cfg);
    echo.close();
    add_file("config_echo.ini");
  }

  const CityTable cities = cfg.cities.realize();

  if (cfg.scenario == Scenario::ComponentCurve) {
    const auto rows =
        component_curve(cities, cfg.netgen, cfg.curve.h_grid, cfg.curve.n_networks, cfg.jobs);
    detail::FileWriter out(dir / "curve.csv");
    out << "h,geo_biased,mean_gc_fraction,mean_homophily,networks_ok,networks_failed\n";
    std::size_t failed = 0;
    for (const auto& row : rows) {
      out << detail::fmt(row.homophily_target) << "," << (row.geo_biased ? 1 : 0) << ","
          << detail::fmt(row.mean_gc_fraction) << ","
          << detail::fmt(row.mean_measured_homophily) << "," << row.networks_ok << ","
          << row.networks_failed << "\n";
      failed += row.networks_failed;
    }
    out.close();
    add_file("curve.csv");
    result.n_runs = cfg.curve.n_networks * rows.size();
    result.failure_count = failed;
  } else {
    std::vector<double> media_series;
    if (cfg.scenario == Scenario::ExogenousMedia) {
      note_input(cfg.media_path);
      media_series = load_media_series(cfg.media_path);
    }

    SimParams sim = cfg.sim;
    sim.rng_seed = cfg.root_seed;
    sim.seeding = resolve_seeding(cfg, cities);

    RunOptions ensemble_options{.record_city_series = true, .record_adoption_weeks = false};
    RunOptions full_options{.record_city_series = true, .record_adoption_weeks = true};

    ReplicationEnsemble ens;
    AdoptionTrace run0;

    if (cfg.fresh_network_per_run) {
      NetworkRecipe recipe{&cities, cfg.netgen};
      // exogenous media + fresh networks: replications need the series too
      if (cfg.scenario == Scenario::ExogenousMedia) {
        // run the ensemble by hand so the series reaches each run
        ens.traces.resize(cfg.n_runs);
        ens.failed.assign(cfg.n_runs, 0);
        ens.failure_messages.assign(cfg.n_runs, "");
        const GeoKernel kernel = GeoKernel::build(cities, cfg.netgen.gamma, cfg.netgen.nu_km);
        parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t i) {
          try {
            NetGenParams np = cfg.netgen;
            np.rng_seed = cfg.netgen.rng_seed + i;
            const AgentPopulation pop = place_agents(cities, np.rng_seed);
            const Network net =
                build_network(pop, cities, np, np.geo_biased ? &kernel : nullptr);
            SimParams p = sim;
            p.rng_seed = sim.rng_seed + i;
            ens.traces[i] = run(net, p, media_series, ensemble_options);
          } catch (const std::exception& e) {
            ens.failed[i] = 1;
            ens.failure_messages[i] = e.what();
          }
        });
        for (const auto f : ens.failed) ens.failure_count += f;
      } else {
        ens = run_replications(recipe, sim, cfg.n_runs, ensemble_options, cfg.jobs);
      }
      NetGenParams np0 = cfg.netgen;
      np0.rng_seed = cfg.netgen.rng_seed;
      const AgentPopulation p0 = place_agents(cities, np0.rng_seed);
      const Network net0 = build_network(p0, cities, np0);
      run0 = run(net0, sim, media_series, full_options);
      write_city_trace(run0, p0, dir / "trace_city_run0.csv");
      write_adoption_weeks(run0, p0, dir / "adoption_weeks_run0.csv");
      write_city_report(run0, p0, dir / "city_report.csv");
      write_city_cm_weeks(ens, p0, dir / "city_cm_weeks.csv");
    } else {
      const AgentPopulation pop0 = place_agents(cities, cfg.root_seed);
      const Network net = build_network(pop0, cities, cfg.netgen);
      if (cfg.scenario == Scenario::ExogenousMedia) {
        ens.traces.resize(cfg.n_runs);
        ens.failed.assign(cfg.n_runs, 0);
        ens.failure_messages.assign(cfg.n_runs, "");
        parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t i) {
          try {
            SimParams p = sim;
            p.rng_seed = sim.rng_seed + i;
            ens.traces[i] = run(net, p, media_series, ensemble_options);
          } catch (const std::exception& e) {
            ens.failed[i] = 1;
            ens.failure_messages[i] = e.what();
          }
        });
        for (const auto f : ens.failed) ens.failure_count += f;
      } else {
        ens = run_replications(net, sim, cfg.n_runs, ensemble_options, cfg.jobs);
      }
      run0 = run(net, sim, media_series, full_options);
      write_city_trace(run0, net.agents, dir / "trace_city_run0.csv");
      write_adoption_weeks(run0, net.agents, dir / "adoption_weeks_run0.csv");
      write_city_report(run0, net.agents, dir / "city_report.csv");
      write_city_cm_weeks(ens, net.agents, dir / "city_cm_weeks.csv");
    }
    add_file("trace_city_run0.csv");
    add_file("adoption_weeks_run0.csv");
    add_file("city_report.csv");
    add_file("city_cm_weeks.csv");

    write_global_trace(run0, dir / "trace_global_run0.csv");
    add_file("trace_global_run0.csv");
    write_ensemble_traces(ens, dir / "traces_global.csv");
    add_file("traces_global.csv");

    if (ens.size() - ens.failure_count >= 2) {
      write_bands(ensemble_bands(ens), dir / "bands.csv");
      add_file("bands.csv");
    }

    result.n_runs = cfg.n_runs;
    result.failure_count = ens.failure_count;
    manifest["failures"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ens.size(); ++i)
      if (ens.failed[i])
        manifest["failures"].push_back({{"run", i}, {"error", ens.failure_messages[i]}});
  }

  manifest["n_runs"] = result.n_runs;
  manifest["failure_count"] = result.failure_count;
  manifest["files"] = result.files_written;
  {
    detail::FileWriter out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
    out.close();
  }
  result.files_written.push_back("manifest.json");
  return result;
}

// Recomputes bands.csv and city_report.csv for a finished simulate run from
// its trace files alone.
inline void analyze_directory(const std::filesystem::path& dir) {
  // bands from the multi-run global traces
  {
    const auto lines = csv::read_lines((dir / "traces_global.csv").string());
    if (lines.empty() || lines[0] != "run,week,new_adopters,cumulative,media_volume")
      throw ValidationError((dir / "traces_global.csv").string() + ": unexpected header");
    std::map<std::uint64_t, std::vector<double>> cum_by_run;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (csv::trim(lines[i]).empty()) continue;
      const std::string where = "traces_global.csv line " + std::to_string(i + 1);
      const auto f = csv::split_line(lines[i]);
      if (f.size() != 5) throw ValidationError(where + ": expected 5 fields");
      const auto run_id = csv::parse_uint(f[0], where);
      const auto week = csv::parse_uint(f[1], where);
      auto& cum = cum_by_run[run_id];
      if (cum.size() != week) throw ValidationError(where + ": weeks out of order");
      cum.push_back(csv::parse_double(f[3], where));
    }
    if (cum_by_run.size() < 2)
      throw ValidationError("analyze: need at least 2 runs to compute bands");
    const std::size_t weeks = cum_by_run.begin()->second.size();
    EnsembleBands bands;
    bands.runs_used = cum_by_run.size();
    bands.mean.resize(weeks);
    bands.lo75.resize(weeks);
    bands.hi75.resize(weeks);
    bands.lo95.resize(weeks);
    bands.hi95.resize(weeks);
    std::vector<double> column;
    for (std::size_t w = 0; w < weeks; ++w) {
      column.clear();
      for (const auto& [run_id, cum] : cum_by_run) {
        if (cum.size() != weeks)
          throw ValidationError("analyze: runs disagree on horizon");
        column.push_back(cum[w]);
      }
      std::sort(column.begin(), column.end());
      bands.mean[w] = stats::mean(column);
      bands.lo75[w] = stats::nearest_rank(column, 0.125);
      bands.hi75[w] = stats::nearest_rank(column, 0.875);
      bands.lo95[w] = stats::nearest_rank(column, 0.025);
      bands.hi95[w] = stats::nearest_rank(column, 0.975);
    }
    write_bands(bands, dir / "bands.csv");
  }

  // city report from the run-0 per-agent and per-city files
  {
    const auto agent_lines = csv::read_lines((dir / "adoption_weeks_run0.csv").string());
    if (agent_lines.empty() ||
        agent_lines[0] != "agent_id,city_id,adopter_type,adoption_week")
      throw ValidationError((dir / "adoption_weeks_run0.csv").string() + ": unexpected header");

    std::vector<std::int64_t> city_ids;           // row order = first appearance
    std::map<std::int64_t, std::uint32_t> row_of;
    std::vector<std::uint32_t> agent_city;
    std::vector<std::int32_t> agent_week;
    for (std::size_t i = 1; i < agent_lines.size(); ++i) {
      if (csv::trim(agent_lines[i]).empty()) continue;
      const std::string where = "adoption_weeks_run0.csv line " + std::to_string(i + 1);
      const auto f = csv::split_line(agent_lines[i]);
      if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
      const auto city = csv::parse_int(f[1], where);
      auto [it, inserted] =
          row_of.emplace(city, static_cast<std::uint32_t>(city_ids.size()));
      if (inserted) city_ids.push_back(city);
      agent_city.push_back(it->second);
      agent_week.push_back(static_cast<std::int32_t>(csv::parse_int(f[3], where)));
    }

    const auto city_lines = csv::read_lines((dir / "trace_city_run0.csv").string());
    if (city_lines.empty() || city_lines[0] != "week,city_id,new_adopters")
      throw ValidationError((dir / "trace_city_run0.csv").string() + ": unexpected header");
    std::map<std::int64_t, std::vector<std::uint64_t>> new_by_city;
    for (std::size_t i = 1; i < city_lines.size(); ++i) {
      if (csv::trim(city_lines[i]).empty()) continue;
      const std::string where = "trace_city_run0.csv line " + std::to_string(i + 1);
      const auto f = csv::split_line(city_lines[i]);
      if (f.size() != 3) throw ValidationError(where + ": expected 3 fields");
      const auto week = csv::parse_uint(f[0], where);
      auto& series = new_by_city[csv::parse_int(f[1], where)];
      if (series.size() != week) throw ValidationError(where + ": weeks out of order");
      series.push_back(csv::parse_uint(f[2], where));
    }

    const auto comps = city_composition(agent_city, agent_week, city_ids.size());
    detail::FileWriter out(dir / "city_report.csv");
    out << "city_id,cm_week,frac_early_adopter,frac_early_majority,frac_late_majority,"
           "frac_laggard\n";
    for (std::size_t c = 0; c < city_ids.size(); ++c) {
      out << city_ids[c] << ",";
      auto it = new_by_city.find(city_ids[c]);
      std::vector<std::uint64_t> cum;
      if (it != new_by_city.end()) {
        std::uint64_t acc = 0;
        for (const auto v : it->second) cum.push_back(acc += v);
      }
      if (cum.empty() || cum.back() == 0 || !comps[c].has_adopters) {
        out << ",,,,\n";
        continue;
      }
      out << critical_mass_time(cum, cum.back());
      for (const double f : comps[c].fraction) out << "," << detail::fmt(f);
      out << "\n";
    }
    out.close();
  }
}

}  // namespace adoptsim
