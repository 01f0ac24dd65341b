#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>
#include <set>

#include "adoptsim/netgen.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace adoptsim;

namespace {

// n = 10,000 with an exact 10% early share (0.1 * 200 agents is integral).
CityTable ten_k_table() { return make_uniform_cities(50, 200, 0.1, 77); }

void check_simple_undirected(const Network& net) {
  const std::size_t n = net.node_count();
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto nbrs = net.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      REQUIRE(nbrs[k] != i);                       // no self-loops
      if (k > 0) REQUIRE(nbrs[k] > nbrs[k - 1]);   // sorted, no multi-edges
      const auto back = net.neighbors(nbrs[k]);
      REQUIRE(std::binary_search(back.begin(), back.end(), i));  // symmetry
    }
  }
}

}  // namespace

TEST_CASE("sample_degrees: mean tracks the Poisson parameter") {
  std::mt19937_64 rng(42);
  const auto deg = sample_degrees(100000, 7.0, rng);
  const double mean =
      std::accumulate(deg.begin(), deg.end(), 0.0) / static_cast<double>(deg.size());
  CHECK(mean >= 6.95);
  CHECK(mean <= 7.05);
}

TEST_CASE("sample_degrees: sum is always even") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto deg = sample_degrees(101, 3.3, rng);
    const auto sum = std::accumulate(deg.begin(), deg.end(), std::uint64_t{0});
    CHECK(sum % 2 == 0);
  }
}

TEST_CASE("sample_degrees: vanishing mean gives all zeros") {
  std::mt19937_64 rng(1);
  const auto deg = sample_degrees(10, 1e-9, rng);
  for (const auto d : deg) CHECK(d == 0);
}

TEST_CASE("sample_degrees draws pass a Poisson goodness-of-fit at 0.01") {
  std::mt19937_64 rng(2024);
  const auto deg = sample_degrees(10000, 7.0, rng);
  CHECK(oracle::poisson_gof_p_value(deg, 7.0) >= 0.01);
}

TEST_CASE("kernel_weight follows the truncated power law") {
  SECTION("constant beyond the truncation distance") {
    CHECK(kernel_weight(2000.0, 1.2, 1000.0) == kernel_weight(1500.0, 1.2, 1000.0));
    CHECK(kernel_weight(1000.0, 1.2, 1000.0) == kernel_weight(5000.0, 1.2, 1000.0));
  }
  SECTION("power-law ratio inside the range") {
    const double ratio = kernel_weight(10.0, 1.2, 1000.0) / kernel_weight(100.0, 1.2, 1000.0);
    CHECK(ratio == Catch::Approx(15.848931924611133).epsilon(1e-12));
  }
  SECTION("zero distance is floored at 1 km") {
    CHECK(kernel_weight(0.0, 1.2, 1000.0) == kernel_weight(1.0, 1.2, 1000.0));
  }
  SECTION("non-increasing in r") {
    double prev = kernel_weight(0.0, 1.2, 1000.0);
    for (double r = 0.5; r < 3000.0; r += 13.7) {
      const double w = kernel_weight(r, 1.2, 1000.0);
      CHECK(w <= prev + 1e-15);
      CHECK(w > 0.0);
      prev = w;
    }
  }
}

TEST_CASE("build_network produces a simple undirected graph at the right density") {
  const auto table = ten_k_table();
  const auto pop = place_agents(table, 5);
  NetGenParams p;
  p.mean_degree = 7.0;
  p.homophily_target = 0.3;
  p.geo_biased = false;
  p.rng_seed = 17;
  const auto net = build_network(pop, table, p);

  check_simple_undirected(net);
  CHECK(net.node_count() == 10000);
  // n<k>/2 = 35,000 within 2%
  CHECK(net.edge_count() >= 34300);
  CHECK(net.edge_count() <= 35700);
  const double realized = 2.0 * static_cast<double>(net.edge_count()) / 10000.0;
  CHECK(realized == Catch::Approx(7.0).epsilon(0.02));
}

TEST_CASE("build_network is deterministic given the seed") {
  const auto table = make_uniform_cities(20, 100, 0.2, 3);
  const auto pop = place_agents(table, 9);
  NetGenParams p;
  p.mean_degree = 5.0;
  p.homophily_target = 0.5;
  p.geo_biased = true;
  p.rng_seed = 31;
  const auto a = build_network(pop, table, p);
  const auto b = build_network(pop, table, p);
  CHECK(a.offsets == b.offsets);
  CHECK(a.adj == b.adj);
  p.rng_seed = 32;
  const auto c = build_network(pop, table, p);
  CHECK(a.adj != c.adj);
}

TEST_CASE("geo-biased generation also yields a simple undirected graph") {
  const auto table = make_uniform_cities(30, 100, 0.15, 8);
  const auto pop = place_agents(table, 21);
  NetGenParams p;
  p.mean_degree = 7.0;
  p.homophily_target = 0.4;
  p.geo_biased = true;
  p.rng_seed = 55;
  const auto net = build_network(pop, table, p);
  check_simple_undirected(net);
  const double realized = 2.0 * static_cast<double>(net.edge_count()) / 3000.0;
  CHECK(realized == Catch::Approx(7.0).epsilon(0.05));
}

TEST_CASE("measured homophily tracks the target") {
  const auto table = ten_k_table();
  const auto pop = place_agents(table, 13);
  NetGenParams p;
  p.mean_degree = 7.0;
  p.geo_biased = false;
  p.rng_seed = 101;

  SECTION("target at the global early share reproduces random mixing") {
    const double f =
        static_cast<double>(pop.early_count()) / static_cast<double>(pop.size());
    p.homophily_target = f;
    const auto net = build_network(pop, table, p);
    CHECK(measure_homophily(net) == Catch::Approx(f).margin(0.02));
  }

  SECTION("intermediate targets are tracked within 0.02") {
    for (const double h : {0.3, 0.6, 0.9}) {
      p.homophily_target = h;
      p.rng_seed = 101 + static_cast<std::uint64_t>(h * 10);
      const auto net = build_network(pop, table, p);
      CHECK(measure_homophily(net) == Catch::Approx(h).margin(0.02));
    }
  }
}

TEST_CASE("full homophily isolates early adopters from regular ones") {
  const auto table = make_uniform_cities(20, 50, 0.2, 4);  // 10 early per city
  const auto pop = place_agents(table, 6);
  NetGenParams p;
  p.mean_degree = 6.0;
  p.homophily_target = 1.0;
  p.rng_seed = 12;
  for (const bool biased : {false, true}) {
    p.geo_biased = biased;
    const auto net = build_network(pop, table, p);
    for (std::uint32_t i = 0; i < net.node_count(); ++i) {
      if (net.agents.type[i] != AdopterType::Early) continue;
      for (const auto j : net.neighbors(i)) CHECK(net.agents.type[j] == AdopterType::Early);
    }
    CHECK(measure_homophily(net) == 1.0);
  }
}

TEST_CASE("full homophily with a single early adopter fails with diagnostics") {
  std::vector<City> rows;
  rows.push_back({0, "only", 30.0, -100.0, 50, 0.02});  // exactly one early agent
  const CityTable table(std::move(rows));
  const auto pop = place_agents(table, 10);
  REQUIRE(pop.early_count() == 1);
  NetGenParams p;
  p.mean_degree = 7.0;
  p.homophily_target = 1.0;
  p.rng_seed = 3;
  CHECK_THROWS_AS(build_network(pop, table, p), GenerationError);
}

TEST_CASE("measure_homophily on hand-built graphs") {
  using T = AdopterType;
  SECTION("path E-E-R-E averages {1, 1/2, 0}") {
    const auto net = testutil::make_network({T::Early, T::Early, T::Regular, T::Early},
                                            {{0, 1}, {1, 2}, {2, 3}});
    CHECK(measure_homophily(net) == Catch::Approx(0.5));
  }
  SECTION("all-early network measures 1") {
    const auto net = testutil::make_complete(5, T::Early);
    CHECK(measure_homophily(net) == 1.0);
  }
  SECTION("early adopters fully embedded among regulars measure 0") {
    const auto net = testutil::make_network({T::Early, T::Regular, T::Regular},
                                            {{0, 1}, {0, 2}});
    CHECK(measure_homophily(net) == 0.0);
  }
  SECTION("no early adopter with positive degree is an error") {
    const auto net = testutil::make_network({T::Early, T::Regular, T::Regular},
                                            {{1, 2}});
    CHECK_THROWS_AS(measure_homophily(net), ValidationError);
  }
}

TEST_CASE("early_giant_component on hand-built graphs") {
  using T = AdopterType;
  SECTION("early clique spans everything") {
    const auto net = testutil::make_complete(6, T::Early);
    CHECK(early_giant_component(net) == 1.0);
  }
  SECTION("isolated early nodes give 1/e") {
    const auto net = testutil::make_network(
        {T::Early, T::Early, T::Early, T::Early, T::Regular},
        {{0, 4}, {1, 4}, {2, 4}, {3, 4}});  // early nodes only touch a regular hub
    CHECK(early_giant_component(net) == Catch::Approx(0.25));
  }
  SECTION("components of size 6 and 4 give 0.6") {
    std::vector<T> types(10, T::Early);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 0; i + 1 < 6; ++i) edges.emplace_back(i, i + 1);  // chain of 6
    for (std::uint32_t i = 6; i + 1 < 10; ++i) edges.emplace_back(i, i + 1); // chain of 4
    const auto net = testutil::make_network(types, edges);
    CHECK(early_giant_component(net) == Catch::Approx(0.6));
  }
  SECTION("regular-only network is an error") {
    const auto net = testutil::make_complete(3, T::Regular);
    CHECK_THROWS_AS(early_giant_component(net), ValidationError);
  }
}

TEST_CASE("full-homophily early subgraph matches an independent Poisson graph") {
  const auto table = ten_k_table();  // 1000 early agents
  const auto pop = place_agents(table, 23);
  NetGenParams p;
  p.mean_degree = 7.0;
  p.homophily_target = 1.0;
  p.geo_biased = false;
  p.rng_seed = 710;
  const auto net = build_network(pop, table, p);
  const double ours = early_giant_component(net);

  double reference = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s)
    reference += oracle::poisson_graph_gc_fraction(1000, 7.0, 900 + s);
  reference /= 5.0;

  CHECK(ours == Catch::Approx(reference).margin(0.02));
}

TEST_CASE("component_curve has one row per (h, bias) cell") {
  const auto table = make_uniform_cities(10, 40, 0.2, 31);
  NetGenParams p;
  p.mean_degree = 5.0;
  p.rng_seed = 400;
  const auto rows = component_curve(table, p, {0.5}, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].homophily_target == 0.5);
  CHECK(rows[1].homophily_target == 0.5);
  CHECK(rows[0].geo_biased == false);
  CHECK(rows[1].geo_biased == true);
  CHECK(rows[0].networks_ok == 1);
  CHECK(rows[1].networks_ok == 1);
}

TEST_CASE("component_curve: subcritical early mixing leaves no giant component") {
  // at h = f = 0.1 the early-early mean degree is ~0.7, far below the
  // percolation threshold
  const auto table = ten_k_table();
  NetGenParams p;
  p.mean_degree = 7.0;
  p.rng_seed = 5000;
  const auto rows = component_curve(table, p, {0.1}, 3);
  for (const auto& row : rows) {
    CHECK(row.networks_failed == 0);
    CHECK(row.mean_gc_fraction < 0.05);
    CHECK(row.mean_gc_fraction > 0.0);
  }
}

TEST_CASE("component_curve records failures per cell without aborting") {
  std::vector<City> rows_in;
  rows_in.push_back({0, "only", 30.0, -100.0, 60, 0.02});  // one early agent
  const CityTable table(std::move(rows_in));
  NetGenParams p;
  p.mean_degree = 7.0;
  p.rng_seed = 60;
  const auto rows = component_curve(table, p, {1.0}, 2);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) CHECK(row.networks_failed + row.networks_ok == 2);
  // the h=1 cells cannot be satisfied with a single early agent
  CHECK(rows[0].networks_failed == 2);
}

TEST_CASE("mean giant component grows with the homophily target") {
  const auto table = make_uniform_cities(40, 50, 0.1, 19);  // n=2000, 200 early
  NetGenParams p;
  p.mean_degree = 7.0;
  p.geo_biased = false;
  p.rng_seed = 8000;
  const auto rows = component_curve(table, p, {0.2, 0.5, 0.8}, 20);
  // unbiased rows are the even indices
  const double gc_02 = rows[0].mean_gc_fraction;
  const double gc_05 = rows[2].mean_gc_fraction;
  const double gc_08 = rows[4].mean_gc_fraction;
  CHECK(gc_02 < gc_05);
  CHECK(gc_05 < gc_08);
}
