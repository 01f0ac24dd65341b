#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "adoptsim/media.hpp"
#include "adoptsim/rng.hpp"

using namespace adoptsim;

TEST_CASE("media_prob is alpha times volume") {
  CHECK(media_prob(0.15, 1.0) == Catch::Approx(0.15));
  CHECK(media_prob(0.0, 0.73) == 0.0);
  CHECK(media_prob(0.15, 0.5) == Catch::Approx(0.075));
}

TEST_CASE("endogenous_volume saturates at full adoption") {
  CHECK(endogenous_volume(1000, 1000, true, 0.0, 0.5) == 1.0);
}

TEST_CASE("endogenous_volume is zero before critical mass") {
  for (std::uint64_t i : {std::uint64_t{0}, std::uint64_t{500}, std::uint64_t{1000}})
    CHECK(endogenous_volume(i, 1000, false, 1.0, 0.9) == 0.0);
}

TEST_CASE("endogenous_volume shocks stay within twice the base") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double base = 0.4;
  double max_seen = 0.0, min_seen = 1.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = endogenous_volume(400, 1000, true, 1.0, unit(rng));
    CHECK(v >= 0.0);
    CHECK(v <= 2.0 * base + 1e-12);
    max_seen = std::max(max_seen, v);
    min_seen = std::min(min_seen, v);
  }
  CHECK(max_seen > 0.75);  // the sampled shock actually spans the range
  CHECK(min_seen < 0.05);
}

TEST_CASE("endogenous_volume clamps into [0,1]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = endogenous_volume(900, 1000, true, 3.0, unit(rng));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("endogenous_volume without shocks is monotone in adopters") {
  double prev = 0.0;
  for (std::uint64_t i = 0; i <= 1000; i += 50) {
    const double v = endogenous_volume(i, 1000, true, 0.0, 0.123);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("endogenous_volume optional exponent bends the response") {
  const double linear = endogenous_volume(250, 1000, true, 0.0, 0.5, 1.0);
  const double super = endogenous_volume(250, 1000, true, 0.0, 0.5, 2.0);
  CHECK(linear == Catch::Approx(0.25));
  CHECK(super == Catch::Approx(0.0625));
  CHECK(super < linear);
}

TEST_CASE("exogenous_volume indexes the series and rejects out-of-range weeks") {
  const std::vector<double> series{0.0, 0.5, 1.0};
  CHECK(exogenous_volume(series, 0) == 0.0);
  CHECK(exogenous_volume(series, 1) == 0.5);
  CHECK(exogenous_volume(series, 2) == 1.0);
  CHECK_THROWS_AS(exogenous_volume(series, 3), ValidationError);
}

TEST_CASE("constant exogenous volume composes into a constant media probability") {
  const std::vector<double> series(10, 0.5);
  for (std::size_t t = 0; t < series.size(); ++t)
    CHECK(media_prob(0.15, exogenous_volume(series, t)) == Catch::Approx(0.075));
}
