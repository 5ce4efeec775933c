#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "thermomap/error.hpp"
#include "thermomap/field.hpp"

using namespace thermomap;

namespace {

BuildingModel cube_model() {
  return load_building(
      R"({"building": {"id": "b", "levels": [{"index": 0, "rooms": [{"id": "r", "min": [0,0,0], "max": [4,4,3]}]}]}})");
}

struct Grid3 {
  std::vector<double> xs{0.0, 0.7, 2.0};
  std::vector<double> ys{-1.0, 0.5, 1.0};
  std::vector<double> zs{0.0, 1.5, 3.0};
  std::vector<std::vector<std::vector<double>>> t;
  std::vector<std::vector<std::vector<double>>> h;
  std::vector<PositionedSample> samples;

  explicit Grid3(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> temp(10, 30);
    std::uniform_real_distribution<double> rh(20, 80);
    t.assign(3, std::vector<std::vector<double>>(3, std::vector<double>(3)));
    h = t;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          t[i][j][k] = temp(rng);
          h[i][j][k] = rh(rng);
          samples.push_back({{xs[i], ys[j], zs[k]}, {t[i][j][k], h[i][j][k]}});
        }
      }
    }
    std::shuffle(samples.begin(), samples.end(), rng);
  }
};

}  // namespace

TEST_CASE("constant field without hotspots or diurnal term") {
  FieldScenario s;
  for (double t : {0.0, 1000.0, 86400.0}) {
    const FieldValue v = ground_truth(s, {1, 2, 3}, t);
    CHECK(v.temp == 20.0);
    CHECK(v.rh == 50.0);
  }
}

TEST_CASE("hotspot peak and one-sigma value match the analytic Gaussian") {
  FieldScenario s;
  s.hotspots.push_back({{1, 1, 1}, 10.0, 0.0, 2.0});
  CHECK(ground_truth(s, {1, 1, 1}, 0).temp == 30.0);
  const double expected = 20.0 + oracle::gaussian(10.0, 2.0, 2.0);
  CHECK(ground_truth(s, {1, 3, 1}, 0).temp == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(26.065).epsilon(1e-4));
}

TEST_CASE("diurnal term and hotspot time envelope") {
  FieldScenario s;
  s.diurnal = {2.0, 4.0, 100.0};
  CHECK(ground_truth(s, {}, 25.0).temp == doctest::Approx(22.0));
  CHECK(ground_truth(s, {}, 25.0).rh == doctest::Approx(54.0));
  Hotspot h{{0, 0, 0}, 4.0, 0.0, 1.0, 10.0, 20.0};
  CHECK(h.envelope(0.0) == 0.0);
  CHECK(h.envelope(5.0) == doctest::Approx(0.5));
  CHECK(h.envelope(10.0) == doctest::Approx(1.0));
  CHECK(h.envelope(30.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("relative humidity is clamped to [0, 100]") {
  FieldScenario s;
  s.hotspots.push_back({{0, 0, 0}, 0.0, 80.0, 1.0});
  s.hotspots.push_back({{5, 0, 0}, 0.0, -90.0, 1.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-2, 7);
  for (int n = 0; n < 2000; ++n) {
    const double rh = ground_truth(s, {d(rng), d(rng) / 3, d(rng) / 3}, 0).rh;
    REQUIRE(rh >= 0.0);
    REQUIRE(rh <= 100.0);
  }
  CHECK(ground_truth(s, {0, 0, 0}, 0).rh == 100.0);
  CHECK(ground_truth(s, {5, 0, 0}, 0).rh == 0.0);
}

TEST_CASE("scenario validation and presets") {
  FieldScenario bad;
  bad.hotspots.push_back({{0, 0, 0}, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(bad.validate(), Error);
  const BuildingModel m = cube_model();
  for (const char* name : {"uniform", "smooth", "overheated_corner", "cold_wet_corner"}) {
    CHECK_NOTHROW(scenario_preset(name, m).validate());
  }
  CHECK_THROWS_AS(scenario_preset("nope", m), Error);
  const std::string cfg =
      R"({"building": {"id": "b", "levels": [{"index": 0, "rooms": [{"id": "r", "min": [0,0,0], "max": [4,4,3]}]}]},
         "scenario": {"baseline_temp": 18, "hotspots": [{"center": [1,1,1], "amplitude_temp": 5, "sigma": 1}]}})";
  const FieldScenario s = load_scenario(cfg, m);
  CHECK(s.baseline_temp == 18.0);
  CHECK(ground_truth(s, {1, 1, 1}, 0).temp == 23.0);
}

TEST_CASE("linear reconstruction: midpoint of two sensors") {
  const auto f = ReconstructionField::linear_grid({{{0, 0, 0}, {20, 40}}, {{1, 0, 0}, {30, 60}}});
  CHECK(f.method() == ReconstructionMethod::linear_grid);
  const FieldValue v = f.reconstruct({0.5, 0, 0});
  CHECK(v.temp == 25.0);
  CHECK(v.rh == 50.0);
}

TEST_CASE("trilinear matches the brute-force oracle on a random 3x3x3 grid") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Grid3 g(seed);
    const auto f = ReconstructionField::linear_grid(g.samples);
    std::mt19937_64 rng(seed * 17);
    std::uniform_real_distribution<double> ux(0.0, 2.0);
    std::uniform_real_distribution<double> uy(-1.0, 1.0);
    std::uniform_real_distribution<double> uz(0.0, 3.0);
    for (int n = 0; n < 100; ++n) {
      const Vec3 p{ux(rng), uy(rng), uz(rng)};
      const FieldValue v = f.reconstruct(p);
      CHECK(v.temp == doctest::Approx(oracle::trilinear(g.xs, g.ys, g.zs, g.t, {p.x, p.y, p.z})).epsilon(1e-12));
      CHECK(std::fabs(v.temp - oracle::trilinear(g.xs, g.ys, g.zs, g.t, {p.x, p.y, p.z})) <= 1e-9);
      CHECK(std::fabs(v.rh - oracle::trilinear(g.xs, g.ys, g.zs, g.h, {p.x, p.y, p.z})) <= 1e-9);
    }
  }
}

TEST_CASE("reconstruction is exact at sample sites") {
  const Grid3 g(9);
  const auto lin = ReconstructionField::linear_grid(g.samples);
  const auto bell = ReconstructionField::bell_kernel(g.samples);
  for (const auto& s : g.samples) {
    CHECK(lin.reconstruct(s.position) == s.value);
    CHECK(bell.reconstruct(s.position) == s.value);
    CHECK(bell.reconstruct(s.position + Vec3{0.004, -0.004, 0.004}) == s.value);
  }
}

TEST_CASE("linear reconstruction refuses points outside the lattice") {
  const Grid3 g(4);
  const auto f = ReconstructionField::linear_grid(g.samples);
  try {
    f.reconstruct({2.5, 0, 1});
    FAIL("expected extrapolation error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::extrapolation);
  }
  auto incomplete = g.samples;
  incomplete.pop_back();
  CHECK_FALSE(ReconstructionField::forms_grid(incomplete));
  CHECK_THROWS_AS(ReconstructionField::linear_grid(incomplete), Error);
  CHECK(ReconstructionField::automatic(incomplete).method() == ReconstructionMethod::bell_kernel);
  CHECK(ReconstructionField::automatic(g.samples).method() == ReconstructionMethod::linear_grid);
}

TEST_CASE("bell kernel stays within the sample range and uses Gaussian weights") {
  const Grid3 g(5);
  const auto f = ReconstructionField::bell_kernel(g.samples);
  double lo = 1e300;
  double hi = -1e300;
  for (const auto& s : g.samples) {
    lo = std::min(lo, s.value.temp);
    hi = std::max(hi, s.value.temp);
  }
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int n = 0; n < 1000; ++n) {
    const double v = f.reconstruct({u(rng), u(rng), u(rng)}).temp;
    REQUIRE(v >= lo - 1e-12);
    REQUIRE(v <= hi + 1e-12);
  }
  const auto two = ReconstructionField::bell_kernel({{{0, 0, 0}, {10, 0}}, {{2, 0, 0}, {20, 0}}}, 1.0);
  const double w0 = std::exp(-0.25 / 2.0);
  const double w1 = std::exp(-2.25 / 2.0);
  CHECK(two.reconstruct({0.5, 0, 0}).temp == doctest::Approx((10 * w0 + 20 * w1) / (w0 + w1)).epsilon(1e-12));
  CHECK(two.kernel_sigma() == 1.0);
  const auto dflt = ReconstructionField::bell_kernel({{{0, 0, 0}, {10, 0}}, {{2, 0, 0}, {20, 0}}});
  CHECK(dflt.kernel_sigma() == doctest::Approx(1.0));
  CHECK(dflt.snap_epsilon() == 0.01);
}

TEST_CASE("bell kernel far from every sample does not underflow") {
  const auto f = ReconstructionField::bell_kernel({{{0, 0, 0}, {10, 0}}, {{1, 0, 0}, {20, 0}}}, 0.1);
  const double v = f.reconstruct({1000, 0, 0}).temp;
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(20.0));
}

TEST_CASE("color map endpoints, midpoint, clamp and monotonicity") {
  const ColorMap m{15, 35};
  CHECK(color_for(15, m) == Rgb{0, 0, 1});
  CHECK(color_for(25, m) == Rgb{0.5, 0, 0.5});
  CHECK(color_for(40, m) == Rgb{1, 0, 0});
  CHECK(color_for(-100, m) == Rgb{0, 0, 1});
  CHECK(color_for(20, m) == Rgb{0.25, 0, 0.75});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 50);
  for (int n = 0; n < 1000; ++n) {
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    const Rgb ca = color_for(a, m);
    const Rgb cb = color_for(b, m);
    REQUIRE(ca.r <= cb.r);
    REQUIRE(ca.b >= cb.b);
    REQUIRE(ca.r >= 0.0);
    REQUIRE(cb.r <= 1.0);
  }
  CHECK_THROWS_AS((ColorMap{10, 10}.validate()), Error);
}

TEST_CASE("transparency ramp") {
  CHECK(alpha_for_distance(0) == doctest::Approx(0.4));
  CHECK(alpha_for_distance(50) == doctest::Approx(0.85));
  CHECK(alpha_for_distance(500) == doctest::Approx(0.85));
  CHECK(alpha_for_distance(25) == doctest::Approx(0.625));
  double prev = 0;
  for (double d = 0; d < 80; d += 0.5) {
    const double a = alpha_for_distance(d);
    REQUIRE(a >= prev);
    prev = a;
  }
}

TEST_CASE("argmax over a cell grid is the cell nearest a single hotspot") {
  const BuildingModel m = cube_model();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(0.1, 3.9);
  std::uniform_real_distribution<double> uz(0.1, 2.9);
  const CellGrid grid = room_cell_grid(m.room("r"), 0.5);
  for (int n = 0; n < 50; ++n) {
    FieldScenario s;
    const Vec3 c{ux(rng), ux(rng), uz(rng)};
    s.hotspots.push_back({c, 5.0, 0.0, 1.0});
    std::size_t best = 0;
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (ground_truth(s, grid.centers[i], 0).temp > ground_truth(s, grid.centers[best], 0).temp) best = i;
      if (distance(grid.centers[i], c) < distance(grid.centers[nearest], c)) nearest = i;
    }
    CHECK(distance(grid.centers[best], c) == doctest::Approx(distance(grid.centers[nearest], c)));
  }
}
