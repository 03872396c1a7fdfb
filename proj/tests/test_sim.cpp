#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace panfuse;
using namespace panfuse::testing;

namespace {

SimScenario scenario(HyperCube ref, std::size_t q, Kernel psf, std::vector<double> g, double sigma,
                     std::uint64_t seed = 1) {
  SimScenario sc;
  sc.model.q = q;
  sc.model.psf = std::move(psf);
  sc.model.g = std::move(g);
  sc.model.sigma_x.assign(ref.bands(), sigma);
  sc.model.sigma_p = sigma;
  sc.reference = std::move(ref);
  sc.seed = seed;
  return sc;
}

HyperCube single_band(const HyperCube& c, std::size_t l) {
  HyperCube out(c.width(), c.height(), 1);
  out.set_plane(0, c.plane_copy(l));
  return out;
}

}  // namespace

TEST_CASE("degrade_hx", "[sim]") {
  Rng rng(301);
  const HyperCube ref = random_cube(rng, 6, 4, 3, 0.0, 1.0);
  REQUIRE(degrade_hx(scenario(ref, 1, Kernel::delta(), {1, 1, 1}, 0.0)) == ref);

  const HyperCube flat(8, 6, 2, 0.37);
  const HyperCube x = degrade_hx(scenario(flat, 2, Kernel::box(2), {0.5, 0.5}, 0.0));
  REQUIRE(x.width() == 4);
  REQUIRE(x.height() == 3);
  for (double v : x.data()) REQUIRE(v == Catch::Approx(0.37).epsilon(1e-14));

  // 2x2 average of a non-constant image, checked at one site by hand.
  HyperCube ramp(4, 4, 1);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) ramp(0, i, j) = static_cast<double>(4 * i + j);
  const HyperCube xr = degrade_hx(scenario(ramp, 2, Kernel::box(2), {1.0}, 0.0));
  const Kernel k = Kernel::box(2);
  const Plane expect = spatial_downsample(naive_convolve(ramp.plane_copy(0), k), 2, {});
  for (std::size_t i = 0; i < xr.size(); ++i) REQUIRE(xr[i] == Catch::Approx(expect[i]).epsilon(1e-13));

  REQUIRE_THROWS_AS(degrade_hx(scenario(HyperCube(5, 4, 1), 2, Kernel::box(2), {1.0}, 0.0)), ShapeError);
}

TEST_CASE("degrade_pan", "[sim]") {
  Rng rng(307);
  const HyperCube ref = random_cube(rng, 5, 5, 3, 0.0, 1.0);
  REQUIRE(degrade_pan(scenario(ref, 1, Kernel::delta(), {1, 0, 0}, 0.0)) == band(ref, 1));

  const HyperCube wide = random_cube(rng, 4, 4, 80, 0.0, 1.0);
  const PanImage p = degrade_pan(scenario(wide, 1, Kernel::delta(), std::vector<double>(80, 1.0 / 80), 0.0));
  for (std::size_t i = 0; i < 16; ++i) {
    double mean = 0.0;
    for (std::size_t l = 0; l < 80; ++l) mean += wide.plane(l)[i];
    REQUIRE(p[i] == Catch::Approx(mean / 80.0).epsilon(1e-13));
  }
  REQUIRE_THROWS_AS(degrade_pan(scenario(ref, 1, Kernel::delta(), {0, 0, 0}, 0.0)), ConfigError);
}

TEST_CASE("seeded noise is reproducible", "[sim]") {
  Rng rng(311);
  const HyperCube ref = random_cube(rng, 8, 8, 2, 0.0, 1.0);
  const auto a = scenario(ref, 2, Kernel::box(2), {0.5, 0.5}, 0.05, 42);
  REQUIRE(degrade_hx(a) == degrade_hx(a));
  REQUIRE(degrade_pan(a) == degrade_pan(a));
  const auto b = scenario(ref, 2, Kernel::box(2), {0.5, 0.5}, 0.05, 43);
  REQUIRE_FALSE(degrade_hx(a) == degrade_hx(b));
  REQUIRE_FALSE(degrade_pan(a) == degrade_pan(b));
}

TEST_CASE("gaussian_psf", "[sim]") {
  const Kernel tiny = gaussian_psf(2, 0.05);
  REQUIRE(tiny(tiny.height / 2, tiny.width / 2) > 0.999);
  for (double s : {0.05, 0.3, 0.5, 1.0, 2.5}) {
    for (std::size_t q : {1u, 2u, 4u}) {
      const Kernel k = gaussian_psf(q, s);
      double sum = 0.0;
      for (double w : k.weights) sum += w;
      REQUIRE(std::abs(sum - 1.0) < 1e-12);
      REQUIRE(k.width % 2 == 1);
      for (std::size_t i = 0; i < k.height; ++i)
        for (std::size_t j = 0; j < k.width; ++j) {
          REQUIRE(k(i, j) == k(k.height - 1 - i, k.width - 1 - j));
          REQUIRE(k(i, j) == k(j, i));
        }
    }
  }
  REQUIRE_THROWS_AS(gaussian_psf(2, 0.0), ConfigError);
}

TEST_CASE("noiseless degradation commutes with band selection", "[sim][property]") {
  Rng rng(313);
  const HyperCube ref = random_cube(rng, 8, 6, 4, 0.0, 1.0);
  const auto full = scenario(ref, 2, gaussian_psf(2), {0.1, 0.2, 0.3, 0.4}, 0.0);
  const HyperCube x = degrade_hx(full);
  for (std::size_t l = 0; l < 4; ++l) {
    const auto one = scenario(single_band(ref, l), 2, gaussian_psf(2), {1.0}, 0.0);
    REQUIRE(degrade_hx(one) == single_band(x, l));
  }
}

TEST_CASE("noiseless data leave the reference feasible", "[sim][property]") {
  Rng rng(317);
  const HyperCube ref = random_cube(rng, 8, 8, 3, 0.0, 1.0);
  const auto sc = scenario(ref, 4, Kernel::box(4), {0.2, 0.3, 0.5}, 0.0);
  const HyperCube x = degrade_hx(sc);
  const PanImage p = degrade_pan(sc);
  for (double r : hx_residual_norms(ref, x, sc.model)) REQUIRE(r < 1e-12);
  REQUIRE(pan_residual_norm(ref, p, sc.model) < 1e-12);
}

TEST_CASE("noise energy straddles the radius about half the time", "[sim][property]") {
  Rng rng(331);
  const HyperCube ref = random_cube(rng, 16, 16, 3, 0.0, 1.0);
  const double sigma = 0.01;
  const HyperCube clean = degrade_hx(scenario(ref, 2, Kernel::box(2), {0.3, 0.3, 0.4}, 0.0));
  const double M = static_cast<double>(clean.pixels());
  std::vector<int> inside(3, 0);
  int pan_inside = 0;
  const PanImage clean_p = degrade_pan(scenario(ref, 2, Kernel::box(2), {0.3, 0.3, 0.4}, 0.0));
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto sc = scenario(ref, 2, Kernel::box(2), {0.3, 0.3, 0.4}, sigma, seed);
    const HyperCube x = degrade_hx(sc);
    for (std::size_t l = 0; l < 3; ++l) {
      double e = 0.0;
      for (std::size_t i = 0; i < clean.pixels(); ++i) {
        const double n = x.plane(l)[i] - clean.plane(l)[i];
        e += n * n;
      }
      if (e <= M * sigma * sigma) ++inside[l];
    }
    const PanImage p = degrade_pan(sc);
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e += (p[i] - clean_p[i]) * (p[i] - clean_p[i]);
    if (e <= static_cast<double>(p.size()) * sigma * sigma) ++pan_inside;
  }
  for (int c : inside) {
    REQUIRE(c >= 30);
    REQUIRE(c <= 70);
  }
  REQUIRE(pan_inside >= 30);
  REQUIRE(pan_inside <= 70);
}

TEST_CASE("radius inflation scales only the solver model", "[sim]") {
  SimScenario sc = scenario(HyperCube(4, 4, 2, 0.5), 2, Kernel::box(2), {0.5, 0.5}, 0.01);
  sc.radius_inflation = 1.5;
  const SensorModel m = sc.solver_model();
  REQUIRE(m.sigma_x[0] == Catch::Approx(0.015));
  REQUIRE(m.sigma_p == Catch::Approx(0.015));
  REQUIRE(sc.model.sigma_p == 0.01);
}

TEST_CASE("piecewise_constant_scene", "[sim]") {
  const HyperCube a = piecewise_constant_scene(16, 12, 3, 5);
  REQUIRE(a == piecewise_constant_scene(16, 12, 3, 5));
  REQUIRE_FALSE(a == piecewise_constant_scene(16, 12, 3, 6));
  for (double v : a.data()) {
    REQUIRE(v >= 0.05);
    REQUIRE(v <= 1.0);
  }
  // Shared level lines: wherever band 1 jumps, every band jumps.
  std::size_t jumps = 0;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j + 1 < 16; ++j) {
      const bool j0 = a(0, i, j) != a(0, i, j + 1);
      jumps += j0;
      for (std::size_t l = 1; l < 3; ++l)
        if (!j0) REQUIRE(a(l, i, j) == a(l, i, j + 1));
    }
  REQUIRE(jumps > 0);
}
