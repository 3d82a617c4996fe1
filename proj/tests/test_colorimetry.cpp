// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "specfold/colorimetry.hpp"
#include "specfold/data.hpp"
#include "specfold/rng.hpp"

using namespace specfold;

namespace {

// Direct Planck spectral radiance, independent of the library routine.
double planck_raw(double t, double wavelength_nm) {
    const double h = 6.62607015e-34, c = 2.99792458e8, kb = 1.380649e-23;
    double lm = wavelength_nm * 1e-9;
    return (2.0 * h * c * c) / std::pow(lm, 5.0) / (std::exp(h * c / (lm * kb * t)) - 1.0);
}

LabColor lab_of(double l, double a, double b) {
    LabColor c;
    c.L = l;
    c.a = a;
    c.b = b;
    c.white = {95.047, 100.0, 108.883};
    return c;
}

}  // namespace

TEST_CASE("planckian spd is normalized, positive, and matches the formula") {
    for (double t : {4000.0, 6500.0, 15000.0}) {
        IlluminantSPD s = planckian_spd(t);
        REQUIRE(s.values().maxCoeff() == 1.0);
        REQUIRE(s.values().minCoeff() > 0.0);
        double ratio = s.value_at(400.0) / s.value_at(700.0);
        double expect = planck_raw(t, 400.0) / planck_raw(t, 700.0);
        REQUIRE_THAT(ratio, Catch::Matchers::WithinRel(expect, 1e-9));
    }
    // hot source: strictly decreasing over the visible band
    IlluminantSPD hot = planckian_spd(15000.0);
    for (int i = 1; i < hot.size(); ++i) REQUIRE(hot[i] < hot[i - 1]);
    REQUIRE_THROWS_AS(planckian_spd(0.0), ConfigError);
    REQUIRE_THROWS_AS(planckian_spd(-100.0), ConfigError);
}

TEST_CASE("planckian series covers inclusive endpoints") {
    REQUIRE(planckian_series(4000.0, 15000.0, 500.0).size() == 23);
    REQUIRE(planckian_series(5000.0, 5000.0, 500.0).size() == 1);
    auto three = planckian_series(4000.0, 5000.0, 500.0);
    REQUIRE(three.size() == 3);
    REQUIRE_THAT(three[1].value_at(550.0) / three[1].value_at(550.0),
                 Catch::Matchers::WithinAbs(1.0, 0.0));
}

TEST_CASE("reflectance_to_xyz normalizes the perfect reflector to Y = 100") {
    auto cmf = cie_1931_cmfs();
    for (const IlluminantSPD& e : {cie_d65(), cie_d50(), planckian_spd(5000.0)}) {
        XYZ white = reflectance_to_xyz(ReflectanceSpectrum::constant(1.0), e, cmf);
        REQUIRE_THAT(white.Y, Catch::Matchers::WithinAbs(100.0, 1e-9));

        XYZ black = reflectance_to_xyz(ReflectanceSpectrum::constant(0.0), e, cmf);
        REQUIRE(black.X == 0.0);
        REQUIRE(black.Y == 0.0);
        REQUIRE(black.Z == 0.0);

        XYZ half = reflectance_to_xyz(ReflectanceSpectrum::constant(0.5), e, cmf);
        REQUIRE_THAT(half.X, Catch::Matchers::WithinAbs(0.5 * white.X, 1e-9));
        REQUIRE_THAT(half.Y, Catch::Matchers::WithinAbs(50.0, 1e-9));
        REQUIRE_THAT(half.Z, Catch::Matchers::WithinAbs(0.5 * white.Z, 1e-9));
    }
}

TEST_CASE("reflectance_to_xyz is linear in reflectance") {
    auto cmf = cie_1931_cmfs();
    auto d65 = cie_d65();
    Pcg32 rng(11);
    Eigen::VectorXd a(61), b(61);
    for (int i = 0; i < 61; ++i) {
        a[i] = 0.4 * rng.uniform();
        b[i] = 0.4 * rng.uniform();
    }
    XYZ xa = reflectance_to_xyz(ReflectanceSpectrum(default_grid(), a), d65, cmf);
    XYZ xb = reflectance_to_xyz(ReflectanceSpectrum(default_grid(), b), d65, cmf);
    XYZ xs = reflectance_to_xyz(ReflectanceSpectrum(default_grid(), a + b), d65, cmf);
    REQUIRE_THAT(xs.X, Catch::Matchers::WithinAbs(xa.X + xb.X, 1e-10));
    REQUIRE_THAT(xs.Y, Catch::Matchers::WithinAbs(xa.Y + xb.Y, 1e-10));
    REQUIRE_THAT(xs.Z, Catch::Matchers::WithinAbs(xa.Z + xb.Z, 1e-10));
}

TEST_CASE("bundled white points land at their published chromaticities") {
    auto cmf = cie_1931_cmfs();
    auto white = ReflectanceSpectrum::constant(1.0);
    XYZ d65 = reflectance_to_xyz(white, cie_d65(), cmf);
    double sum65 = d65.X + d65.Y + d65.Z;
    REQUIRE_THAT(d65.X / sum65, Catch::Matchers::WithinAbs(0.3127, 2e-3));
    REQUIRE_THAT(d65.Y / sum65, Catch::Matchers::WithinAbs(0.3290, 2e-3));
    XYZ d50 = reflectance_to_xyz(white, cie_d50(), cmf);
    double sum50 = d50.X + d50.Y + d50.Z;
    REQUIRE_THAT(d50.X / sum50, Catch::Matchers::WithinAbs(0.3457, 2e-3));
    REQUIRE_THAT(d50.Y / sum50, Catch::Matchers::WithinAbs(0.3585, 2e-3));
}

TEST_CASE("lab conversion fixes the white point at L=100, a=b=0") {
    auto cmf = cie_1931_cmfs();
    XYZ white = reflectance_to_xyz(ReflectanceSpectrum::constant(1.0), cie_d65(), cmf);
    LabColor lab = xyz_to_lab(white, white);
    REQUIRE_THAT(lab.L, Catch::Matchers::WithinAbs(100.0, 1e-9));
    REQUIRE_THAT(lab.a, Catch::Matchers::WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(lab.b, Catch::Matchers::WithinAbs(0.0, 1e-9));

    // mid grey: L = 116 * (0.5)^(1/3) - 16, neutral
    XYZ grey{0.5 * white.X, 50.0, 0.5 * white.Z};
    LabColor glab = xyz_to_lab(grey, white);
    REQUIRE_THAT(glab.L, Catch::Matchers::WithinAbs(116.0 * std::cbrt(0.5) - 16.0, 1e-9));
    REQUIRE_THAT(glab.a, Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("ciede2000 reproduces published reference pairs") {
    struct Row {
        double l1, a1, b1, l2, a2, b2, de;
    };
    // canonical verification pairs for the formula's branch points
    const Row rows[] = {
        {50.0, 2.6772, -79.7751, 50.0, 0.0, -82.7485, 2.0425},
        {50.0, 3.1571, -77.2803, 50.0, 0.0, -82.7485, 2.8615},
        {50.0, 2.8361, -74.0200, 50.0, 0.0, -82.7485, 3.4412},
        {50.0, 0.0, 0.0, 50.0, -1.0, 2.0, 2.3669},
        {50.0, 2.5, 0.0, 73.0, 25.0, -18.0, 27.1492},
        {50.0, 2.5, 0.0, 61.0, -5.0, 29.0, 22.8977},
        {50.0, 2.5, 0.0, 56.0, -27.0, -3.0, 31.9030},
        {50.0, 2.5, 0.0, 58.0, 24.0, 15.0, 19.4535},
    };
    for (const auto& r : rows) {
        double de = ciede2000(lab_of(r.l1, r.a1, r.b1), lab_of(r.l2, r.a2, r.b2));
        REQUIRE_THAT(de, Catch::Matchers::WithinAbs(r.de, 1e-4));
    }
}

TEST_CASE("ciede2000 agrees with an independent implementation") {
    Pcg32 rng(77);
    for (int i = 0; i < 100; ++i) {
        double l1 = 100.0 * rng.uniform(), l2 = 100.0 * rng.uniform();
        double a1 = rng.uniform(-60.0, 60.0), a2 = rng.uniform(-60.0, 60.0);
        double b1 = rng.uniform(-60.0, 60.0), b2 = rng.uniform(-60.0, 60.0);
        double mine = ciede2000(lab_of(l1, a1, b1), lab_of(l2, a2, b2));
        double ref = oracles::ciede2000_ref(l1, a1, b1, l2, a2, b2);
        REQUIRE_THAT(mine, Catch::Matchers::WithinAbs(ref, 1e-6));
        // symmetry and identity
        REQUIRE_THAT(ciede2000(lab_of(l2, a2, b2), lab_of(l1, a1, b1)),
                     Catch::Matchers::WithinAbs(mine, 1e-10));
        REQUIRE(ciede2000(lab_of(l1, a1, b1), lab_of(l1, a1, b1)) == 0.0);
    }
}

TEST_CASE("ciede2000 rejects mismatched white points") {
    LabColor a = lab_of(50.0, 0.0, 0.0);
    LabColor b = lab_of(60.0, 0.0, 0.0);
    b.white.X += 1.0;
    REQUIRE_THROWS_AS(ciede2000(a, b), ConfigError);
}

TEST_CASE("camera loaders expose bundled sensor curves") {
    auto cam = xyz_camera();
    REQUIRE(cam.channel_count() == 3);
    REQUIRE(cam.grid() == default_grid());
    auto rgb = load_camera(data_dir() + "/cameras/rgb_gaussian.csv");
    REQUIRE(rgb.channel_count() == 3);
    for (const auto& ch : rgb.channels) REQUIRE(ch.values().minCoeff() >= 0.0);
}
