// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "oracles.hpp"
#include "specfold/csv.hpp"
#include "specfold/data.hpp"
#include "specfold/rng.hpp"
#include "specfold/spectrum.hpp"

using namespace specfold;

TEST_CASE("default grid is 400-700 nm at 5 nm with 61 samples") {
    WavelengthGrid g = default_grid();
    REQUIRE(g.count() == 61);
    REQUIRE(g.wavelength(0) == 400.0);
    REQUIRE(g.wavelength(60) == 700.0);
    REQUIRE(g.wavelength(32) == 560.0);
}

TEST_CASE("spectrum validation rejects bad values") {
    WavelengthGrid g;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(61);
    v[3] = -0.1;
    REQUIRE_THROWS_AS(Spectrum(g, v), ConfigError);
    v[3] = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(Spectrum(g, v), ConfigError);
    REQUIRE_THROWS_AS(Spectrum(g, Eigen::VectorXd::Zero(60)), ConfigError);
}

TEST_CASE("reflectance accepts [0,1] and rejects above 1") {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(61, 0.5);
    REQUIRE_NOTHROW(ReflectanceSpectrum(default_grid(), v));
    v[10] = 1.2;
    REQUIRE_THROWS_AS(ReflectanceSpectrum(default_grid(), v), ConfigError);
    auto c = ReflectanceSpectrum::clamped(default_grid(), v);
    REQUIRE(c[10] == 1.0);
}

TEST_CASE("illuminant SPD is peak-normalized") {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(61, 4.0);
    v[20] = 8.0;
    IlluminantSPD s(default_grid(), v);
    REQUIRE(s.values().maxCoeff() == 1.0);
    REQUIRE(s[0] == 0.5);
    REQUIRE_THROWS_AS(IlluminantSPD(default_grid(), Eigen::VectorXd::Zero(61)), ConfigError);
}

TEST_CASE("unnormalized SPD keeps its scale") {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(61, 0.25);
    auto s = IlluminantSPD::unnormalized(default_grid(), v);
    REQUIRE(s.values().maxCoeff() == 0.25);
}

TEST_CASE("resampling matches a dense interpolation oracle") {
    // 1 nm-pitch smooth curve resampled to the 5 nm grid
    std::vector<std::pair<double, double>> raw;
    for (int w = 395; w <= 705; ++w) {
        double t = (w - 400.0) / 300.0;
        raw.emplace_back(w, 0.3 + 0.2 * std::sin(5.0 * t) + 0.1 * t);
    }
    Spectrum s = resample_spectrum(raw, default_grid());
    for (int i = 0; i < 61; ++i) {
        double expect = oracles::interp_at(raw, default_grid().wavelength(i));
        REQUIRE_THAT(s[i], Catch::Matchers::WithinAbs(expect, 1e-12));
    }
}

TEST_CASE("resampling interpolates between coarse samples") {
    std::vector<std::pair<double, double>> raw = {{400.0, 0.0}, {700.0, 1.0}};
    Spectrum s = resample_spectrum(raw, default_grid());
    REQUIRE_THAT(s.value_at(550.0), Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(s[6], Catch::Matchers::WithinAbs(0.1, 1e-12));
}

TEST_CASE("resampling rejects unsorted and short-span input") {
    std::vector<std::pair<double, double>> bad = {{400.0, 0.1}, {400.0, 0.2}, {700.0, 0.2}};
    REQUIRE_THROWS_AS(resample_spectrum(bad, default_grid()), IngestError);
    std::vector<std::pair<double, double>> shortspan = {{450.0, 0.1}, {700.0, 0.2}};
    REQUIRE_THROWS_AS(resample_spectrum(shortspan, default_grid()), IngestError);
}

TEST_CASE("rmse and pearson distance behave as metrics") {
    Pcg32 rng(5);
    Eigen::VectorXd a(61), b(61);
    for (int i = 0; i < 61; ++i) {
        a[i] = 0.2 + 0.6 * rng.uniform();
        b[i] = 0.2 + 0.6 * rng.uniform();
    }
    Spectrum sa(default_grid(), a), sb(default_grid(), b);
    REQUIRE(rmse(sa, sa) == 0.0);
    REQUIRE_THAT(rmse(sa, sb),
                 Catch::Matchers::WithinAbs(std::sqrt((a - b).squaredNorm() / 61.0), 1e-14));

    REQUIRE_THAT(pearson_distance(sa, sa), Catch::Matchers::WithinAbs(0.0, 1e-12));
    // positive affine rescaling leaves the centered distance unchanged
    Spectrum sa2(default_grid(), (2.0 * a.array() + 0.05).matrix());
    REQUIRE_THAT(pearson_distance(sa, sa2), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE(pearson_distance(sa, sb) > 0.0);

    Spectrum flat = Spectrum::constant(0.5);
    REQUIRE_THROWS_AS(pearson_distance(flat, sb), NumericError);
}

TEST_CASE("spectral csv round trip") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "specfold_table.csv").string();
    SpectralTable t;
    for (int i = 0; i < 61; ++i) t.wavelengths.push_back(default_grid().wavelength(i));
    t.column_names = {"one", "two"};
    t.columns.resize(2);
    Pcg32 rng(3);
    for (int i = 0; i < 61; ++i) {
        t.columns[0].push_back(rng.uniform());
        t.columns[1].push_back(rng.uniform());
    }
    write_spectral_csv(path, t);
    SpectralTable u = read_spectral_csv(path);
    REQUIRE(u.column_names == t.column_names);
    REQUIRE(u.wavelengths.size() == 61);
    for (int i = 0; i < 61; ++i)
        REQUIRE_THAT(u.columns[1][i], Catch::Matchers::WithinAbs(t.columns[1][i], 1e-10));
    fs::remove(path);
}

TEST_CASE("spectral csv rejects malformed input") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "specfold_bad.csv").string();
    {
        std::ofstream out(path);
        out << "nm,v\n400,0.5\n";
    }
    REQUIRE_THROWS_AS(read_spectral_csv(path), IngestError);
    {
        std::ofstream out(path);
        out << "wavelength_nm,v\n400,0.5\n395,0.6\n";
    }
    REQUIRE_THROWS_AS(read_spectral_csv(path), IngestError);
    {
        std::ofstream out(path);
        out << "wavelength_nm,v\n400,abc\n";
    }
    REQUIRE_THROWS_AS(read_spectral_csv(path), IngestError);
    {
        std::ofstream out(path);
        out << "wavelength_nm,v\n400,0.5,0.7\n";
    }
    REQUIRE_THROWS_AS(read_spectral_csv(path), IngestError);
    fs::remove(path);
}

TEST_CASE("empty csv yields an empty table") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "specfold_empty.csv").string();
    { std::ofstream out(path); }
    SpectralTable t = read_spectral_csv(path);
    REQUIRE(t.wavelengths.empty());
    REQUIRE(t.column_count() == 0);
    fs::remove(path);
}

TEST_CASE("bundled reflectance corpus loads with 1269 valid spectra") {
    auto load = bundled_reflectances();
    REQUIRE(load.spectra.size() == 1269);
    for (const auto& r : load.spectra) {
        REQUIRE(r.size() == 61);
        REQUIRE(r.values().minCoeff() >= 0.0);
        REQUIRE(r.values().maxCoeff() <= 1.0);
    }
    REQUIRE(load.ids.size() == 1269);
    REQUIRE(load.ids[0] != load.ids[1]);
}
