// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "specfold/data.hpp"
#include "specfold/metrics.hpp"

using namespace specfold;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("rmse matches a scalar loop") {
    Eigen::VectorXd a(4), b(4);
    a << 0.1, 0.4, 0.9, 0.2;
    b << 0.2, 0.2, 0.9, 0.6;
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    REQUIRE_THAT(rmse(a, b), WithinRel(std::sqrt(acc / 4.0), 1e-14));
    REQUIRE(rmse(a, a) == 0.0);
    REQUIRE_THROWS_AS(rmse(a, Eigen::VectorXd::Zero(3)), ConfigError);
}

TEST_CASE("pearson distance is scale-blind and shape-sensitive") {
    Eigen::VectorXd a(5);
    a << 0.1, 0.3, 0.2, 0.8, 0.5;
    REQUIRE_THAT(pearson_distance(a, a), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(pearson_distance(a, 3.0 * a), WithinAbs(0.0, 1e-13));
    Eigen::VectorXd shifted = a.array() + 0.1;
    REQUIRE_THAT(pearson_distance(a, shifted), WithinAbs(0.0, 1e-13));
    Eigen::VectorXd flipped = -a;
    REQUIRE_THAT(pearson_distance(a, flipped), WithinAbs(2.0, 1e-13));
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 0.4);
    REQUIRE(pearson_distance(flat, flat) == 0.0);
    REQUIRE(pearson_distance(a, flat) == 2.0);
}

TEST_CASE("nearest-rank percentile picks exact order statistics") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(static_cast<double>(i));
    REQUIRE(percentile_nearest_rank(v, 95.0) == 95.0);
    REQUIRE(percentile_nearest_rank(v, 100.0) == 100.0);
    REQUIRE(percentile_nearest_rank(v, 1.0) == 1.0);
    REQUIRE(percentile_nearest_rank({7.0, 3.0, 5.0}, 95.0) == 7.0);  // ceil(2.85) = 3rd of 3
    REQUIRE(percentile_nearest_rank({7.0, 3.0, 5.0}, 50.0) == 5.0);
    REQUIRE_THROWS_AS(percentile_nearest_rank({}, 95.0), ConfigError);
    REQUIRE_THROWS_AS(percentile_nearest_rank({1.0}, 0.0), ConfigError);
}

TEST_CASE("identical spectra score zero on every metric") {
    auto corpus = bundled_reflectances();
    auto cmf = cie_1931_cmfs();
    auto d65 = cie_d65();
    EvalReport rep;
    for (int i = 0; i < 6; ++i)
        score_sample(rep, corpus.spectra[i], corpus.spectra[i], d65, cmf);
    rep.finalize();
    REQUIRE(rep.count() == 6);
    CHECK(rep.rmse.avg == 0.0);
    CHECK(rep.rmse.max == 0.0);
    CHECK(rep.pd.avg < 1e-12);
    CHECK(rep.de00.avg == 0.0);
    CHECK_FALSE(rep.has_spd());
}

TEST_CASE("de00 wrapper responds to visible reflectance differences") {
    auto cmf = cie_1931_cmfs();
    auto d65 = cie_d65();
    auto corpus = bundled_reflectances();
    const auto& r = corpus.spectra[10];
    // A 2% uniform offset is a small but clearly nonzero color shift.
    ReflectanceSpectrum off =
        ReflectanceSpectrum::clamped(r.grid(), r.values().array() + 0.02);
    double de = reflectance_de00(r, off, d65, cmf);
    CHECK(de > 0.1);
    CHECK(de < 10.0);
    CHECK(reflectance_de00(r, r, d65, cmf) == 0.0);
}

TEST_CASE("aggregates combine per-sample values correctly") {
    EvalReport rep;
    rep.refl_rmse = {0.01, 0.03, 0.02};
    rep.refl_pd = {0.1, 0.1, 0.1};
    rep.refl_de00 = {1.0, 3.0, 2.0};
    rep.spd_rmse = {0.5, 0.7};
    rep.finalize();
    CHECK_THAT(rep.rmse.avg, WithinRel(0.02, 1e-14));
    CHECK(rep.rmse.max == 0.03);
    CHECK(rep.rmse.p95 == 0.03);
    CHECK(rep.de00.p95 == 3.0);
    CHECK_THAT(rep.spd.avg, WithinRel(0.6, 1e-14));
    CHECK(rep.has_spd());
}
