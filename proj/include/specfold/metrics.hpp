// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "specfold/colorimetry.hpp"
#include "specfold/spectrum.hpp"

namespace specfold {

inline double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size() && a.size() > 0, "rmse: length mismatch");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

/// 1 minus the Pearson correlation: shape-sensitive, scale-insensitive,
/// in [0, 2]. A constant vector has no defined correlation; two
/// constants count as a perfect match (0), one constant as a total
/// mismatch (2, the anticorrelated extreme is the conservative report).
inline double pearson_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size() && a.size() > 1, "pearson_distance: need length >= 2");
    Eigen::VectorXd da = a.array() - a.mean();
    Eigen::VectorXd db = b.array() - b.mean();
    double na = da.norm(), nb = db.norm();
    if (na == 0.0 && nb == 0.0) return 0.0;
    if (na == 0.0 || nb == 0.0) return 2.0;
    return 1.0 - da.dot(db) / (na * nb);
}

/// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value.
inline double percentile_nearest_rank(std::vector<double> values, double p) {
    require(!values.empty(), "percentile: empty sample");
    require(p > 0.0 && p <= 100.0, "percentile: p must be in (0, 100]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[rank - 1];
}

/// CIEDE2000 between two reflectances, both rendered under the given
/// illuminant and observer (the evaluation protocol fixes D65 / 2 deg).
inline double reflectance_de00(const ReflectanceSpectrum& truth, const ReflectanceSpectrum& est,
                               const IlluminantSPD& illum, const ColorMatchingFunctions& cmf) {
    XYZ white = reflectance_to_xyz(ReflectanceSpectrum::constant(1.0, truth.grid()), illum, cmf);
    return ciede2000(xyz_to_lab(reflectance_to_xyz(truth, illum, cmf), white),
                     xyz_to_lab(reflectance_to_xyz(est, illum, cmf), white));
}

struct MetricAggregate {
    double avg = 0.0;
    double max = 0.0;
    double p95 = 0.0;

    static MetricAggregate of(const std::vector<double>& values) {
        MetricAggregate m;
        if (values.empty()) return m;
        for (double v : values) {
            m.avg += v;
            m.max = std::max(m.max, v);
        }
        m.avg /= static_cast<double>(values.size());
        m.p95 = percentile_nearest_rank(values, 95.0);
        return m;
    }
};

/// Per-sample and aggregate errors of reflectance estimates (plus SPD
/// estimates when present) against ground truth.
struct EvalReport {
    std::vector<double> refl_rmse, refl_pd, refl_de00;
    std::vector<double> spd_rmse;  // empty when no SPD estimates were made
    MetricAggregate rmse, pd, de00, spd;

    int count() const { return static_cast<int>(refl_rmse.size()); }
    bool has_spd() const { return !spd_rmse.empty(); }

    void finalize() {
        rmse = MetricAggregate::of(refl_rmse);
        pd = MetricAggregate::of(refl_pd);
        de00 = MetricAggregate::of(refl_de00);
        spd = MetricAggregate::of(spd_rmse);
    }
};

/// Scores one estimate against its target; DE00 under the supplied
/// illuminant/observer. SPD pairs are compared on their stored values.
inline void score_sample(EvalReport& report, const ReflectanceSpectrum& r_true,
                         const ReflectanceSpectrum& r_est, const IlluminantSPD& de00_illum,
                         const ColorMatchingFunctions& cmf) {
    report.refl_rmse.push_back(rmse(r_true.values(), r_est.values()));
    report.refl_pd.push_back(pearson_distance(r_true.values(), r_est.values()));
    report.refl_de00.push_back(reflectance_de00(r_true, r_est, de00_illum, cmf));
}

}  // namespace specfold
