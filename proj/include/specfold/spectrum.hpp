// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "specfold/common.hpp"

namespace specfold {

/// Uniform wavelength sampling grid in nanometres.
struct WavelengthGrid {
    double start_nm = 400.0;
    double end_nm = 700.0;
    double step_nm = 5.0;

    int count() const {
        return static_cast<int>(std::lround((end_nm - start_nm) / step_nm)) + 1;
    }

    double wavelength(int i) const { return start_nm + step_nm * i; }

    bool operator==(const WavelengthGrid& o) const {
        return start_nm == o.start_nm && end_nm == o.end_nm && step_nm == o.step_nm;
    }
};

/// The working grid: 400-700 nm at 5 nm pitch, 61 samples.
inline WavelengthGrid default_grid() { return {}; }

/// A sampled function of wavelength. Values are finite and non-negative.
class Spectrum {
public:
    Spectrum() : grid_(default_grid()), values_(Eigen::VectorXd::Zero(grid_.count())) {}

    Spectrum(WavelengthGrid grid, Eigen::VectorXd values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.count())
            throw ConfigError("spectrum length does not match its grid");
        for (Eigen::Index i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]) || values_[i] < 0.0)
                throw ConfigError("spectrum values must be finite and >= 0");
        }
    }

    static Spectrum constant(double v, WavelengthGrid grid = default_grid()) {
        return Spectrum(grid, Eigen::VectorXd::Constant(grid.count(), v));
    }

    const WavelengthGrid& grid() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int i) const { return values_[i]; }
    int size() const { return static_cast<int>(values_.size()); }

    double value_at(double wavelength_nm) const {
        int i = static_cast<int>(std::lround((wavelength_nm - grid_.start_nm) / grid_.step_nm));
        require(i >= 0 && i < size(), "wavelength outside grid");
        return values_[i];
    }

protected:
    WavelengthGrid grid_;
    Eigen::VectorXd values_;
};

/// Surface spectral reflectance; each value lies in [0, 1].
class ReflectanceSpectrum : public Spectrum {
public:
    ReflectanceSpectrum() = default;

    ReflectanceSpectrum(WavelengthGrid grid, Eigen::VectorXd values)
        : Spectrum(grid, std::move(values)) {
        if ((values_.array() > 1.0).any())
            throw ConfigError("reflectance values must be <= 1");
    }

    static ReflectanceSpectrum constant(double v, WavelengthGrid grid = default_grid()) {
        return ReflectanceSpectrum(grid, Eigen::VectorXd::Constant(grid.count(), v));
    }

    /// Clamps into [0, 1] before construction.
    static ReflectanceSpectrum clamped(WavelengthGrid grid, Eigen::VectorXd values) {
        return ReflectanceSpectrum(grid, values.cwiseMax(0.0).cwiseMin(1.0));
    }
};

/// Illuminant spectral power distribution, peak-normalized so max() == 1.
class IlluminantSPD : public Spectrum {
public:
    IlluminantSPD() = default;

    /// Normalizes on construction; an all-zero SPD is rejected.
    IlluminantSPD(WavelengthGrid grid, Eigen::VectorXd values)
        : Spectrum(grid, std::move(values)) {
        double peak = values_.maxCoeff();
        if (peak <= 0.0) throw ConfigError("illuminant SPD is identically zero");
        values_ /= peak;
    }

    /// Keeps the caller's scale, and permits the all-zero SPD. For SPDs
    /// whose absolute level carries meaning (a constructed metamer must
    /// match sensor responses exactly, and may legitimately be dark);
    /// everything ingested from files stays peak-normalized.
    static IlluminantSPD unnormalized(WavelengthGrid grid, Eigen::VectorXd values) {
        IlluminantSPD s;
        s.grid_ = grid;
        s.values_ = std::move(values);
        if (s.values_.size() != s.grid_.count())
            throw ConfigError("spectrum length does not match its grid");
        for (Eigen::Index i = 0; i < s.values_.size(); ++i)
            if (!std::isfinite(s.values_[i]) || s.values_[i] < 0.0)
                throw ConfigError("spectrum values must be finite and >= 0");
        return s;
    }
};

/// Linear interpolation of (wavelength, value) pairs onto a grid.
/// The raw samples must be sorted and cover the full grid span.
inline Spectrum resample_spectrum(const std::vector<std::pair<double, double>>& raw,
                                  const WavelengthGrid& grid) {
    if (raw.size() < 2) throw IngestError("resample needs at least two samples");
    for (std::size_t i = 1; i < raw.size(); ++i)
        if (raw[i].first <= raw[i - 1].first)
            throw IngestError("resample input wavelengths must be strictly increasing");
    if (raw.front().first > grid.start_nm + 1e-9 || raw.back().first < grid.end_nm - 1e-9)
        throw IngestError("resample input does not cover the target grid");

    Eigen::VectorXd out(grid.count());
    std::size_t j = 0;
    for (int i = 0; i < grid.count(); ++i) {
        double w = grid.wavelength(i);
        while (j + 2 < raw.size() && raw[j + 1].first < w) ++j;
        double w0 = raw[j].first, w1 = raw[j + 1].first;
        double t = std::clamp((w - w0) / (w1 - w0), 0.0, 1.0);
        out[i] = std::max(0.0, raw[j].second + t * (raw[j + 1].second - raw[j].second));
    }
    return Spectrum(grid, out);
}

/// Root mean square difference over the shared grid.
inline double rmse(const Spectrum& a, const Spectrum& b) {
    if (!(a.grid() == b.grid())) throw ConfigError("rmse: grid mismatch");
    return std::sqrt((a.values() - b.values()).squaredNorm() / a.size());
}

/// One minus the centered Pearson correlation; in [0, 2]. Shape-sensitive,
/// insensitive to positive affine rescaling. The uncentered (cosine)
/// variant is available but off by default.
inline double pearson_distance(const Spectrum& a, const Spectrum& b, bool centered = true) {
    if (!(a.grid() == b.grid())) throw ConfigError("pearson_distance: grid mismatch");
    Eigen::VectorXd x = a.values(), y = b.values();
    if (centered) {
        x.array() -= x.mean();
        y.array() -= y.mean();
    }
    double nx = x.norm(), ny = y.norm();
    if (nx == 0.0 || ny == 0.0)
        throw NumericError("pearson_distance: correlation undefined for a constant spectrum");
    return 1.0 - x.dot(y) / (nx * ny);
}

}  // namespace specfold
