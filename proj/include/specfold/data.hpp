// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include "specfold/colorimetry.hpp"
#include "specfold/csv.hpp"
#include "specfold/spectrum.hpp"

namespace specfold {

/// Root of the bundled data tables. The SPECFOLD_DATA_DIR environment
/// variable overrides the build-time default.
inline std::string data_dir() {
    if (const char* env = std::getenv("SPECFOLD_DATA_DIR")) return env;
#ifdef SPECFOLD_DATA_DIR
    return SPECFOLD_DATA_DIR;
#else
    return "data";
#endif
}

namespace detail {

inline std::vector<std::pair<double, double>> column_pairs(const SpectralTable& t, std::size_t c) {
    std::vector<std::pair<double, double>> raw(t.wavelengths.size());
    for (std::size_t r = 0; r < t.wavelengths.size(); ++r)
        raw[r] = {t.wavelengths[r], t.columns[c][r]};
    return raw;
}

}  // namespace detail

struct ReflectanceLoad {
    std::vector<ReflectanceSpectrum> spectra;
    std::vector<std::string> ids;
    std::vector<std::string> warnings;
};

/// Loads a reflectance table (one patch per column), resampled to the
/// grid and clamped into [0, 1]. Values above 1.05 before clamping are
/// reported as data-sanity warnings, not errors.
inline ReflectanceLoad load_reflectances(const std::string& path,
                                         const WavelengthGrid& grid = default_grid()) {
    SpectralTable t = read_spectral_csv(path);
    ReflectanceLoad out;
    if (t.wavelengths.empty()) return out;  // empty file -> empty list
    for (std::size_t c = 0; c < t.column_count(); ++c) {
        Spectrum s = resample_spectrum(detail::column_pairs(t, c), grid);
        if (s.values().maxCoeff() > 1.05)
            out.warnings.push_back("column " + t.column_names[c] + " exceeds 1.05 (max " +
                                   std::to_string(s.values().maxCoeff()) + "), clamped");
        out.spectra.push_back(ReflectanceSpectrum::clamped(grid, s.values()));
        out.ids.push_back(t.column_names[c]);
    }
    return out;
}

inline IlluminantSPD load_illuminant(const std::string& path,
                                     const WavelengthGrid& grid = default_grid()) {
    SpectralTable t = read_spectral_csv(path);
    if (t.column_count() != 1)
        throw IngestError("illuminant CSV must have exactly one value column: " + path);
    return IlluminantSPD(grid, resample_spectrum(detail::column_pairs(t, 0), grid).values());
}

inline ColorMatchingFunctions load_cmfs(const std::string& path,
                                        const WavelengthGrid& grid = default_grid()) {
    SpectralTable t = read_spectral_csv(path);
    if (t.column_count() != 3)
        throw IngestError("CMF CSV must have exactly three value columns: " + path);
    return {resample_spectrum(detail::column_pairs(t, 0), grid),
            resample_spectrum(detail::column_pairs(t, 1), grid),
            resample_spectrum(detail::column_pairs(t, 2), grid)};
}

inline CameraSensitivities load_camera(const std::string& path,
                                       const WavelengthGrid& grid = default_grid()) {
    SpectralTable t = read_spectral_csv(path);
    if (t.column_count() == 0)
        throw IngestError("camera CSV needs at least one value column: " + path);
    CameraSensitivities cam;
    for (std::size_t c = 0; c < t.column_count(); ++c)
        cam.channels.push_back(resample_spectrum(detail::column_pairs(t, c), grid));
    cam.id = path;
    cam.check();
    return cam;
}

// Bundled standard tables.
inline ColorMatchingFunctions cie_1931_cmfs(const WavelengthGrid& grid = default_grid()) {
    return load_cmfs(data_dir() + "/cie_1931_2deg_cmf.csv", grid);
}

inline IlluminantSPD cie_d65(const WavelengthGrid& grid = default_grid()) {
    return load_illuminant(data_dir() + "/illuminants/d65.csv", grid);
}

inline IlluminantSPD cie_d50(const WavelengthGrid& grid = default_grid()) {
    return load_illuminant(data_dir() + "/illuminants/d50.csv", grid);
}

/// The CMF curves used as a three-channel sensor, the configuration of
/// the simulated experiments.
inline CameraSensitivities xyz_camera(const WavelengthGrid& grid = default_grid()) {
    auto cmf = cie_1931_cmfs(grid);
    CameraSensitivities cam;
    cam.channels = {cmf.xbar, cmf.ybar, cmf.zbar};
    cam.id = "xyz";
    return cam;
}

/// Bundled 1269-patch reflectance corpus.
inline ReflectanceLoad bundled_reflectances(const WavelengthGrid& grid = default_grid()) {
    return load_reflectances(data_dir() + "/reflectances_1269.csv", grid);
}

}  // namespace specfold
