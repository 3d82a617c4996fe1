// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Generates the bundled corpus of 1269 smooth surface reflectances.
// Spectra are drawn from a fixed-seed generative model (broadband level
// + rapidly decaying cosine modes + an occasional sigmoidal band edge,
// clamped into [0.02, 0.98]) chosen so the corpus matches the familiar
// statistics of matte paint chips: values in [0,1], smooth curves, and
// an effective linear dimensionality of roughly eight.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "specfold/csv.hpp"
#include "specfold/rng.hpp"
#include "specfold/spectrum.hpp"

using namespace specfold;

int main(int argc, char** argv) {
    std::string out_path = argc > 1 ? argv[1] : "data/reflectances_1269.csv";
    const int count = 1269;
    const WavelengthGrid grid = default_grid();
    const int q = grid.count();

    SpectralTable t;
    t.wavelengths.resize(q);
    for (int i = 0; i < q; ++i) t.wavelengths[i] = grid.wavelength(i);

    for (int s = 0; s < count; ++s) {
        Pcg32 rng(mix_seed(0x5eedc0de, static_cast<std::uint64_t>(s)));

        double level = 0.06 + 0.72 * rng.uniform();
        const int modes = 10;
        std::vector<double> amp(modes);
        for (int j = 0; j < modes; ++j)
            amp[j] = 0.16 * std::pow(0.62, j) * normal(rng);
        bool edged = rng.uniform() < 0.55;
        double edge_gain = rng.uniform(-0.45, 0.65);
        double edge_pos = rng.uniform(0.15, 0.85);
        double edge_width = rng.uniform(0.04, 0.16);

        std::vector<double> col(q);
        for (int i = 0; i < q; ++i) {
            double tt = static_cast<double>(i) / (q - 1);
            double v = level;
            for (int j = 0; j < modes; ++j) v += amp[j] * std::cos((j + 1) * kPi * tt);
            if (edged) v += edge_gain / (1.0 + std::exp(-(tt - edge_pos) / edge_width));
            col[i] = std::min(0.98, std::max(0.02, v));
        }
        t.columns.push_back(std::move(col));
        char name[16];
        std::snprintf(name, sizeof name, "r%04d", s + 1);
        t.column_names.emplace_back(name);
    }

    write_spectral_csv(out_path, t);
    std::printf("wrote %d spectra to %s\n", count, out_path.c_str());
    return 0;
}
