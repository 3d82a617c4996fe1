// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "specfold/spectrum.hpp"

namespace specfold {

struct XYZ {
    double X = 0.0, Y = 0.0, Z = 0.0;
};

/// CIE 1931 2-degree standard observer curves on a shared grid.
struct ColorMatchingFunctions {
    Spectrum xbar, ybar, zbar;

    ColorMatchingFunctions() = default;
    ColorMatchingFunctions(Spectrum x, Spectrum y, Spectrum z)
        : xbar(std::move(x)), ybar(std::move(y)), zbar(std::move(z)) {
        require(xbar.grid() == ybar.grid() && ybar.grid() == zbar.grid(),
                "color matching functions must share one grid");
    }

    const WavelengthGrid& grid() const { return xbar.grid(); }
};

/// Per-channel sensor sensitivity curves on a shared grid.
struct CameraSensitivities {
    std::vector<Spectrum> channels;
    std::string id;

    int channel_count() const { return static_cast<int>(channels.size()); }
    const WavelengthGrid& grid() const { return channels.at(0).grid(); }

    void check() const {
        require(!channels.empty(), "camera needs at least one channel");
        for (const auto& c : channels)
            require(c.grid() == channels[0].grid(), "camera channels must share one grid");
    }
};

/// Blackbody radiance at temperature T, peak-normalized over the grid.
inline IlluminantSPD planckian_spd(double temperature_k, const WavelengthGrid& grid = default_grid()) {
    if (!(temperature_k > 0.0))
        throw ConfigError("planckian_spd: temperature must be > 0 K");
    constexpr double h = 6.62607015e-34;  // J s
    constexpr double c = 2.99792458e8;    // m/s
    constexpr double kb = 1.380649e-23;   // J/K
    Eigen::VectorXd v(grid.count());
    for (int i = 0; i < grid.count(); ++i) {
        double lm = grid.wavelength(i) * 1e-9;
        v[i] = (2.0 * h * c * c) / (std::pow(lm, 5) * std::expm1(h * c / (lm * kb * temperature_k)));
    }
    return IlluminantSPD(grid, v);  // peak-normalizes
}

/// One SPD per temperature, inclusive endpoints.
inline std::vector<IlluminantSPD> planckian_series(double t_min, double t_max, double step,
                                                   const WavelengthGrid& grid = default_grid()) {
    require(t_min <= t_max && step > 0.0, "planckian_series: need t_min <= t_max, step > 0");
    std::vector<IlluminantSPD> out;
    int n = static_cast<int>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(planckian_spd(t_min + i * step, grid));
    return out;
}

/// Tristimulus integration with the rectangle rule; the normalization
/// constant is chosen so a perfect reflector has Y = 100.
inline XYZ reflectance_to_xyz(const ReflectanceSpectrum& r, const IlluminantSPD& illum,
                              const ColorMatchingFunctions& cmf) {
    if (!(r.grid() == illum.grid()) || !(r.grid() == cmf.grid()))
        throw ConfigError("reflectance_to_xyz: grid mismatch");
    const auto& e = illum.values();
    double k = 100.0 / cmf.ybar.values().dot(e);
    Eigen::ArrayXd re = r.values().array() * e.array();
    return {k * (cmf.xbar.values().array() * re).sum(),
            k * (cmf.ybar.values().array() * re).sum(),
            k * (cmf.zbar.values().array() * re).sum()};
}

/// CIELAB coordinates under a declared reference white.
struct LabColor {
    double L = 0.0, a = 0.0, b = 0.0;
    XYZ white;
};

inline LabColor xyz_to_lab(const XYZ& c, const XYZ& white) {
    auto f = [](double t) {
        constexpr double delta = 6.0 / 29.0;
        return t > delta * delta * delta ? std::cbrt(t)
                                         : t / (3.0 * delta * delta) + 4.0 / 29.0;
    };
    double fx = f(c.X / white.X), fy = f(c.Y / white.Y), fz = f(c.Z / white.Z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz), white};
}

/// CIEDE2000 color difference. Both colors must share the reference white.
inline double ciede2000(const LabColor& c1, const LabColor& c2) {
    auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
    if (!near(c1.white.X, c2.white.X) || !near(c1.white.Y, c2.white.Y) ||
        !near(c1.white.Z, c2.white.Z))
        throw ConfigError("ciede2000: colors must share a reference white");

    const double L1 = c1.L, a1 = c1.a, b1 = c1.b;
    const double L2 = c2.L, a2 = c2.a, b2 = c2.b;

    double C1 = std::hypot(a1, b1), C2 = std::hypot(a2, b2);
    double Cbar = 0.5 * (C1 + C2);
    double Cbar7 = std::pow(Cbar, 7);
    double G = 0.5 * (1.0 - std::sqrt(Cbar7 / (Cbar7 + std::pow(25.0, 7))));
    double a1p = (1.0 + G) * a1, a2p = (1.0 + G) * a2;
    double C1p = std::hypot(a1p, b1), C2p = std::hypot(a2p, b2);

    auto hue = [](double ap, double b) {
        if (ap == 0.0 && b == 0.0) return 0.0;
        double h = std::atan2(b, ap);
        return h < 0.0 ? h + 2.0 * kPi : h;
    };
    double h1p = hue(a1p, b1), h2p = hue(a2p, b2);

    double dLp = L2 - L1;
    double dCp = C2p - C1p;
    double dhp = 0.0;
    if (C1p * C2p != 0.0) {
        dhp = h2p - h1p;
        if (dhp > kPi) dhp -= 2.0 * kPi;
        if (dhp < -kPi) dhp += 2.0 * kPi;
    }
    double dHp = 2.0 * std::sqrt(C1p * C2p) * std::sin(0.5 * dhp);

    double Lbp = 0.5 * (L1 + L2);
    double Cbp = 0.5 * (C1p + C2p);
    double hbp;
    if (C1p * C2p == 0.0) {
        hbp = h1p + h2p;
    } else if (std::abs(h1p - h2p) <= kPi) {
        hbp = 0.5 * (h1p + h2p);
    } else if (h1p + h2p < 2.0 * kPi) {
        hbp = 0.5 * (h1p + h2p) + kPi;
    } else {
        hbp = 0.5 * (h1p + h2p) - kPi;
    }

    auto deg = [](double d) { return d * kPi / 180.0; };
    double T = 1.0 - 0.17 * std::cos(hbp - deg(30.0)) + 0.24 * std::cos(2.0 * hbp) +
               0.32 * std::cos(3.0 * hbp + deg(6.0)) - 0.20 * std::cos(4.0 * hbp - deg(63.0));

    double hbp_deg = hbp * 180.0 / kPi;
    double dtheta = deg(30.0) * std::exp(-std::pow((hbp_deg - 275.0) / 25.0, 2));
    double Cbp7 = std::pow(Cbp, 7);
    double RC = 2.0 * std::sqrt(Cbp7 / (Cbp7 + std::pow(25.0, 7)));
    double Lterm = (Lbp - 50.0) * (Lbp - 50.0);
    double SL = 1.0 + 0.015 * Lterm / std::sqrt(20.0 + Lterm);
    double SC = 1.0 + 0.045 * Cbp;
    double SH = 1.0 + 0.015 * Cbp * T;
    double RT = -std::sin(2.0 * dtheta) * RC;

    double tL = dLp / SL, tC = dCp / SC, tH = dHp / SH;
    return std::sqrt(tL * tL + tC * tC + tH * tH + RT * tC * tH);
}

}  // namespace specfold
