// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "specfold/common.hpp"

namespace specfold {

using Vec3 = Eigen::Vector3d;

/// One square surface element of a discretized panel.
struct Facet {
    Vec3 center;
    Vec3 normal;      // unit, faces into the cavity
    Vec3 tangent_u;   // unit, along the panel slope (away from the hinge)
    Vec3 tangent_v;   // unit, along the hinge
    double half_u = 0.0;
    double half_v = 0.0;

    double area() const { return 4.0 * half_u * half_v; }

    /// Point on the facet for local coordinates in [-1, 1]^2.
    Vec3 point(double su, double sv) const {
        return center + tangent_u * (su * half_u) + tangent_v * (sv * half_v);
    }
};

/// Two hinged square panels, each discretized into an n x n facet grid.
///
/// The hinge runs along the y axis and the cavity opens toward +x. Facets
/// are stored panel A first, then panel B; within a panel they are
/// row-major with the fold-adjacent row first, so facet (row i, col j) of
/// panel p sits at index p*n*n + i*n + j.
struct VCavity {
    double angle_deg = 45.0;
    double panel_side = 1.0;
    int facets_per_side = 10;
    std::vector<Facet> facets;

    int facet_count() const { return static_cast<int>(facets.size()); }
    int panel_facets() const { return facets_per_side * facets_per_side; }
    double facet_area() const { return facets.empty() ? 0.0 : facets[0].area(); }

    int index(int panel, int row, int col) const {
        return panel * panel_facets() + row * facets_per_side + col;
    }
};

/// Builds the V cavity for a dihedral angle in (0, 180] degrees; 180 is
/// the flat limit where both panels are coplanar.
inline VCavity build_v_cavity(double angle_deg, double panel_side = 1.0, int n = 10) {
    if (!(angle_deg > 0.0 && angle_deg <= 180.0))
        throw ConfigError("build_v_cavity: angle must be in (0, 180] degrees");
    require(n >= 1, "build_v_cavity: need n >= 1");
    require(panel_side > 0.0, "build_v_cavity: need panel_side > 0");

    const double half = 0.5 * angle_deg * kPi / 180.0;
    // cos(pi/2) evaluates to ~6e-17, not 0; snap so the 90 and 180 degree
    // cavities get exact axis-aligned geometry (the flat limit must produce
    // an exactly zero kernel).
    auto snap = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
    const double c = snap(std::cos(half)), s = snap(std::sin(half));
    // Panel directions away from the hinge; normals face the other panel.
    const Vec3 up_a(c, 0.0, s);
    const Vec3 up_b(c, 0.0, -s);
    const Vec3 n_a(s, 0.0, -c);
    const Vec3 n_b(s, 0.0, c);
    const Vec3 hinge(0.0, 1.0, 0.0);

    VCavity cav;
    cav.angle_deg = angle_deg;
    cav.panel_side = panel_side;
    cav.facets_per_side = n;
    cav.facets.reserve(2 * n * n);

    const double pitch = panel_side / n;
    for (int panel = 0; panel < 2; ++panel) {
        const Vec3& u = panel == 0 ? up_a : up_b;
        const Vec3& nrm = panel == 0 ? n_a : n_b;
        for (int row = 0; row < n; ++row) {
            for (int col = 0; col < n; ++col) {
                Facet f;
                f.center = u * ((row + 0.5) * pitch) + hinge * ((col + 0.5) * pitch);
                f.normal = nrm;
                f.tangent_u = u;
                f.tangent_v = hinge;
                f.half_u = f.half_v = 0.5 * pitch;
                cav.facets.push_back(f);
            }
        }
    }
    return cav;
}

/// Point-pair geometric coupling: cos(theta_i) cos(theta_j) / distance^2,
/// written with unnormalized difference vectors over distance^4. Clamped
/// to zero when either point faces away from the other.
inline double geometric_kernel_point(const Vec3& p_i, const Vec3& n_i,
                                     const Vec3& p_j, const Vec3& n_j) {
    Vec3 d = p_j - p_i;
    double d2 = d.squaredNorm();
    if (d2 == 0.0) throw NumericError("geometric_kernel_point: coincident points");
    double a = n_i.dot(d);
    double b = n_j.dot(-d);
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return a * b / (d2 * d2);
}

}  // namespace specfold
