// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "specfold/colorimetry.hpp"
#include "specfold/spectrum.hpp"

namespace specfold {

/// Builds an SPD E' such that a perfect-white flat surface under E'
/// produces exactly the sensor response of surface r under illum, i.e.
/// C E' = C (r .* illum) with E' >= 0 and minimal L2 norm.
///
/// Solved with Dykstra's alternating projections between the affine
/// constraint set and the non-negative orthant; starting from 0, the
/// limit is the projection of the origin onto the intersection, which
/// is the minimum-norm point. r .* illum is itself feasible, so the
/// intersection is non-empty for any physical camera.
///
/// The result is returned at its natural scale (not peak-normalized):
/// rescaling would break the sensor match the construction is for.
inline IlluminantSPD construct_metameric_light(const ReflectanceSpectrum& r,
                                               const IlluminantSPD& illum,
                                               const CameraSensitivities& cam,
                                               int max_iters = 20000, double tol = 1e-11) {
    cam.check();
    require(r.grid() == illum.grid() && r.grid() == cam.grid(),
            "construct_metameric_light: grid mismatch");
    const int q = r.size();
    const int s = cam.channel_count();
    require(s < q, "construct_metameric_light: camera must have fewer channels than wavelengths");

    // A perfect reflector is its own metamer under the same light.
    if ((r.values().array() == 1.0).all()) return illum;

    Eigen::MatrixXd a(s, q);
    for (int ch = 0; ch < s; ++ch) a.row(ch) = cam.channels[ch].values().transpose();
    const Eigen::VectorXd b = a * r.values().cwiseProduct(illum.values());

    Eigen::LLT<Eigen::MatrixXd> gram(a * a.transpose());
    if (gram.info() != Eigen::Success)
        throw NumericError("construct_metameric_light: camera channels are linearly dependent");
    auto project_affine = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return x - a.transpose() * gram.solve(a * x - b);
    };

    const double b_scale = std::max(b.norm(), 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(q);  // correction for the affine set
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q);  // correction for the orthant
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = project_affine(x + p);
        p = x + p - y;
        Eigen::VectorXd z = (y + u).cwiseMax(0.0);
        u = y + u - z;
        double moved = (z - x).norm();
        x = z;
        if (moved < tol * b_scale && (a * x - b).norm() < tol * b_scale) break;
    }
    if ((a * x - b).norm() > 1e-8 * b_scale)
        throw NumericError("construct_metameric_light: no non-negative metamer found");
    return IlluminantSPD::unnormalized(r.grid(), x.cwiseMax(0.0));
}

}  // namespace specfold
