// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "specfold/cavity.hpp"
#include "specfold/colorimetry.hpp"
#include "specfold/kernel.hpp"
#include "specfold/spectrum.hpp"

namespace specfold {

/// Per-wavelength irradiance (or radiance) on every facet, in relative
/// energy units: column l holds the m-vector for grid wavelength l.
struct IrradianceField {
    WavelengthGrid grid;
    Eigen::MatrixXd field;  // m x grid.count()

    int facet_count() const { return static_cast<int>(field.rows()); }
};

/// Linear sensor responses per facet: m x s.
struct RenderedPatch {
    Eigen::MatrixXd rho;

    int facet_count() const { return static_cast<int>(rho.rows()); }
    int channel_count() const { return static_cast<int>(rho.cols()); }
};

/// One panel of a rendered patch as an n x n x s image, fold-adjacent
/// row first.
struct PanelImage {
    int n = 0;
    int channels = 0;
    Eigen::MatrixXd data;  // (n*n) x s, row-major facet order

    double operator()(int row, int col, int ch) const { return data(row * n + col, ch); }
    double& at(int row, int col, int ch) { return data(row * n + col, ch); }
};

/// Collimated frontal source: every facet receives the same direct
/// irradiance, equal to the SPD value at each wavelength.
inline IrradianceField direct_irradiance(const IlluminantSPD& illum, int m) {
    require(m >= 1, "direct_irradiance: need m >= 1");
    IrradianceField f;
    f.grid = illum.grid();
    f.field = Eigen::VectorXd::Ones(m) * illum.values().transpose();
    return f;
}

/// Cumulated irradiance after n bounces: sum_{b=0..n} (K r)^b E0 per
/// wavelength. n = 0 returns the direct field unchanged.
inline IrradianceField nbounce_irradiance(const KernelMatrix& km, const ReflectanceSpectrum& r,
                                          const IrradianceField& e0, int bounces) {
    require(bounces >= 0, "nbounce_irradiance: bounces >= 0");
    require(km.size() == e0.facet_count(), "nbounce_irradiance: matrix/field size mismatch");
    require(r.grid() == e0.grid, "nbounce_irradiance: grid mismatch");
    IrradianceField out;
    out.grid = e0.grid;
    out.field.resizeLike(e0.field);
    const int q = static_cast<int>(e0.field.cols());
    for (int l = 0; l < q; ++l) {
        Eigen::VectorXd term = e0.field.col(l);
        Eigen::VectorXd acc = term;
        const double rl = r[l];
        for (int b = 1; b <= bounces; ++b) {
            term = rl * (km.k * term);
            acc += term;
        }
        out.field.col(l) = acc;
    }
    return out;
}

namespace detail {

inline double spectral_radius_estimate(const Eigen::MatrixXd& k) {
    if (k.size() == 0 || k.norm() == 0.0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(k.rows()).normalized();
    double mu = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd w = k * v;
        double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        mu = nw;
    }
    return mu;
}

}  // namespace detail

/// Radiance toward the camera after infinitely many bounces, by dense
/// per-wavelength inversion: L = (1/pi) (R^-1 - K)^-1 E0. Wavelengths
/// with zero reflectance short-circuit to zero radiance.
inline IrradianceField infinite_bounce_radiance(const KernelMatrix& km,
                                                const ReflectanceSpectrum& r,
                                                const IrradianceField& e0) {
    require(km.size() == e0.facet_count(), "infinite_bounce_radiance: size mismatch");
    require(r.grid() == e0.grid, "infinite_bounce_radiance: grid mismatch");
    const double rho_k = detail::spectral_radius_estimate(km.k);
    const double r_max = r.values().maxCoeff();
    if (r_max * rho_k >= 1.0)
        throw NumericError("infinite_bounce_radiance: bounce series diverges (spectral radius >= 1)");

    IrradianceField out;
    out.grid = e0.grid;
    out.field.resizeLike(e0.field);
    const int m = km.size();
    const int q = static_cast<int>(e0.field.cols());
    Eigen::MatrixXd a(m, m);
    for (int l = 0; l < q; ++l) {
        const double rl = r[l];
        if (rl == 0.0) {
            out.field.col(l).setZero();
            continue;
        }
        a = -km.k;
        a.diagonal().array() += 1.0 / rl;
        out.field.col(l) = a.partialPivLu().solve(e0.field.col(l)) / kPi;
    }
    return out;
}

/// Same contract as infinite_bounce_radiance, via the cached symmetric
/// eigendecomposition: one decomposition serves every wavelength,
/// reflectance and illuminant. The per-mode gain is written as
/// r / (1 - r mu) so zero reflectance needs no special case.
inline IrradianceField infinite_bounce_radiance_eig(const EigenSystem& eig,
                                                    const ReflectanceSpectrum& r,
                                                    const IrradianceField& e0) {
    require(eig.size() == e0.facet_count(), "infinite_bounce_radiance_eig: size mismatch");
    require(r.grid() == e0.grid, "infinite_bounce_radiance_eig: grid mismatch");

    Eigen::MatrixXd coeff = eig.eigenvectors.transpose() * e0.field;  // m x q
    const int q = static_cast<int>(coeff.cols());
    for (int l = 0; l < q; ++l) {
        const double rl = r[l];
        for (int i = 0; i < eig.size(); ++i) {
            const double denom = 1.0 - rl * eig.eigenvalues[i];
            if (std::abs(denom) < 1e-12)
                throw NumericError("infinite_bounce_radiance_eig: 1/r hits an eigenvalue");
            coeff(i, l) *= rl / denom;
        }
    }
    IrradianceField out;
    out.grid = e0.grid;
    out.field = (eig.eigenvectors * coeff) / kPi;
    return out;
}

/// Integrates facet radiance against the sensor curves:
/// rho(facet, ch) = sum_l c_ch(l) L(facet, l) dl.
inline RenderedPatch camera_response(const IrradianceField& radiance,
                                     const CameraSensitivities& cam) {
    cam.check();
    require(cam.grid() == radiance.grid, "camera_response: grid mismatch");
    const int q = static_cast<int>(radiance.field.cols());
    Eigen::MatrixXd c(q, cam.channel_count());
    for (int ch = 0; ch < cam.channel_count(); ++ch) c.col(ch) = cam.channels[ch].values();
    RenderedPatch p;
    p.rho = radiance.field * c * radiance.grid.step_nm;
    return p;
}

/// Sensor response of an unfolded (flat, interreflection-free) surface:
/// one radiance spectrum r * E / pi shared by every facet.
inline Eigen::VectorXd flat_sensor_response(const ReflectanceSpectrum& r,
                                            const IlluminantSPD& illum,
                                            const CameraSensitivities& cam) {
    cam.check();
    require(r.grid() == illum.grid() && r.grid() == cam.grid(),
            "flat_sensor_response: grid mismatch");
    Eigen::VectorXd radiance = r.values().cwiseProduct(illum.values()) / kPi;
    Eigen::VectorXd rho(cam.channel_count());
    for (int ch = 0; ch < cam.channel_count(); ++ch)
        rho[ch] = cam.channels[ch].values().dot(radiance) * r.grid().step_nm;
    return rho;
}

/// Extracts panel A (the first n*n facets) of a rendered patch.
inline PanelImage extract_panel(const RenderedPatch& patch, int n) {
    require(patch.facet_count() >= n * n, "extract_panel: patch too small");
    PanelImage img;
    img.n = n;
    img.channels = patch.channel_count();
    img.data = patch.rho.topRows(n * n);
    return img;
}

/// Full pipeline: direct irradiance -> infinite-bounce radiance (via the
/// eigendecomposition) -> camera integration -> panel A image.
inline PanelImage render_panel_image(const VCavity& cav, const EigenSystem& eig,
                                     const ReflectanceSpectrum& r, const IlluminantSPD& illum,
                                     const CameraSensitivities& cam) {
    IrradianceField e0 = direct_irradiance(illum, cav.facet_count());
    IrradianceField radiance = infinite_bounce_radiance_eig(eig, r, e0);
    RenderedPatch patch = camera_response(radiance, cam);
    return extract_panel(patch, cav.facets_per_side);
}

}  // namespace specfold
