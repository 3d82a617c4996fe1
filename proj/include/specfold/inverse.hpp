// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "specfold/basis.hpp"
#include "specfold/kernel.hpp"
#include "specfold/render.hpp"

namespace specfold {

struct SolverConfig {
    int max_iters = 500;
    double grad_tol = 1e-9;
    double armijo_c = 1e-4;
    double initial_step = 1.0;
    /// Scale the descent direction by the damped inverse Gauss-Newton
    /// Hessian of the coefficient fit. The reduced problem is badly
    /// conditioned (the camera collapses 61 wavelengths to a few channels),
    /// so unscaled gradient steps stall far from the minimizer; scaled
    /// steps keep the projected iteration and the monotone trace but
    /// converge in tens of iterations. Setting this to false falls back to
    /// adaptive-step steepest descent for reference.
    bool gauss_newton = true;
    /// The fit is nonconvex (metameric valleys fold back on themselves),
    /// so descent is restarted from the mean and from +-1 and +-2 sigma
    /// along the four leading principal axes; the best basin wins, and an
    /// essentially exact fit stops the fan early. Deterministic.
    int max_starts = 17;
};

struct EstimateResult {
    ReflectanceSpectrum reflectance;
    bool converged = false;
    /// Set when the geometry carries no interreflection cue (K ~ 0) and
    /// the basis has more degrees of freedom than the camera has
    /// channels: the fit is then underdetermined and the returned
    /// reflectance is one of many exact minimizers.
    bool flat_ambiguity = false;
    int iterations = 0;
    double objective = 0.0;
    std::vector<double> trace;  // accepted objective values
};

namespace detail {

/// Forward model and objective gradient for the basis-coefficient fit,
/// everything precomputed against one (eigensystem, illuminant, camera).
class RenderFit {
public:
    RenderFit(const EigenSystem& eig, const IlluminantSPD& illum, const CameraSensitivities& cam,
              const Eigen::MatrixXd& target_rho)
        : mu_(eig.eigenvalues), qmat_(eig.eigenvectors), target_(target_rho) {
        cam.check();
        const int m = eig.size();
        const int q = illum.size();
        step_nm_ = illum.grid().step_nm;
        IrradianceField e0 = direct_irradiance(illum, m);
        p_ = qmat_.transpose() * e0.field;  // m x q
        c_.resize(q, cam.channel_count());
        for (int ch = 0; ch < cam.channel_count(); ++ch) c_.col(ch) = cam.channels[ch].values();
        require(target_.rows() == m && target_.cols() == c_.cols(),
                "estimate_reflectance: image shape does not match geometry/camera");
    }

    /// rho(r) for r in [0,1]^q, via the eigendecomposed closed form.
    /// Contracting with the camera before leaving mode space keeps the
    /// cost at O(m q s + m^2 s) per call.
    Eigen::MatrixXd render(const Eigen::VectorXd& r) const {
        Eigen::MatrixXd s = p_;
        scale_modes(r, s);
        return qmat_ * (s * c_) * (step_nm_ / kPi);
    }

    double objective(const Eigen::VectorXd& r) const {
        return 0.5 * (render(r) - target_).squaredNorm();
    }

    /// dF/dr at a feasible point; dgain/dr = 1/(1 - r mu)^2.
    Eigen::VectorXd gradient(const Eigen::VectorXd& r) const {
        Eigen::MatrixXd res = render(r) - target_;                       // m x s
        Eigen::MatrixXd w = (qmat_.transpose() * res) * c_.transpose();  // m x q
        const int m = static_cast<int>(p_.rows());
        const int q = static_cast<int>(p_.cols());
        Eigen::VectorXd g(q);
        for (int l = 0; l < q; ++l) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                double d = 1.0 - r[l] * mu_[i];
                acc += w(i, l) * p_(i, l) / (d * d);
            }
            g[l] = acc * step_nm_ / kPi;
        }
        return g;
    }

    /// Jacobian of vec(render) with respect to coefficients, through the
    /// masked basis directions in `dirs` (one column per coefficient).
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& r, const Eigen::MatrixXd& dirs) const {
        const int m = static_cast<int>(p_.rows());
        const int q = static_cast<int>(p_.cols());
        const int s = static_cast<int>(c_.cols());
        const int k = static_cast<int>(dirs.cols());
        Eigen::MatrixXd w(m, q);  // per-mode gain derivative times p
        for (int l = 0; l < q; ++l)
            for (int i = 0; i < m; ++i) {
                double d = 1.0 - r[l] * mu_[i];
                w(i, l) = p_(i, l) / (d * d);
            }
        Eigen::MatrixXd jac(m * s, k);
        for (int j = 0; j < k; ++j) {
            Eigen::MatrixXd df = qmat_ * (w * (dirs.col(j).asDiagonal() * c_)) * (step_nm_ / kPi);
            jac.col(j) = Eigen::Map<Eigen::VectorXd>(df.data(), m * s);
        }
        return jac;
    }

private:
    void scale_modes(const Eigen::VectorXd& r, Eigen::MatrixXd& s) const {
        const int m = static_cast<int>(s.rows());
        const int q = static_cast<int>(s.cols());
        for (int l = 0; l < q; ++l) {
            for (int i = 0; i < m; ++i) {
                double denom = 1.0 - r[l] * mu_[i];
                if (std::abs(denom) < 1e-12)
                    throw NumericError("estimate_reflectance: eigenvalue resonance");
                s(i, l) *= r[l] / denom;
            }
        }
    }

    Eigen::VectorXd mu_;
    Eigen::MatrixXd qmat_;
    Eigen::MatrixXd target_;
    Eigen::MatrixXd p_;
    Eigen::MatrixXd c_;
    double step_nm_ = 5.0;
};

}  // namespace detail

namespace detail {

/// One projected-descent run from a fixed coefficient start. The descent
/// direction is the damped (Levenberg-Marquardt) Gauss-Newton step through
/// the clamp: wavelengths whose unclamped value mean + V b sits outside
/// (0, 1) are locally flat and drop out of both the gradient and the
/// Jacobian, which keeps predicted and actual decrease consistent at the
/// box walls. Damping adapts instead of a step-length search: a rejected
/// step raises it (bending the direction toward scaled steepest descent),
/// an accepted one lowers it.
inline EstimateResult descend_from(const RenderFit& fit, const ReflectanceBasis& basis,
                                   Eigen::VectorXd b, const SolverConfig& cfg) {
    auto clamp01 = [](Eigen::VectorXd v) -> Eigen::VectorXd {
        return v.cwiseMax(0.0).cwiseMin(1.0);
    };

    EstimateResult out;
    Eigen::VectorXd u = basis.synthesize(b);
    Eigen::VectorXd r = clamp01(u);
    double f = fit.objective(r);
    if (!std::isfinite(f)) throw NumericError("estimate_reflectance: non-finite objective");
    out.trace.push_back(f);

    double damp = 1e-4;
    int stagnant = 0;
    for (int it = 0; it < cfg.max_iters; ++it) {
        out.iterations = it + 1;
        Eigen::VectorXd gr = fit.gradient(r);
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(gr.size());
        for (int l = 0; l < u.size(); ++l)
            if (u[l] <= 0.0 || u[l] >= 1.0) mask[l] = 0.0;  // clamp is locally flat
        Eigen::VectorXd gb = basis.vectors.transpose() * mask.cwiseProduct(gr);
        double gnorm = gb.lpNorm<Eigen::Infinity>();
        if (gnorm <= cfg.grad_tol) {
            out.converged = true;
            break;
        }

        Eigen::MatrixXd h;
        if (cfg.gauss_newton) {
            Eigen::MatrixXd dirs = mask.asDiagonal() * basis.vectors;  // q x k
            Eigen::MatrixXd jac = fit.jacobian(r, dirs);
            h = jac.transpose() * jac;
        } else {
            // identity curvature turns the damped step into adaptive-step
            // steepest descent; kept as the reference step rule
            h = Eigen::MatrixXd::Zero(b.size(), b.size());
        }
        const double hscale = std::max(h.diagonal().maxCoeff(), 1.0 / cfg.initial_step);

        bool accepted = false;
        for (int raise = 0; raise < 60; ++raise) {
            Eigen::MatrixXd hd = h;
            hd.diagonal().array() += damp * hscale;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hd);
            if (ldlt.info() == Eigen::Success) {
                Eigen::VectorXd d = ldlt.solve(-gb);
                double slope = d.dot(gb);
                if (slope < 0.0) {
                    Eigen::VectorXd b_new = b + d;
                    Eigen::VectorXd u_new = basis.synthesize(b_new);
                    Eigen::VectorXd r_new = clamp01(u_new);
                    double f_new = fit.objective(r_new);
                    if (!std::isfinite(f_new))
                        throw NumericError("estimate_reflectance: non-finite objective");
                    if (f_new <= f + cfg.armijo_c * slope) {
                        stagnant = (f - f_new <= 1e-15 * (1.0 + f)) ? stagnant + 1 : 0;
                        b = std::move(b_new);
                        u = std::move(u_new);
                        r = std::move(r_new);
                        f = f_new;
                        out.trace.push_back(f);
                        damp = std::max(damp / 3.0, 1e-12);
                        accepted = true;
                        break;
                    }
                }
            }
            damp *= 7.0;
        }
        if (!accepted || stagnant >= 3) {
            out.converged = gnorm <= 1e3 * cfg.grad_tol;
            break;
        }
    }
    out.objective = f;
    out.reflectance = ReflectanceSpectrum(basis.grid, r);
    return out;
}

}  // namespace detail

/// Recovers a reflectance from one rendered patch with known illuminant,
/// camera and geometry, by projected descent on basis coefficients. The
/// reflectance is kept feasible by clamping mean + V b into [0,1];
/// wavelengths pinned at a bound contribute zero gradient unless the
/// gradient pulls back into the box. Steps are accepted only when they
/// decrease the objective (backtracking line search), so the returned
/// trace is non-increasing. Descent restarts from a fixed fan of starting
/// coefficients because the objective has metameric local minima; the
/// result is the best basin found.
inline EstimateResult estimate_reflectance(const RenderedPatch& image, const EigenSystem& eig,
                                           const IlluminantSPD& illum,
                                           const CameraSensitivities& cam,
                                           const ReflectanceBasis& basis,
                                           const SolverConfig& cfg = {}) {
    require(cfg.max_iters >= 1, "estimate_reflectance: max_iters >= 1");
    require(cfg.max_starts >= 1, "estimate_reflectance: max_starts >= 1");
    require(basis.q() == illum.size(), "estimate_reflectance: basis/grid mismatch");
    detail::RenderFit fit(eig, illum, cam, image.rho);

    const int k = basis.k();
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(Eigen::VectorXd::Zero(k));
    for (double amp : {1.0, 2.0}) {
        for (int j = 0; j < std::min(k, 4); ++j) {
            double scale = basis.scales.size() > j ? basis.scales[j] : 0.1;
            if (scale < 1e-12) continue;  // degenerate axis duplicates the zero start
            for (double sgn : {1.0, -1.0}) {
                Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
                b[j] = sgn * amp * scale;
                starts.push_back(b);
            }
        }
    }
    if (static_cast<int>(starts.size()) > cfg.max_starts) starts.resize(cfg.max_starts);

    // A fit this tight relative to the image energy is a found global
    // minimum for all practical purposes; skip the remaining starts.
    const double early_out = 1e-20 * std::max(1.0, image.rho.squaredNorm());

    EstimateResult best;
    bool have = false;
    for (const auto& b0 : starts) {
        EstimateResult res = detail::descend_from(fit, basis, b0, cfg);
        if (!have || res.objective < best.objective) {
            best = std::move(res);
            have = true;
        }
        if (best.converged && best.objective <= early_out) break;
    }
    best.flat_ambiguity =
        eig.eigenvalues.cwiseAbs().maxCoeff() < 1e-12 && k > static_cast<int>(image.rho.cols());
    return best;
}

}  // namespace specfold
