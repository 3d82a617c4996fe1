// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "specfold/colorimetry.hpp"
#include "specfold/nn.hpp"

namespace specfold {

/// Architecture of the reflectance/illuminant estimator. With the
/// default 10x10x3 input the shape trace is fixed: conv1 and conv2
/// preserve 10x10, the pool halves to 5x5, conv3 collapses to 1x1, and
/// each branch maps c3 -> hidden -> 61. No normalization layers anywhere
/// and no squashing on the outputs; the absolute signal level is the cue
/// that separates reflectance from illumination.
struct NetworkConfig {
    int in_c = 3, in_h = 10, in_w = 10;
    int c1 = 32, c2 = 32, c3 = 128;
    int hidden = 200;
    int out = 61;
    bool spd_branch = true;
    bool average_pool = false;

    void check() const {
        require(in_c > 0 && in_h > 0 && in_w > 0, "network: input dims must be positive");
        require(c1 > 0 && c2 > 0 && c3 > 0 && hidden > 0 && out > 0,
                "network: layer widths must be positive");
        int h = nn::Conv2d<float>::out_dim(in_h, 5, 1, 2);
        int w = nn::Conv2d<float>::out_dim(in_w, 5, 1, 2);
        require(h == in_h && w == in_w, "network: 5x5 pad-2 stage must preserve size");
        int ph = (h - 2) / 2 + 1, pw = (w - 2) / 2 + 1;
        require(ph >= 1 && pw >= 1, "network: pooled map vanished");
        require((ph - 3) / 3 + 1 >= 1 && (pw - 3) / 3 + 1 >= 1,
                "network: conv3 does not fit the pooled map");
    }
};

/// Gradient (or momentum) storage mirroring every parameter tensor.
template <typename S>
struct NetworkGrads {
    nn::Mat<S> conv1_w, conv2_w, conv3_w, r_fc1_w, r_fc2_w, e_fc1_w, e_fc2_w;
    nn::Vec<S> conv1_b, conv2_b, conv3_b, r_fc1_b, r_fc2_b, e_fc1_b, e_fc2_b;
};

template <typename S>
struct TwoBranchNet {
    NetworkConfig cfg;
    nn::Conv2d<S> conv1, conv2, conv3;
    nn::Pool2d<S> pool;
    nn::Dense<S> r_fc1, r_fc2, e_fc1, e_fc2;
    nn::ReLU<S> act1, act2, act3, r_act, e_act;

    /// Visits every live parameter tensor alongside the matching slot of
    /// `g`, in the fixed serialization order.
    template <typename G, typename F>
    void visit(G& g, F&& f) {
        f(conv1.w, g.conv1_w);
        f(conv1.b, g.conv1_b);
        f(conv2.w, g.conv2_w);
        f(conv2.b, g.conv2_b);
        f(conv3.w, g.conv3_w);
        f(conv3.b, g.conv3_b);
        f(r_fc1.w, g.r_fc1_w);
        f(r_fc1.b, g.r_fc1_b);
        f(r_fc2.w, g.r_fc2_w);
        f(r_fc2.b, g.r_fc2_b);
        if (cfg.spd_branch) {
            f(e_fc1.w, g.e_fc1_w);
            f(e_fc1.b, g.e_fc1_b);
            f(e_fc2.w, g.e_fc2_w);
            f(e_fc2.b, g.e_fc2_b);
        }
    }

    NetworkGrads<S> make_grads() {
        NetworkGrads<S> g;
        visit(g, [](const auto& p, auto& slot) { slot.setZero(p.rows(), p.cols()); });
        return g;
    }

    /// Both heads for a batch of normalized images. The returned
    /// matrices are out x B; the second is empty when the SPD branch is
    /// disabled. Mutates layer caches, so one forward pairs with one
    /// backward.
    std::pair<nn::Mat<S>, nn::Mat<S>> forward(const nn::Batch<S>& x) {
        require(x.c == cfg.in_c && x.h == cfg.in_h && x.w == cfg.in_w,
                "network: input shape mismatch");
        nn::Batch<S> h1 = conv1.forward(x);
        h1.data = act1.forward(h1.data);
        nn::Batch<S> h2 = conv2.forward(h1);
        h2.data = act2.forward(h2.data);
        nn::Batch<S> h3 = pool.forward(h2);
        nn::Batch<S> h4 = conv3.forward(h3);
        h4.data = act3.forward(h4.data);
        nn::Mat<S> rh = r_act.forward(r_fc1.forward(h4.data));
        nn::Mat<S> r_out = r_fc2.forward(rh);
        nn::Mat<S> e_out;
        if (cfg.spd_branch) {
            nn::Mat<S> eh = e_act.forward(e_fc1.forward(h4.data));
            e_out = e_fc2.forward(eh);
        }
        return {std::move(r_out), std::move(e_out)};
    }

    /// Backpropagates output-head gradients into `g`. `de` is ignored
    /// when the SPD branch is disabled.
    void backward(const nn::Mat<S>& dr, const nn::Mat<S>& de, NetworkGrads<S>& g) {
        nn::Mat<S> d_trunk =
            r_fc1.backward(r_act.backward(r_fc2.backward(dr, g.r_fc2_w, g.r_fc2_b)), g.r_fc1_w,
                           g.r_fc1_b);
        if (cfg.spd_branch) {
            d_trunk += e_fc1.backward(e_act.backward(e_fc2.backward(de, g.e_fc2_w, g.e_fc2_b)),
                                      g.e_fc1_w, g.e_fc1_b);
        }
        nn::Batch<S> d4(conv3.out_c, conv3.oh, conv3.ow, static_cast<int>(d_trunk.cols()));
        d4.data = act3.backward(d_trunk);
        nn::Batch<S> d3 = conv3.backward(d4, g.conv3_w, g.conv3_b);
        nn::Batch<S> d2 = pool.backward(d3);
        d2.data = act2.backward(d2.data);
        nn::Batch<S> d1 = conv2.backward(d2, g.conv2_w, g.conv2_b);
        d1.data = act1.backward(d1.data);
        conv1.backward(d1, g.conv1_w, g.conv1_b);
    }
};

/// Fresh network with Xavier-uniform weights and zero biases. Each layer
/// draws from its own counter-derived substream, so adding or disabling
/// the SPD branch does not shift the other layers' draws.
template <typename S>
inline TwoBranchNet<S> init_network(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.check();
    TwoBranchNet<S> net;
    net.cfg = cfg;
    net.pool.average = cfg.average_pool;
    auto stream = [&](std::uint64_t layer) { return Pcg32(mix_seed(seed, layer, 0x4e45u)); };
    Pcg32 r1 = stream(1), r2 = stream(2), r3 = stream(3), r4 = stream(4), r5 = stream(5),
          r6 = stream(6), r7 = stream(7);
    net.conv1.init(cfg.in_c, cfg.c1, 5, 1, 2, r1);
    net.conv2.init(cfg.c1, cfg.c2, 5, 1, 2, r2);
    net.conv3.init(cfg.c2, cfg.c3, 3, 3, 0, r3);
    net.r_fc1.init(cfg.c3, cfg.hidden, r4);
    net.r_fc2.init(cfg.hidden, cfg.out, r5);
    if (cfg.spd_branch) {
        net.e_fc1.init(cfg.c3, cfg.hidden, r6);
        net.e_fc2.init(cfg.hidden, cfg.out, r7);
    }
    return net;
}

struct LossWeights {
    double w_r = 1.0, w_e = 1.0, w_s = 1.0;

    void check() const {
        require(w_r >= 0.0 && w_e >= 0.0 && w_s >= 0.0, "loss weights must be >= 0");
    }
};

struct LossBreakdown {
    double l_r = 0.0, l_e = 0.0, l_s = 0.0, total = 0.0;
};

/// Observer weighting of the consistency term: sum over the three CMF
/// curves of the squared curve value, per wavelength.
inline Eigen::VectorXd cmf_square_sum(const ColorMatchingFunctions& cmf) {
    return cmf.xbar.values().array().square() + cmf.ybar.values().array().square() +
           cmf.zbar.values().array().square();
}

/// Batch-averaged losses and, optionally, output-head gradients.
///
///   L_R = 1/2 |R - Rhat|^2        L_E = 1/2 |E - Ehat|^2
///   L_S = 1/2 sum_f |f.R.E - f.Rhat.Ehat|^2   over f in {xbar, ybar, zbar}
///
/// With the SPD branch disabled, `ehat` must be empty and both SPDs in
/// L_S are replaced by `fixed_e` (the single known illuminant); the
/// consistency gradient then reaches only the reflectance head.
template <typename S>
inline LossBreakdown spectral_loss(const nn::Mat<S>& rhat, const nn::Mat<S>& ehat,
                                   const nn::Mat<S>& r, const nn::Mat<S>& e,
                                   const Eigen::VectorXd& cmf_sq, const LossWeights& wts,
                                   const nn::Vec<S>* fixed_e = nullptr,
                                   nn::Mat<S>* d_rhat = nullptr, nn::Mat<S>* d_ehat = nullptr) {
    wts.check();
    const bool spd = ehat.size() > 0;
    const Eigen::Index q = rhat.rows(), n = rhat.cols();
    require(r.rows() == q && r.cols() == n, "loss: reflectance shape mismatch");
    if (spd)
        require(ehat.rows() == q && ehat.cols() == n && e.rows() == q && e.cols() == n,
                "loss: SPD shape mismatch");
    else
        require(fixed_e != nullptr && fixed_e->size() == q,
                "loss: single-illuminant mode needs the known SPD");
    require(cmf_sq.size() == q, "loss: observer curve length mismatch");

    const double inv_n = 1.0 / static_cast<double>(n);
    const nn::Mat<S> dr = rhat - r;
    LossBreakdown out;
    out.l_r = 0.5 * inv_n * static_cast<double>(dr.squaredNorm());
    if (d_rhat) *d_rhat = S(wts.w_r * inv_n) * dr;

    nn::Mat<S> de;
    if (spd) {
        de = ehat - e;
        out.l_e = 0.5 * inv_n * static_cast<double>(de.squaredNorm());
        if (d_ehat) *d_ehat = S(wts.w_e * inv_n) * de;
    } else if (d_ehat) {
        d_ehat->resize(0, 0);
    }

    // Consistency: per wavelength the three observer curves contribute a
    // shared weight s2 = xbar^2 + ybar^2 + zbar^2.
    nn::Vec<S> s2 = cmf_sq.cast<S>();
    nn::Mat<S> diff;
    if (spd)
        diff = rhat.cwiseProduct(ehat) - r.cwiseProduct(e);
    else
        diff = ((rhat - r).array().colwise() * fixed_e->array()).matrix();
    out.l_s = 0.5 * inv_n *
              static_cast<double>((diff.array().square().colwise() * s2.array()).sum());
    if (d_rhat) {
        nn::Mat<S> weighted =
            S(wts.w_s * inv_n) * (diff.array().colwise() * s2.array()).matrix();
        if (spd) {
            *d_rhat += weighted.cwiseProduct(ehat);
            if (d_ehat) *d_ehat += weighted.cwiseProduct(rhat);
        } else {
            *d_rhat += (weighted.array().colwise() * fixed_e->array()).matrix();
        }
    }
    out.total = wts.w_r * out.l_r + wts.w_e * out.l_e + wts.w_s * out.l_s;
    return out;
}

}  // namespace specfold
