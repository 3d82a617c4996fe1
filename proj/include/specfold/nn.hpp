// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "specfold/common.hpp"
#include "specfold/rng.hpp"

namespace specfold::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// A batch of feature maps. Each column is one image, flattened
/// channel-major: element (c, y, x) sits at row c*h*w + y*w + x.
template <typename S>
struct Batch {
    Mat<S> data;
    int c = 0, h = 0, w = 0;

    Batch() = default;
    Batch(int c_, int h_, int w_, int n) : data(c_ * h_ * w_, n), c(c_), h(h_), w(w_) {}

    int size() const { return static_cast<int>(data.cols()); }
    int features() const { return c * h * w; }
};

/// Xavier/Glorot uniform fill: +/- sqrt(6 / (fan_in + fan_out)), drawn
/// row-major so initialization is a pure function of the stream.
template <typename S>
inline void xavier_fill(Mat<S>& w, int fan_in, int fan_out, Pcg32& rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            w(r, c) = static_cast<S>(rng.uniform(-a, a));
}

namespace detail {

/// Unfolds one image into convolution columns: out(c*k*k + dy*k + dx,
/// col0 + oy*ow + ox) = img[c,(oy*stride+dy-pad),(ox*stride+dx-pad)],
/// zero outside the image.
template <typename S>
void im2col(const S* img, int c, int h, int w, int k, int stride, int pad, int oh, int ow,
            Mat<S>& out, Eigen::Index col0) {
    for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
                Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + dy) * k + dx;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + dy - pad;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + dx - pad;
                        S v = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                  ? img[(static_cast<Eigen::Index>(ch) * h + iy) * w + ix]
                                  : S(0);
                        out(row, col0 + static_cast<Eigen::Index>(oy) * ow + ox) = v;
                    }
                }
            }
}

/// Adjoint of im2col: scatter-adds column gradients back onto the image.
template <typename S>
void col2im(const Mat<S>& cols, Eigen::Index col0, int c, int h, int w, int k, int stride,
            int pad, int oh, int ow, S* img) {
    for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
                Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + dy) * k + dx;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride + dy - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride + dx - pad;
                        if (ix < 0 || ix >= w) continue;
                        img[(static_cast<Eigen::Index>(ch) * h + iy) * w + ix] +=
                            cols(row, col0 + static_cast<Eigen::Index>(oy) * ow + ox);
                    }
                }
            }
}

}  // namespace detail

/// 2-D convolution, GEMM over unfolded columns. Forward caches the
/// columns; backward consumes them and the incoming gradient.
template <typename S>
struct Conv2d {
    int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
    Mat<S> w;  // out_c x (in_c*k*k)
    Vec<S> b;  // out_c

    Mat<S> cols;  // (in_c*k*k) x (batch*oh*ow), kept for backward
    int in_h = 0, in_w = 0, oh = 0, ow = 0;

    void init(int in_channels, int out_channels, int kernel, int stride_, int pad_, Pcg32& rng) {
        in_c = in_channels;
        out_c = out_channels;
        k = kernel;
        stride = stride_;
        pad = pad_;
        w.resize(out_c, in_c * k * k);
        xavier_fill(w, in_c * k * k, out_c * k * k, rng);
        b = Vec<S>::Zero(out_c);
    }

    static int out_dim(int in, int k, int stride, int pad) {
        return (in + 2 * pad - k) / stride + 1;
    }

    Batch<S> forward(const Batch<S>& x) {
        require(x.c == in_c, "conv: channel mismatch");
        in_h = x.h;
        in_w = x.w;
        oh = out_dim(x.h, k, stride, pad);
        ow = out_dim(x.w, k, stride, pad);
        require(oh >= 1 && ow >= 1, "conv: kernel does not fit the input");
        const int n = x.size();
        const Eigen::Index spatial = static_cast<Eigen::Index>(oh) * ow;
        cols.resize(static_cast<Eigen::Index>(in_c) * k * k, spatial * n);
        for (int i = 0; i < n; ++i)
            detail::im2col(x.data.col(i).data(), x.c, x.h, x.w, k, stride, pad, oh, ow, cols,
                           spatial * i);
        Mat<S> prod = w * cols;  // out_c x (n*spatial)
        prod.colwise() += b;
        Batch<S> y(out_c, oh, ow, n);
        for (int i = 0; i < n; ++i) {
            // Column layout is channel-major, so the (spatial x out_c)
            // transpose of this image's block lands in place.
            Eigen::Map<Mat<S>> dst(y.data.col(i).data(), spatial, out_c);
            dst = prod.middleCols(spatial * i, spatial).transpose();
        }
        return y;
    }

    Batch<S> backward(const Batch<S>& dy, Mat<S>& dw, Vec<S>& db) {
        const int n = dy.size();
        const Eigen::Index spatial = static_cast<Eigen::Index>(oh) * ow;
        Mat<S> g(out_c, spatial * n);
        for (int i = 0; i < n; ++i) {
            Eigen::Map<const Mat<S>> src(dy.data.col(i).data(), spatial, out_c);
            g.middleCols(spatial * i, spatial) = src.transpose();
        }
        dw.noalias() = g * cols.transpose();
        db = g.rowwise().sum();
        Mat<S> dcols = w.transpose() * g;
        Batch<S> dx(in_c, in_h, in_w, n);
        dx.data.setZero();
        for (int i = 0; i < n; ++i)
            detail::col2im(dcols, spatial * i, in_c, in_h, in_w, k, stride, pad, oh, ow,
                           dx.data.col(i).data());
        return dx;
    }
};

/// 2x2-style pooling with max (default) or average reduction. Max keeps
/// the winning input index per window for the backward scatter.
template <typename S>
struct Pool2d {
    int k = 2, stride = 2;
    bool average = false;

    int in_c = 0, in_h = 0, in_w = 0, oh = 0, ow = 0;
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> argmax;

    Batch<S> forward(const Batch<S>& x) {
        in_c = x.c;
        in_h = x.h;
        in_w = x.w;
        oh = (x.h - k) / stride + 1;
        ow = (x.w - k) / stride + 1;
        require(oh >= 1 && ow >= 1, "pool: window does not fit the input");
        const int n = x.size();
        Batch<S> y(x.c, oh, ow, n);
        if (!average) argmax.resize(y.features(), n);
        for (int i = 0; i < n; ++i) {
            const S* src = x.data.col(i).data();
            S* dst = y.data.col(i).data();
            for (int c = 0; c < x.c; ++c)
                for (int py = 0; py < oh; ++py)
                    for (int px = 0; px < ow; ++px) {
                        Eigen::Index out_idx =
                            (static_cast<Eigen::Index>(c) * oh + py) * ow + px;
                        S acc = average ? S(0) : std::numeric_limits<S>::lowest();
                        std::int32_t win = -1;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) {
                                Eigen::Index in_idx =
                                    (static_cast<Eigen::Index>(c) * in_h + py * stride + dy) *
                                        in_w +
                                    px * stride + dx;
                                if (average) {
                                    acc += src[in_idx];
                                } else if (src[in_idx] > acc) {
                                    acc = src[in_idx];
                                    win = static_cast<std::int32_t>(in_idx);
                                }
                            }
                        dst[out_idx] = average ? acc / S(k * k) : acc;
                        if (!average) argmax(out_idx, i) = win;
                    }
        }
        return y;
    }

    Batch<S> backward(const Batch<S>& dy) {
        const int n = dy.size();
        Batch<S> dx(in_c, in_h, in_w, n);
        dx.data.setZero();
        for (int i = 0; i < n; ++i) {
            const S* g = dy.data.col(i).data();
            S* out = dx.data.col(i).data();
            if (average) {
                for (int c = 0; c < in_c; ++c)
                    for (int py = 0; py < oh; ++py)
                        for (int px = 0; px < ow; ++px) {
                            S share = g[(static_cast<Eigen::Index>(c) * oh + py) * ow + px] /
                                      S(k * k);
                            for (int dy_ = 0; dy_ < k; ++dy_)
                                for (int dx_ = 0; dx_ < k; ++dx_)
                                    out[(static_cast<Eigen::Index>(c) * in_h + py * stride +
                                         dy_) *
                                            in_w +
                                        px * stride + dx_] += share;
                        }
            } else {
                for (Eigen::Index j = 0; j < argmax.rows(); ++j) out[argmax(j, i)] += g[j];
            }
        }
        return dx;
    }
};

/// Rectifier; backward gates on the cached pre-activation sign.
template <typename S>
struct ReLU {
    Mat<S> mask;

    Mat<S> forward(const Mat<S>& x) {
        mask = (x.array() > S(0)).template cast<S>();
        return x.cwiseMax(S(0));
    }

    Mat<S> backward(const Mat<S>& dy) const { return dy.cwiseProduct(mask); }
};

/// Fully connected layer on column-per-sample matrices.
template <typename S>
struct Dense {
    Mat<S> w;  // out x in
    Vec<S> b;  // out
    Mat<S> x_cache;

    void init(int in, int out, Pcg32& rng) {
        w.resize(out, in);
        xavier_fill(w, in, out, rng);
        b = Vec<S>::Zero(out);
    }

    Mat<S> forward(const Mat<S>& x) {
        require(x.rows() == w.cols(), "dense: feature count mismatch");
        x_cache = x;
        Mat<S> y = w * x;
        y.colwise() += b;
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, Mat<S>& dw, Vec<S>& db) const {
        dw.noalias() = dy * x_cache.transpose();
        db = dy.rowwise().sum();
        return w.transpose() * dy;
    }
};

}  // namespace specfold::nn
