// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "specfold/spectrum.hpp"

namespace specfold {

/// Low-dimensional linear model of smooth reflectances: mean plus the
/// top-k principal components of a training set.
struct ReflectanceBasis {
    WavelengthGrid grid;
    Eigen::VectorXd mean;     // q
    Eigen::MatrixXd vectors;  // q x k, orthonormal columns, variance-sorted
    Eigen::VectorXd scales;   // k, stddev of the training data per component

    int k() const { return static_cast<int>(vectors.cols()); }
    int q() const { return static_cast<int>(vectors.rows()); }

    Eigen::VectorXd project(const Eigen::VectorXd& r) const {
        require(r.size() == mean.size(), "basis: spectrum length mismatch");
        return vectors.transpose() * (r - mean);
    }

    /// mean + V b, without any range clamping.
    Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const {
        require(coeffs.size() == k(), "basis: coefficient length mismatch");
        return mean + vectors * coeffs;
    }

    ReflectanceSpectrum reconstruct(const ReflectanceSpectrum& r) const {
        return ReflectanceSpectrum::clamped(grid, synthesize(project(r.values())));
    }
};

/// Principal components of mean-centered reflectances. The eigenbasis of
/// the sample covariance is complete and orthonormal even where the data
/// is rank-deficient, so k may go up to min(q, n); directions beyond the
/// data rank are arbitrary but orthonormal. Signs are fixed so the
/// largest-magnitude entry of each vector is positive.
inline ReflectanceBasis build_basis(const std::vector<ReflectanceSpectrum>& spectra, int k) {
    require(k >= 1, "build_basis: k >= 1");
    require(!spectra.empty(), "build_basis: no spectra");
    const WavelengthGrid grid = spectra[0].grid();
    const int q = grid.count();
    const int n = static_cast<int>(spectra.size());
    if (k > q || k > n) throw ConfigError("build_basis: k exceeds the data rank bound");

    Eigen::MatrixXd x(q, n);
    for (int j = 0; j < n; ++j) {
        require(spectra[j].grid() == grid, "build_basis: mixed grids");
        x.col(j) = spectra[j].values();
    }
    Eigen::VectorXd mean = x.rowwise().mean();
    x.colwise() -= mean;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x * x.transpose() / n);
    if (es.info() != Eigen::Success) throw NumericError("build_basis: eigensolver failed");

    ReflectanceBasis b;
    b.grid = grid;
    b.mean = std::move(mean);
    b.vectors.resize(q, k);
    b.scales.resize(k);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(q - 1 - j);  // descending variance
        int imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        b.vectors.col(j) = v;
        b.scales[j] = std::sqrt(std::max(es.eigenvalues()[q - 1 - j], 0.0));
    }
    return b;
}

}  // namespace specfold
