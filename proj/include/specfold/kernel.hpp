// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "specfold/cavity.hpp"
#include "specfold/common.hpp"
#include "specfold/io.hpp"
#include "specfold/rng.hpp"

namespace specfold {

/// m x m exchange matrix: entry(i,j) = (S_j / pi) * mean kernel between
/// facets i and j. Zero diagonal and zero within-panel blocks. Each
/// unordered pair is estimated from one shared point-pair draw (the point
/// kernel is symmetric in its arguments), so with equal-area facets the
/// assembled matrix is symmetric by construction, not just in
/// expectation; the residual before the final symmetrization guard is
/// kept for diagnostics and should be exactly zero.
struct KernelMatrix {
    Eigen::MatrixXd k;
    std::uint32_t samples_per_pair = 0;
    std::uint32_t hinge_oversample = 0;
    std::uint64_t seed = 0;
    double asymmetry_max_abs = 0.0;   // max |K - K^T| before symmetrization
    double asymmetry_rel_frob = 0.0;  // ||K - K^T||_F / ||K||_F before symmetrization

    int size() const { return static_cast<int>(k.rows()); }
};

/// Symmetric eigendecomposition of a kernel matrix, eigenvalues descending.
struct EigenSystem {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;  // columns

    int size() const { return static_cast<int>(eigenvalues.size()); }
    double spectral_radius() const {
        return eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
    }
};

namespace detail {

/// Stratified estimate of the facet-averaged kernel for one facet pair.
/// The substream depends only on (seed, i, j), never on scheduling.
inline double pair_mean_kernel(const Facet& fi, const Facet& fj, std::uint32_t samples,
                               std::uint64_t seed, int i, int j) {
    Pcg32 rng(mix_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)),
              mix_seed(seed ^ 0x5bf03635ull, static_cast<std::uint64_t>(j),
                       static_cast<std::uint64_t>(i)));
    std::uint32_t k = 1;
    while ((k + 1) * (k + 1) * (k + 1) * (k + 1) <= samples) ++k;
    std::uint32_t strat = k * k * k * k;

    double sum = 0.0;
    auto eval = [&](double u0, double u1, double u2, double u3) {
        Vec3 p = fi.point(2.0 * u0 - 1.0, 2.0 * u1 - 1.0);
        Vec3 q = fj.point(2.0 * u2 - 1.0, 2.0 * u3 - 1.0);
        return geometric_kernel_point(p, fi.normal, q, fj.normal);
    };
    for (std::uint32_t a = 0; a < k; ++a)
        for (std::uint32_t b = 0; b < k; ++b)
            for (std::uint32_t c = 0; c < k; ++c)
                for (std::uint32_t d = 0; d < k; ++d)
                    sum += eval((a + rng.uniform()) / k, (b + rng.uniform()) / k,
                                (c + rng.uniform()) / k, (d + rng.uniform()) / k);
    for (std::uint32_t s = strat; s < samples; ++s)
        sum += eval(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform());
    return sum / samples;
}

}  // namespace detail

/// Assembles the kernel matrix by Monte Carlo integration over facet
/// pairs. Within-panel entries are identically zero (coplanar facets).
/// Pairs whose centers are closer than one facet diagonal get
/// `hinge_oversample` times the sample budget to tame the near-hinge
/// 1/distance^2 spike. Bitwise reproducible for a fixed seed regardless
/// of worker count.
inline KernelMatrix monte_carlo_kernel(const VCavity& cav, std::uint32_t samples_per_pair,
                                       std::uint64_t seed, std::uint32_t hinge_oversample = 16,
                                       int workers = 1) {
    require(samples_per_pair >= 1, "monte_carlo_kernel: samples_per_pair >= 1");
    require(hinge_oversample >= 1, "monte_carlo_kernel: hinge_oversample >= 1");
    const int m = cav.facet_count();
    const int half = cav.panel_facets();
    const double pitch = cav.panel_side / cav.facets_per_side;
    const double diag = pitch * std::sqrt(2.0);

    KernelMatrix km;
    km.k = Eigen::MatrixXd::Zero(m, m);
    km.samples_per_pair = samples_per_pair;
    km.hinge_oversample = hinge_oversample;
    km.seed = seed;

    // Only cross-panel pairs contribute; one draw serves both orders.
    struct Pair {
        int i, j;  // i on panel A, j on panel B
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(half) * half);
    for (int i = 0; i < half; ++i)
        for (int j = half; j < m; ++j) pairs.push_back({i, j});

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            auto [i, j] = pairs[p];
            const Facet& fi = cav.facets[i];
            const Facet& fj = cav.facets[j];
            std::uint32_t n = samples_per_pair;
            if ((fi.center - fj.center).norm() < diag) n *= hinge_oversample;
            double mean = detail::pair_mean_kernel(fi, fj, n, seed, i, j);
            km.k(i, j) = fj.area() / kPi * mean;
            km.k(j, i) = fi.area() / kPi * mean;
        }
    };

    if (workers <= 1) {
        run(0, pairs.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (pairs.size() + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            std::size_t b = std::min(pairs.size(), w * chunk);
            std::size_t e = std::min(pairs.size(), b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
        for (auto& t : pool) t.join();
    }

    Eigen::MatrixXd diff = km.k - km.k.transpose();
    km.asymmetry_max_abs = diff.cwiseAbs().maxCoeff();
    double kf = km.k.norm();
    km.asymmetry_rel_frob = kf > 0.0 ? diff.norm() / kf : 0.0;
    km.k = 0.5 * (km.k + km.k.transpose()).eval();
    return km;
}

/// Full symmetric eigendecomposition, eigenvalues descending.
inline EigenSystem eigendecompose(const KernelMatrix& km) {
    const auto& k = km.k;
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("eigendecompose: kernel matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigendecompose: solver failed");
    EigenSystem es;
    es.eigenvalues = solver.eigenvalues().reverse();
    es.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return es;
}

// Kernel cache: header {magic, version, m, angle, n, samples, seed},
// then row-major 64-bit floats.
inline constexpr char kKernelMagic[8] = {'S', 'P', 'F', 'K', 'E', 'R', 'N', '1'};
inline constexpr std::uint32_t kKernelVersion = 1;

inline void save_kernel(const std::string& path, const KernelMatrix& km, double angle_deg, int n) {
    BinaryWriter w(path);
    w.put_bytes(kKernelMagic, 8);
    w.put<std::uint32_t>(kKernelVersion);
    w.put<std::uint32_t>(km.size());
    w.put<double>(angle_deg);
    w.put<std::uint32_t>(n);
    w.put<std::uint32_t>(km.samples_per_pair);
    w.put<std::uint64_t>(km.seed);
    Eigen::MatrixXd rowmajor = km.k.transpose();  // column-major storage -> row-major bytes
    w.put_f64(rowmajor.data(), static_cast<std::size_t>(km.size()) * km.size());
    w.close();
}

struct KernelCacheEntry {
    KernelMatrix kernel;
    double angle_deg = 0.0;
    int n = 0;
};

inline KernelCacheEntry load_kernel(const std::string& path) {
    BinaryReader r(path);
    auto magic = r.get<std::array<char, 8>>();
    if (std::memcmp(magic.data(), kKernelMagic, 8) != 0)
        throw IngestError("not a kernel cache file: " + path);
    if (r.get<std::uint32_t>() != kKernelVersion)
        throw IngestError("kernel cache version mismatch: " + path);
    KernelCacheEntry e;
    auto m = r.get<std::uint32_t>();
    e.angle_deg = r.get<double>();
    e.n = static_cast<int>(r.get<std::uint32_t>());
    e.kernel.samples_per_pair = r.get<std::uint32_t>();
    e.kernel.seed = r.get<std::uint64_t>();
    Eigen::MatrixXd rowmajor(m, m);
    r.get_f64(rowmajor.data(), static_cast<std::size_t>(m) * m);
    e.kernel.k = rowmajor.transpose();
    return e;
}

inline std::string kernel_cache_name(double angle_deg, int n, std::uint32_t samples,
                                     std::uint64_t seed, std::uint32_t hinge_oversample = 16) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "kernel_a%g_n%d_s%u_h%u_seed%llu.kern", angle_deg, n, samples,
                  hinge_oversample, static_cast<unsigned long long>(seed));
    return buf;
}

}  // namespace specfold
