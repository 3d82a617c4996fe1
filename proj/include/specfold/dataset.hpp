// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "specfold/colorimetry.hpp"
#include "specfold/io.hpp"
#include "specfold/kernel.hpp"
#include "specfold/render.hpp"
#include "specfold/rng.hpp"

namespace specfold {

/// An illuminant with the identity it keeps through dataset metadata.
/// temperature_k is 0 for non-Planckian sources.
struct IlluminantEntry {
    std::string id;
    double temperature_k = 0.0;
    IlluminantSPD spd;
};

/// Planckian sweep with ids like "planck:4500".
inline std::vector<IlluminantEntry> planckian_sweep(double t_min, double t_max, double step,
                                                    const WavelengthGrid& grid = default_grid()) {
    std::vector<IlluminantEntry> out;
    for (const IlluminantSPD& spd : planckian_series(t_min, t_max, step, grid)) {
        double t = t_min + static_cast<double>(out.size()) * step;
        char buf[48];
        std::snprintf(buf, sizeof(buf), "planck:%g", t);
        out.push_back({buf, t, spd});
    }
    return out;
}

struct SampleMeta {
    std::string patch_id;
    std::string illuminant_id;
    double temperature_k = 0.0;
    double angle_deg = 0.0;
};

/// One clean rendered training example. Numeric payloads are quantized
/// through float32 at generation time so the in-memory dataset and its
/// file image carry identical values.
struct Sample {
    Eigen::MatrixXd image;  // (n*n) x s, linear, panel A, fold row first
    ReflectanceSpectrum target_reflectance;
    IlluminantSPD target_spd;
    SampleMeta meta;
};

struct KernelProvenance {
    std::uint32_t samples_per_pair = 256;
    std::uint32_t hinge_oversample = 16;
    std::uint64_t seed = 0;
};

/// Per-channel affine image statistics, computed on the training split.
struct Normalizer {
    Eigen::VectorXd mean;  // s
    Eigen::VectorXd std;   // s
    bool valid() const { return mean.size() > 0 && mean.size() == std.size(); }
};

struct DatasetManifest {
    WavelengthGrid grid;
    std::string camera_id;
    int n = 10;
    double panel_side = 1.0;
    std::vector<double> angles;
    std::vector<std::pair<std::string, double>> illuminants;  // id, temperature (0 = n/a)
    std::vector<std::string> patch_ids;
    std::vector<std::string> train_patches;  // split assignment; empty before splitting
    std::vector<std::string> test_patches;
    Normalizer normalizer;  // empty until computed
    std::uint64_t seed = 0;
    KernelProvenance kernel;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<Sample> samples;

    int count() const { return static_cast<int>(samples.size()); }
};

struct NoiseConfig {
    double poisson_peak = 1e4;
    std::array<double, 5> gaussian_variances{1e-5, 5e-5, 1e-4, 5e-4, 1e-3};
    double gaussian_prob = 0.5;

    void check() const {
        require(poisson_peak > 0.0, "noise: poisson peak must be > 0");
        require(gaussian_prob >= 0.0 && gaussian_prob <= 1.0, "noise: probability in [0,1]");
        for (std::size_t i = 0; i + 1 < gaussian_variances.size(); ++i)
            require(gaussian_variances[i] < gaussian_variances[i + 1],
                    "noise: variances must be ascending");
        require(gaussian_variances[0] >= 0.0, "noise: variances must be >= 0");
    }
};

struct DatasetConfig {
    int n = 10;
    double panel_side = 1.0;
    std::uint32_t samples_per_pair = 256;
    std::uint32_t hinge_oversample = 16;
    std::uint64_t seed = 0;
    int workers = 1;         // kernel assembly threads
    std::string cache_dir;   // kernel disk cache; empty disables caching
};

/// Returns the kernel for one angle, consulting the disk cache when a
/// cache directory is set. Cache files store the symmetrized matrix as
/// raw 64-bit floats, so a cached kernel is bitwise identical to a fresh
/// assembly and datasets render the same either way.
inline KernelMatrix kernel_for_angle(double angle_deg, const DatasetConfig& cfg,
                                     std::uint64_t kernel_seed) {
    std::string path;
    if (!cfg.cache_dir.empty()) {
        path = cfg.cache_dir + "/" +
               kernel_cache_name(angle_deg, cfg.n, cfg.samples_per_pair, kernel_seed,
                                 cfg.hinge_oversample);
        if (std::filesystem::exists(path)) {
            KernelCacheEntry e = load_kernel(path);
            if (e.n == cfg.n && e.angle_deg == angle_deg &&
                e.kernel.samples_per_pair == cfg.samples_per_pair &&
                e.kernel.seed == kernel_seed)
                return std::move(e.kernel);
            throw IngestError("kernel cache entry does not match its name: " + path);
        }
    }
    VCavity cav = build_v_cavity(angle_deg, cfg.panel_side, cfg.n);
    KernelMatrix km = monte_carlo_kernel(cav, cfg.samples_per_pair, kernel_seed,
                                         cfg.hinge_oversample, cfg.workers);
    if (!path.empty()) {
        std::filesystem::create_directories(cfg.cache_dir);
        save_kernel(path, km, angle_deg, cfg.n);
    }
    return km;
}

namespace detail {

inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline Eigen::MatrixXd quantize_f32(const Eigen::MatrixXd& m) {
    return m.cast<float>().cast<double>();
}

inline Eigen::VectorXd quantize_f32(const Eigen::VectorXd& v) {
    return v.cast<float>().cast<double>();
}

}  // namespace detail

/// Renders one clean sample per (angle x patch x illuminant), in that loop
/// order. Kernels are assembled per angle with seeds mixed from the
/// generation seed, so the whole dataset is reproducible from (inputs,
/// config).
inline Dataset generate_dataset(const std::vector<ReflectanceSpectrum>& patches,
                                const std::vector<std::string>& patch_ids,
                                const std::vector<IlluminantEntry>& illuminants,
                                const std::vector<double>& angles,
                                const CameraSensitivities& cam, const DatasetConfig& cfg) {
    require(!patches.empty(), "generate_dataset: no patches");
    require(patches.size() == patch_ids.size(), "generate_dataset: patch/id count mismatch");
    require(!illuminants.empty(), "generate_dataset: no illuminants");
    require(!angles.empty(), "generate_dataset: no angles");
    cam.check();

    const WavelengthGrid grid = patches[0].grid();
    for (const auto& p : patches)
        if (!(p.grid() == grid)) throw IngestError("generate_dataset: mixed patch grids");
    for (const auto& e : illuminants)
        if (!(e.spd.grid() == grid)) throw IngestError("generate_dataset: illuminant grid mismatch");

    Dataset ds;
    ds.manifest.grid = grid;
    ds.manifest.camera_id = cam.id;
    ds.manifest.n = cfg.n;
    ds.manifest.panel_side = cfg.panel_side;
    ds.manifest.angles = angles;
    for (const auto& e : illuminants) ds.manifest.illuminants.emplace_back(e.id, e.temperature_k);
    ds.manifest.patch_ids = patch_ids;
    ds.manifest.seed = cfg.seed;
    ds.manifest.kernel = {cfg.samples_per_pair, cfg.hinge_oversample, cfg.seed};
    ds.samples.reserve(patches.size() * illuminants.size() * angles.size());

    for (std::size_t a = 0; a < angles.size(); ++a) {
        VCavity cav = build_v_cavity(angles[a], cfg.panel_side, cfg.n);
        KernelMatrix km = kernel_for_angle(angles[a], cfg, mix_seed(cfg.seed, a));
        EigenSystem eig = eigendecompose(km);
        for (std::size_t p = 0; p < patches.size(); ++p) {
            for (std::size_t i = 0; i < illuminants.size(); ++i) {
                PanelImage img =
                    render_panel_image(cav, eig, patches[p], illuminants[i].spd, cam);
                Sample s;
                s.image = detail::quantize_f32(img.data);
                s.target_reflectance = ReflectanceSpectrum(
                    grid, detail::quantize_f32(patches[p].values()));
                s.target_spd = IlluminantSPD::unnormalized(
                    grid, detail::quantize_f32(illuminants[i].spd.values()));
                s.meta = {patch_ids[p], illuminants[i].id, illuminants[i].temperature_k,
                          angles[a]};
                ds.samples.push_back(std::move(s));
            }
        }
    }
    return ds;
}

/// Splits at patch granularity: every sample of a patch lands on the same
/// side, so no reflectance is shared between train and test. Patch order
/// is shuffled deterministically from the seed; floor(fraction * patches)
/// go to the training side.
inline std::pair<Dataset, Dataset> split_by_patch(const Dataset& ds, double train_fraction,
                                                  std::uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "split_by_patch: fraction must be in (0, 1)");
    const auto& ids = ds.manifest.patch_ids;
    if (ids.size() < 2) throw ConfigError("split_by_patch: need at least 2 patches");

    std::vector<std::size_t> order(ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Pcg32 rng(mix_seed(seed, 0x53504c4954ull));  // tag: "SPLIT"
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
        if (j > i) j = i;
        std::swap(order[i], order[j]);
    }

    std::size_t n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ids.size())));
    if (n_train < 1 || n_train >= ids.size())
        throw ConfigError("split_by_patch: fraction leaves one side empty");

    std::vector<std::string> train_ids, test_ids;
    std::unordered_map<std::string, bool> is_train;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::string& id = ids[order[i]];
        bool tr = i < n_train;
        (tr ? train_ids : test_ids).push_back(id);
        is_train[id] = tr;
    }

    Dataset train, test;
    train.manifest = ds.manifest;
    test.manifest = ds.manifest;
    train.manifest.train_patches = test.manifest.train_patches = train_ids;
    train.manifest.test_patches = test.manifest.test_patches = test_ids;
    for (const Sample& s : ds.samples)
        (is_train.at(s.meta.patch_id) ? train : test).samples.push_back(s);
    return {std::move(train), std::move(test)};
}

/// Per-channel mean and population standard deviation over every facet of
/// every training image.
inline Normalizer compute_normalizer(const Dataset& train) {
    require(!train.samples.empty(), "compute_normalizer: empty training split");
    const int s = static_cast<int>(train.samples[0].image.cols());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(s);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(s);
    double count = 0.0;
    for (const Sample& smp : train.samples) {
        require(smp.image.cols() == s, "compute_normalizer: mixed channel counts");
        sum += smp.image.colwise().sum().transpose();
        sumsq += smp.image.array().square().colwise().sum().matrix().transpose();
        count += static_cast<double>(smp.image.rows());
    }
    Normalizer nz;
    nz.mean = sum / count;
    Eigen::VectorXd var = (sumsq / count - nz.mean.cwiseProduct(nz.mean)).cwiseMax(0.0);
    nz.std = var.cwiseSqrt();
    for (int c = 0; c < s; ++c)
        if (!(nz.std[c] > 0.0))
            throw ConfigError("compute_normalizer: channel " + std::to_string(c) +
                              " has zero variance");
    return nz;
}

inline Eigen::MatrixXd apply_normalizer(const Eigen::MatrixXd& image, const Normalizer& nz) {
    require(nz.valid() && image.cols() == nz.mean.size(), "normalizer: channel mismatch");
    return (image.rowwise() - nz.mean.transpose()).array().rowwise() /
           nz.std.transpose().array();
}

inline Eigen::MatrixXd unapply_normalizer(const Eigen::MatrixXd& image, const Normalizer& nz) {
    require(nz.valid() && image.cols() == nz.mean.size(), "normalizer: channel mismatch");
    return (image.array().rowwise() * nz.std.transpose().array()).matrix().rowwise() +
           nz.mean.transpose();
}

/// Sensor noise on a clean linear image: per-pixel Poisson at the
/// configured photon peak, then with probability gaussian_prob one
/// variance from the set is drawn and white Gaussian noise of that
/// variance is added to the whole image; negatives clamp to zero.
/// Draw order is fixed (Poisson row-major, then the probability gate,
/// then the variance pick, then Gaussian row-major) so a given rng state
/// yields one reproducible image.
inline Eigen::MatrixXd augment_noise(const Eigen::MatrixXd& image, Pcg32& rng,
                                     const NoiseConfig& cfg = {}) {
    cfg.check();
    Eigen::MatrixXd out(image.rows(), image.cols());
    for (Eigen::Index i = 0; i < image.rows(); ++i)
        for (Eigen::Index c = 0; c < image.cols(); ++c) {
            double v = image(i, c);
            if (!std::isfinite(v) || v < 0.0)
                throw Error("augment_noise: image must be clean (finite, >= 0)");
            out(i, c) =
                static_cast<double>(poisson(rng, v * cfg.poisson_peak)) / cfg.poisson_peak;
        }
    if (rng.uniform() < cfg.gaussian_prob) {
        auto idx = static_cast<std::size_t>(rng.uniform() * 5.0);
        if (idx > 4) idx = 4;
        double sigma = std::sqrt(cfg.gaussian_variances[idx]);
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                out(i, c) += sigma * normal(rng);
    }
    return out.cwiseMax(0.0);
}

namespace detail {

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["grid"] = {{"start_nm", m.grid.start_nm},
                 {"end_nm", m.grid.end_nm},
                 {"step_nm", m.grid.step_nm}};
    j["camera_id"] = m.camera_id;
    j["n"] = m.n;
    j["panel_side"] = m.panel_side;
    j["angles"] = m.angles;
    auto& il = j["illuminants"] = nlohmann::json::array();
    for (const auto& [id, t] : m.illuminants)
        il.push_back({{"id", id}, {"temperature_k", t}});
    j["patch_ids"] = m.patch_ids;
    j["split"] = {{"train", m.train_patches}, {"test", m.test_patches}};
    if (m.normalizer.valid()) {
        j["normalizer"] = {
            {"mean", std::vector<double>(m.normalizer.mean.begin(), m.normalizer.mean.end())},
            {"std", std::vector<double>(m.normalizer.std.begin(), m.normalizer.std.end())}};
    } else {
        j["normalizer"] = nullptr;
    }
    j["seed"] = m.seed;
    j["kernel"] = {{"samples_per_pair", m.kernel.samples_per_pair},
                   {"hinge_oversample", m.kernel.hinge_oversample},
                   {"seed", m.kernel.seed}};
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.grid.start_nm = j.at("grid").at("start_nm").get<double>();
    m.grid.end_nm = j.at("grid").at("end_nm").get<double>();
    m.grid.step_nm = j.at("grid").at("step_nm").get<double>();
    m.camera_id = j.at("camera_id").get<std::string>();
    m.n = j.at("n").get<int>();
    m.panel_side = j.at("panel_side").get<double>();
    m.angles = j.at("angles").get<std::vector<double>>();
    for (const auto& e : j.at("illuminants"))
        m.illuminants.emplace_back(e.at("id").get<std::string>(),
                                   e.at("temperature_k").get<double>());
    m.patch_ids = j.at("patch_ids").get<std::vector<std::string>>();
    m.train_patches = j.at("split").at("train").get<std::vector<std::string>>();
    m.test_patches = j.at("split").at("test").get<std::vector<std::string>>();
    if (!j.at("normalizer").is_null()) {
        auto mean = j.at("normalizer").at("mean").get<std::vector<double>>();
        auto sd = j.at("normalizer").at("std").get<std::vector<double>>();
        m.normalizer.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), mean.size());
        m.normalizer.std = Eigen::Map<Eigen::VectorXd>(sd.data(), sd.size());
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.kernel.samples_per_pair = j.at("kernel").at("samples_per_pair").get<std::uint32_t>();
    m.kernel.hinge_oversample = j.at("kernel").at("hinge_oversample").get<std::uint32_t>();
    m.kernel.seed = j.at("kernel").at("seed").get<std::uint64_t>();
    return m;
}

}  // namespace detail

inline constexpr char kDatasetMagic[8] = {'S', 'P', 'F', 'D', 'S', 'E', 'T', '1'};

/// Container layout: magic, version, counts, grid, manifest JSON, then
/// per-sample records (meta indices + float32 payloads), CRC64 trailer.
inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::unordered_map<std::string, std::uint32_t> patch_idx, illum_idx;
    std::unordered_map<double, std::uint32_t> angle_idx;
    for (std::size_t i = 0; i < ds.manifest.patch_ids.size(); ++i)
        patch_idx[ds.manifest.patch_ids[i]] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < ds.manifest.illuminants.size(); ++i)
        illum_idx[ds.manifest.illuminants[i].first] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < ds.manifest.angles.size(); ++i)
        angle_idx[ds.manifest.angles[i]] = static_cast<std::uint32_t>(i);

    const int q = ds.manifest.grid.count();
    const std::uint32_t n = static_cast<std::uint32_t>(ds.manifest.n);
    std::uint32_t channels = 0;
    if (!ds.samples.empty()) channels = static_cast<std::uint32_t>(ds.samples[0].image.cols());

    BinaryWriter w(path);
    w.put_bytes(kDatasetMagic, sizeof(kDatasetMagic));
    w.put<std::uint32_t>(1);  // version
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.samples.size()));
    w.put<std::uint32_t>(n);
    w.put<std::uint32_t>(channels);
    w.put<double>(ds.manifest.grid.start_nm);
    w.put<double>(ds.manifest.grid.end_nm);
    w.put<double>(ds.manifest.grid.step_nm);
    w.put_string(detail::manifest_to_json(ds.manifest).dump());

    std::vector<float> buf;
    for (const Sample& s : ds.samples) {
        auto pit = patch_idx.find(s.meta.patch_id);
        auto iit = illum_idx.find(s.meta.illuminant_id);
        auto ait = angle_idx.find(s.meta.angle_deg);
        if (pit == patch_idx.end() || iit == illum_idx.end() || ait == angle_idx.end())
            throw Error("save_dataset: sample metadata missing from the manifest");
        require(s.image.rows() == static_cast<Eigen::Index>(n) * n &&
                    s.image.cols() == static_cast<Eigen::Index>(channels),
                "save_dataset: inconsistent image shape");
        require(s.target_reflectance.size() == q && s.target_spd.size() == q,
                "save_dataset: target length does not match the grid");
        w.put<std::uint32_t>(pit->second);
        w.put<std::uint32_t>(iit->second);
        w.put<std::uint32_t>(ait->second);
        buf.resize(static_cast<std::size_t>(s.image.size()));
        for (Eigen::Index i = 0; i < s.image.rows(); ++i)
            for (Eigen::Index c = 0; c < s.image.cols(); ++c)
                buf[static_cast<std::size_t>(i * s.image.cols() + c)] =
                    static_cast<float>(s.image(i, c));
        w.put_f32(buf.data(), buf.size());
        buf.resize(static_cast<std::size_t>(q));
        for (int i = 0; i < q; ++i) buf[i] = static_cast<float>(s.target_reflectance[i]);
        w.put_f32(buf.data(), buf.size());
        for (int i = 0; i < q; ++i) buf[i] = static_cast<float>(s.target_spd.values()[i]);
        w.put_f32(buf.data(), buf.size());
    }
    w.finish_with_crc();
}

inline Dataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    auto magic = r.get<std::array<char, 8>>();
    if (std::memcmp(magic.data(), kDatasetMagic, sizeof(kDatasetMagic)) != 0)
        throw IngestError("load_dataset: not a dataset file: " + path);
    const auto version = r.get<std::uint32_t>();
    if (version != 1)
        throw IngestError("load_dataset: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    const auto channels = r.get<std::uint32_t>();
    WavelengthGrid grid;
    grid.start_nm = r.get<double>();
    grid.end_nm = r.get<double>();
    grid.step_nm = r.get<double>();

    Dataset ds;
    try {
        ds.manifest = detail::manifest_from_json(nlohmann::json::parse(r.get_string()));
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("load_dataset: bad manifest: ") + e.what());
    }
    if (!(ds.manifest.grid == grid))
        throw IngestError("load_dataset: header grid disagrees with the manifest");

    const int q = grid.count();
    std::vector<float> buf;
    ds.samples.reserve(count);
    for (std::uint32_t si = 0; si < count; ++si) {
        const auto pi = r.get<std::uint32_t>();
        const auto ii = r.get<std::uint32_t>();
        const auto ai = r.get<std::uint32_t>();
        if (pi >= ds.manifest.patch_ids.size() || ii >= ds.manifest.illuminants.size() ||
            ai >= ds.manifest.angles.size())
            throw IngestError("load_dataset: sample metadata index out of range");
        Sample s;
        s.image.resize(static_cast<Eigen::Index>(n) * n, channels);
        buf.resize(static_cast<std::size_t>(s.image.size()));
        r.get_f32(buf.data(), buf.size());
        for (Eigen::Index i = 0; i < s.image.rows(); ++i)
            for (Eigen::Index c = 0; c < s.image.cols(); ++c)
                s.image(i, c) =
                    static_cast<double>(buf[static_cast<std::size_t>(i * channels + c)]);
        Eigen::VectorXd refl(q), spd(q);
        buf.resize(static_cast<std::size_t>(q));
        r.get_f32(buf.data(), buf.size());
        for (int i = 0; i < q; ++i) refl[i] = static_cast<double>(buf[i]);
        r.get_f32(buf.data(), buf.size());
        for (int i = 0; i < q; ++i) spd[i] = static_cast<double>(buf[i]);
        s.target_reflectance = ReflectanceSpectrum(grid, std::move(refl));
        s.target_spd = IlluminantSPD::unnormalized(grid, std::move(spd));
        s.meta = {ds.manifest.patch_ids[pi], ds.manifest.illuminants[ii].first,
                  ds.manifest.illuminants[ii].second, ds.manifest.angles[ai]};
        ds.samples.push_back(std::move(s));
    }
    r.verify_crc();
    return ds;
}

}  // namespace specfold
