// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "specfold/dataset.hpp"
#include "specfold/io.hpp"
#include "specfold/metrics.hpp"
#include "specfold/network.hpp"

namespace specfold {

struct TrainConfig {
    double lr0 = 1e-4;
    int decay_every = 20;       // epochs per learning-rate drop
    double decay_factor = 0.1;  // multiplier at each drop
    double momentum = 0.9;
    int batch_size = 50;
    int epochs = 60;
    std::uint64_t seed = 1;
    LossWeights weights;
    NoiseConfig noise;
    bool augment = true;
    std::string log_path;         // per-epoch CSV when nonempty
    std::string checkpoint_path;  // written every checkpoint_every epochs and at the end
    int checkpoint_every = 0;

    void check() const {
        require(lr0 > 0.0 && decay_factor > 0.0 && decay_every > 0, "train: bad lr schedule");
        require(momentum >= 0.0 && momentum < 1.0, "train: momentum in [0, 1)");
        require(batch_size > 0 && epochs > 0, "train: batch size and epochs must be positive");
        weights.check();
    }
};

inline double lr_at(const TrainConfig& cfg, int epoch) {
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

/// Everything needed to reuse a trained network: the parameters, the
/// optimizer state (so training can resume), the input normalizer, and
/// the data grid the targets live on.
struct Checkpoint {
    NetworkConfig config;
    TwoBranchNet<float> net;
    NetworkGrads<float> momentum;
    int epoch = 0;
    std::uint64_t seed = 0;
    WavelengthGrid grid;
    Normalizer normalizer;
};

namespace detail {

inline nlohmann::json network_config_to_json(const NetworkConfig& c) {
    return {{"in_c", c.in_c},     {"in_h", c.in_h},
            {"in_w", c.in_w},     {"c1", c.c1},
            {"c2", c.c2},         {"c3", c.c3},
            {"hidden", c.hidden}, {"out", c.out},
            {"spd_branch", c.spd_branch}, {"average_pool", c.average_pool}};
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.in_c = j.at("in_c").get<int>();
    c.in_h = j.at("in_h").get<int>();
    c.in_w = j.at("in_w").get<int>();
    c.c1 = j.at("c1").get<int>();
    c.c2 = j.at("c2").get<int>();
    c.c3 = j.at("c3").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.out = j.at("out").get<int>();
    c.spd_branch = j.at("spd_branch").get<bool>();
    c.average_pool = j.at("average_pool").get<bool>();
    return c;
}

template <typename Derived>
void put_tensor(BinaryWriter& w, const Eigen::MatrixBase<Derived>& t) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index c = 0; c < t.cols(); ++c)
        for (Eigen::Index r = 0; r < t.rows(); ++r) w.put<float>(t(r, c));
}

template <typename T>
void get_tensor(BinaryReader& r, T& t) {
    auto rows = r.get<std::uint32_t>();
    auto cols = r.get<std::uint32_t>();
    t.resize(rows, cols);
    for (std::uint32_t c = 0; c < cols; ++c)
        for (std::uint32_t rr = 0; rr < rows; ++rr) t(rr, c) = r.get<float>();
}

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'F', 'N', 'E', 'T', '0', '1'};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    BinaryWriter w(path);
    w.put_bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.put<std::uint32_t>(1);  // version
    nlohmann::json j;
    j["config"] = detail::network_config_to_json(ckpt.config);
    j["epoch"] = ckpt.epoch;
    j["seed"] = ckpt.seed;
    j["grid"] = {{"start_nm", ckpt.grid.start_nm},
                 {"end_nm", ckpt.grid.end_nm},
                 {"step_nm", ckpt.grid.step_nm}};
    if (ckpt.normalizer.valid()) {
        j["normalizer"] = {
            {"mean",
             std::vector<double>(ckpt.normalizer.mean.begin(), ckpt.normalizer.mean.end())},
            {"std", std::vector<double>(ckpt.normalizer.std.begin(), ckpt.normalizer.std.end())}};
    } else {
        j["normalizer"] = nullptr;
    }
    w.put_string(j.dump());
    Checkpoint& mut = const_cast<Checkpoint&>(ckpt);  // visit is non-const; writes nothing
    mut.net.visit(mut.momentum, [&](const auto& p, const auto& m) {
        detail::put_tensor(w, p);
        detail::put_tensor(w, m);
    });
    w.finish_with_crc();
}

inline Checkpoint load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    auto magic = r.get<std::array<char, 8>>();
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw IngestError("not a checkpoint file: " + path);
    if (r.get<std::uint32_t>() != 1) throw IngestError("checkpoint version mismatch: " + path);
    Checkpoint ckpt;
    try {
        nlohmann::json j = nlohmann::json::parse(r.get_string());
        ckpt.config = detail::network_config_from_json(j.at("config"));
        ckpt.epoch = j.at("epoch").get<int>();
        ckpt.seed = j.at("seed").get<std::uint64_t>();
        ckpt.grid.start_nm = j.at("grid").at("start_nm").get<double>();
        ckpt.grid.end_nm = j.at("grid").at("end_nm").get<double>();
        ckpt.grid.step_nm = j.at("grid").at("step_nm").get<double>();
        if (!j.at("normalizer").is_null()) {
            auto mean = j.at("normalizer").at("mean").get<std::vector<double>>();
            auto sd = j.at("normalizer").at("std").get<std::vector<double>>();
            ckpt.normalizer.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), mean.size());
            ckpt.normalizer.std = Eigen::Map<Eigen::VectorXd>(sd.data(), sd.size());
        }
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("checkpoint: bad metadata: ") + e.what());
    }
    ckpt.net = init_network<float>(ckpt.config, 0);
    ckpt.momentum = ckpt.net.make_grads();
    ckpt.net.visit(ckpt.momentum, [&](auto& p, auto& m) {
        detail::get_tensor(r, p);
        detail::get_tensor(r, m);
    });
    r.verify_crc();
    return ckpt;
}

namespace detail {

/// Packs dataset samples into a network input batch plus target columns.
/// Images are noised (optionally) in the linear domain, then normalized.
inline void assemble_batch(const Dataset& ds, const std::vector<int>& idx, std::size_t begin,
                           std::size_t end, bool augment, const NoiseConfig& noise, Pcg32& rng,
                           nn::Batch<float>& x, nn::Mat<float>& r, nn::Mat<float>& e,
                           bool want_e) {
    const auto& nz = ds.manifest.normalizer;
    const int b = static_cast<int>(end - begin);
    const int q = ds.manifest.grid.count();
    const int c = static_cast<int>(ds.samples[0].image.cols());
    const int hw = static_cast<int>(ds.samples[0].image.rows());
    x = nn::Batch<float>(c, ds.manifest.n, ds.manifest.n, b);
    r.resize(q, b);
    if (want_e) e.resize(q, b);
    for (int k = 0; k < b; ++k) {
        const Sample& s = ds.samples[idx[begin + k]];
        Eigen::MatrixXd img = augment ? augment_noise(s.image, rng, noise) : s.image;
        img = apply_normalizer(img, nz);
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < hw; ++p)
                x.data(static_cast<Eigen::Index>(ch) * hw + p, k) =
                    static_cast<float>(img(p, ch));
        r.col(k) = s.target_reflectance.values().cast<float>();
        if (want_e) e.col(k) = s.target_spd.values().cast<float>();
    }
}

}  // namespace detail

struct PredictResult {
    ReflectanceSpectrum reflectance;
    IlluminantSPD spd;
    bool has_spd = false;
};

/// Normalizes a raw linear image with the stored statistics, runs the
/// network, and clamps the heads into their physical ranges (inference
/// only; training sees the unclamped outputs).
inline PredictResult predict(Checkpoint& ckpt, const Eigen::MatrixXd& raw_image) {
    if (!ckpt.normalizer.valid())
        throw ConfigError("predict: checkpoint carries no normalizer");
    const int hw = ckpt.config.in_h * ckpt.config.in_w;
    require(raw_image.rows() == hw && raw_image.cols() == ckpt.config.in_c,
            "predict: image shape mismatch");
    Eigen::MatrixXd img = apply_normalizer(raw_image, ckpt.normalizer);
    nn::Batch<float> x(ckpt.config.in_c, ckpt.config.in_h, ckpt.config.in_w, 1);
    for (int ch = 0; ch < ckpt.config.in_c; ++ch)
        for (int p = 0; p < hw; ++p)
            x.data(static_cast<Eigen::Index>(ch) * hw + p, 0) = static_cast<float>(img(p, ch));
    auto [rhat, ehat] = ckpt.net.forward(x);
    PredictResult out;
    out.reflectance =
        ReflectanceSpectrum::clamped(ckpt.grid, rhat.col(0).cast<double>());
    if (ckpt.config.spd_branch) {
        out.spd = IlluminantSPD::unnormalized(ckpt.grid,
                                              ehat.col(0).cast<double>().cwiseMax(0.0));
        out.has_spd = true;
    }
    return out;
}

/// Scores a checkpoint over every sample of a dataset (clean stored
/// images; augmentation never touches evaluation). DE00 under the given
/// illuminant/observer.
inline EvalReport evaluate(Checkpoint& ckpt, const Dataset& ds, const IlluminantSPD& de00_illum,
                           const ColorMatchingFunctions& cmf) {
    if (ds.samples.empty()) throw ConfigError("evaluate: empty split");
    if (!(ds.manifest.grid == ckpt.grid))
        throw ConfigError("evaluate: checkpoint grid does not match the dataset");
    if (!ckpt.normalizer.valid()) throw ConfigError("evaluate: checkpoint carries no normalizer");
    EvalReport rep;
    const int chunk = 64;
    std::vector<int> idx(ds.samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    Pcg32 unused(0);
    NoiseConfig no_noise;
    for (std::size_t begin = 0; begin < idx.size(); begin += chunk) {
        std::size_t end = std::min(idx.size(), begin + chunk);
        nn::Batch<float> x;
        nn::Mat<float> r, e;
        detail::assemble_batch(ds, idx, begin, end, false, no_noise, unused, x, r, e,
                               ckpt.config.spd_branch);
        auto [rhat, ehat] = ckpt.net.forward(x);
        for (Eigen::Index k = 0; k < rhat.cols(); ++k) {
            const Sample& s = ds.samples[begin + k];
            ReflectanceSpectrum est =
                ReflectanceSpectrum::clamped(ckpt.grid, rhat.col(k).cast<double>());
            score_sample(rep, s.target_reflectance, est, de00_illum, cmf);
            if (ckpt.config.spd_branch)
                rep.spd_rmse.push_back(
                    rmse(s.target_spd.values(), ehat.col(k).cast<double>().cwiseMax(0.0)));
        }
    }
    rep.finalize();
    return rep;
}

/// One epoch row of the training log.
struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    LossBreakdown loss;  // averaged over batches, weighted by batch size
    double test_rmse = -1.0, test_pd = -1.0, test_de00 = -1.0;  // -1 when no test set
};

/// SGD with momentum over patch-shuffled batches with fresh noise per
/// batch. The dataset must carry its normalizer and split assignment.
/// `test` (optional) is evaluated after every epoch for the log.
/// Single-threaded and bitwise deterministic in (seed, config, data).
inline Checkpoint train(const Dataset& train_ds, const Dataset* test,
                        const NetworkConfig& netcfg, const TrainConfig& cfg,
                        const ColorMatchingFunctions& cmf,
                        const IlluminantSPD& single_illuminant,
                        std::vector<EpochStats>* history = nullptr) {
    cfg.check();
    netcfg.check();
    if (!train_ds.manifest.normalizer.valid())
        throw ConfigError("train: dataset carries no normalizer");
    if (train_ds.manifest.train_patches.empty())
        throw ConfigError("train: dataset carries no split assignment");
    require(!train_ds.samples.empty(), "train: empty training set");
    require(netcfg.out == train_ds.manifest.grid.count(),
            "train: output width does not match the target grid");

    Checkpoint ckpt;
    ckpt.config = netcfg;
    ckpt.net = init_network<float>(netcfg, cfg.seed);
    ckpt.momentum = ckpt.net.make_grads();
    ckpt.seed = cfg.seed;
    ckpt.grid = train_ds.manifest.grid;
    ckpt.normalizer = train_ds.manifest.normalizer;

    Eigen::VectorXd cmf_sq = cmf_square_sum(cmf);
    nn::Vec<float> fixed_e = single_illuminant.values().cast<float>();
    NetworkGrads<float> grads = ckpt.net.make_grads();

    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) throw IngestError("train: cannot open log: " + cfg.log_path);
        log << "epoch,lr,loss_r,loss_e,loss_s,test_rmse,test_pd,test_de00\n";
    }

    const int count = train_ds.count();
    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg, epoch);
        Pcg32 shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x0e0cu));
        for (int i = count - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.uniform() * (i + 1));
            if (j > i) j = i;
            std::swap(order[i], order[j]);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        double seen = 0.0;
        int batch_index = 0;
        for (int begin = 0; begin < count; begin += cfg.batch_size, ++batch_index) {
            int end = std::min(count, begin + cfg.batch_size);
            Pcg32 noise_rng(
                mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                         0xb000u + static_cast<std::uint64_t>(batch_index)));
            nn::Batch<float> x;
            nn::Mat<float> r, e;
            detail::assemble_batch(train_ds, order, begin, end, cfg.augment, cfg.noise,
                                   noise_rng, x, r, e, netcfg.spd_branch);
            auto [rhat, ehat] = ckpt.net.forward(x);
            nn::Mat<float> d_r, d_e;
            LossBreakdown lb =
                spectral_loss<float>(rhat, ehat, r, e, cmf_sq, cfg.weights,
                                     netcfg.spd_branch ? nullptr : &fixed_e, &d_r, &d_e);
            if (!std::isfinite(lb.total)) {
                ckpt.epoch = epoch;
                if (!cfg.checkpoint_path.empty()) save_checkpoint(ckpt, cfg.checkpoint_path);
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
            }
            ckpt.net.backward(d_r, d_e, grads);
            auto step = [&](auto& p, auto& m, const auto& g) {
                m = static_cast<float>(cfg.momentum) * m - static_cast<float>(lr) * g;
                p += m;
            };
            step(ckpt.net.conv1.w, ckpt.momentum.conv1_w, grads.conv1_w);
            step(ckpt.net.conv1.b, ckpt.momentum.conv1_b, grads.conv1_b);
            step(ckpt.net.conv2.w, ckpt.momentum.conv2_w, grads.conv2_w);
            step(ckpt.net.conv2.b, ckpt.momentum.conv2_b, grads.conv2_b);
            step(ckpt.net.conv3.w, ckpt.momentum.conv3_w, grads.conv3_w);
            step(ckpt.net.conv3.b, ckpt.momentum.conv3_b, grads.conv3_b);
            step(ckpt.net.r_fc1.w, ckpt.momentum.r_fc1_w, grads.r_fc1_w);
            step(ckpt.net.r_fc1.b, ckpt.momentum.r_fc1_b, grads.r_fc1_b);
            step(ckpt.net.r_fc2.w, ckpt.momentum.r_fc2_w, grads.r_fc2_w);
            step(ckpt.net.r_fc2.b, ckpt.momentum.r_fc2_b, grads.r_fc2_b);
            if (netcfg.spd_branch) {
                step(ckpt.net.e_fc1.w, ckpt.momentum.e_fc1_w, grads.e_fc1_w);
                step(ckpt.net.e_fc1.b, ckpt.momentum.e_fc1_b, grads.e_fc1_b);
                step(ckpt.net.e_fc2.w, ckpt.momentum.e_fc2_w, grads.e_fc2_w);
                step(ckpt.net.e_fc2.b, ckpt.momentum.e_fc2_b, grads.e_fc2_b);
            }

            double bsz = static_cast<double>(end - begin);
            stats.loss.l_r += lb.l_r * bsz;
            stats.loss.l_e += lb.l_e * bsz;
            stats.loss.l_s += lb.l_s * bsz;
            stats.loss.total += lb.total * bsz;
            seen += bsz;
        }
        stats.loss.l_r /= seen;
        stats.loss.l_e /= seen;
        stats.loss.l_s /= seen;
        stats.loss.total /= seen;
        ckpt.epoch = epoch + 1;

        if (test) {
            EvalReport rep = evaluate(ckpt, *test, single_illuminant, cmf);
            stats.test_rmse = rep.rmse.avg;
            stats.test_pd = rep.pd.avg;
            stats.test_de00 = rep.de00.avg;
        }
        if (log) {
            char line[256];
            std::snprintf(line, sizeof(line), "%d,%.6g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g\n",
                          stats.epoch, stats.lr, stats.loss.l_r, stats.loss.l_e, stats.loss.l_s,
                          stats.test_rmse, stats.test_pd, stats.test_de00);
            log << line;
        }
        if (history) history->push_back(stats);
        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0)
            save_checkpoint(ckpt, cfg.checkpoint_path);
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(ckpt, cfg.checkpoint_path);
    return ckpt;
}

/// Effect of the consistency loss: for each seed, train once with the
/// configured w_s and once with w_s = 0, everything else equal, and
/// report the percentage improvement of the with-consistency arm on the
/// test split (positive = consistency helps).
struct AblationReport {
    std::vector<double> rmse_change_pct, pd_change_pct, de00_change_pct;  // per seed
    double mean_rmse_change_pct = 0.0, mean_pd_change_pct = 0.0, mean_de00_change_pct = 0.0;
};

inline AblationReport ablate_consistency(const Dataset& train_ds, const Dataset& test_ds,
                                         const NetworkConfig& netcfg, const TrainConfig& base,
                                         const std::vector<std::uint64_t>& seeds,
                                         const ColorMatchingFunctions& cmf,
                                         const IlluminantSPD& single_illuminant) {
    require(!seeds.empty(), "ablation: need at least one seed");
    AblationReport rep;
    auto pct = [](double off, double on) {
        return off > 0.0 ? 100.0 * (off - on) / off : 0.0;
    };
    for (std::uint64_t seed : seeds) {
        TrainConfig with = base;
        with.seed = seed;
        with.log_path.clear();
        with.checkpoint_path.clear();
        TrainConfig without = with;
        without.weights.w_s = 0.0;
        Checkpoint on = train(train_ds, nullptr, netcfg, with, cmf, single_illuminant);
        Checkpoint off = train(train_ds, nullptr, netcfg, without, cmf, single_illuminant);
        EvalReport on_rep = evaluate(on, test_ds, single_illuminant, cmf);
        EvalReport off_rep = evaluate(off, test_ds, single_illuminant, cmf);
        rep.rmse_change_pct.push_back(pct(off_rep.rmse.avg, on_rep.rmse.avg));
        rep.pd_change_pct.push_back(pct(off_rep.pd.avg, on_rep.pd.avg));
        rep.de00_change_pct.push_back(pct(off_rep.de00.avg, on_rep.de00.avg));
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    rep.mean_rmse_change_pct = mean(rep.rmse_change_pct);
    rep.mean_pd_change_pct = mean(rep.pd_change_pct);
    rep.mean_de00_change_pct = mean(rep.de00_change_pct);
    return rep;
}

}  // namespace specfold
