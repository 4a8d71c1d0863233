// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "oencsd/common.hpp"
#include "oencsd/features.hpp"

using namespace oencsd;

namespace {

std::vector<float> random_signal(int n, std::uint64_t seed) {
    Rng01 rng(seed);
    std::vector<float> s(n);
    for (auto& v : s) v = rng.range(-0.5f, 0.5f);
    return s;
}

// Oracle mel frame: naive double-precision DFT and a filterbank rebuilt from
// the mel formulas, written independently of the implementation.
std::vector<double> oracle_mel_frame(const std::vector<float>& win_samples,
                                     const FeatureConfig& cfg, int nfft) {
    const int W = static_cast<int>(win_samples.size());
    std::vector<double> xw(nfft, 0.0);
    for (int i = 0; i < W; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (W - 1));
        xw[i] = win_samples[i] * hann;
    }
    const int bins = nfft / 2 + 1;
    std::vector<double> power(bins);
    for (int k = 0; k < bins; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int t = 0; t < nfft; ++t)
            acc += xw[t] * std::exp(std::complex<double>(0.0, -2.0 * M_PI * k * t / nfft));
        power[k] = std::norm(acc);
    }
    auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double mel_hi = mel(cfg.sample_rate / 2.0);
    std::vector<double> edges(cfg.n_mels + 2);
    for (int j = 0; j < cfg.n_mels + 2; ++j) edges[j] = hz(mel_hi * j / (cfg.n_mels + 1));
    std::vector<double> out(cfg.n_mels);
    for (int f = 0; f < cfg.n_mels; ++f) {
        double acc = 0.0;
        for (int k = 0; k < bins; ++k) {
            const double fk = double(k) * cfg.sample_rate / nfft;
            const double w = std::min((fk - edges[f]) / (edges[f + 1] - edges[f]),
                                      (edges[f + 2] - fk) / (edges[f + 2] - edges[f + 1]));
            if (w > 0.0) acc += w * power[k];
        }
        out[f] = std::log(std::max(acc, cfg.log_floor));
    }
    return out;
}

}  // namespace

TEST_CASE("frame count follows floor((N - W)/H) + 1") {
    FeatureConfig cfg;
    const auto pcm = random_signal(8000, 11);
    CHECK(logmel(pcm, cfg).cols() == 98);

    CHECK(logmel(std::vector<float>(199, 0.1f), cfg).cols() == 0);
    CHECK(logmel(std::vector<float>(200, 0.1f), cfg).cols() == 1);
    CHECK(logmel(std::vector<float>(280, 0.1f), cfg).cols() == 2);
}

TEST_CASE("silence hits the log floor everywhere") {
    FeatureConfig cfg;
    const std::vector<float> pcm(8000, 0.0f);
    const Eigen::MatrixXf m = logmel(pcm, cfg);
    const float expected = std::log(static_cast<float>(cfg.log_floor));
    REQUIRE(m.cols() == 98);
    CHECK((m.array() == expected).all());
}

TEST_CASE("pure tone lands in the filter whose center is nearest its frequency") {
    FeatureConfig cfg;
    std::vector<float> pcm(8000);
    for (int i = 0; i < 8000; ++i)
        pcm[i] = 0.5f * std::sin(2.0f * float(M_PI) * 1000.0f * i / 8000.0f);

    // Expected bin from the mel formulas alone.
    auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double mel_hi = mel(cfg.sample_rate / 2.0);
    int expected = 0;
    double best = 1e30;
    for (int f = 0; f < cfg.n_mels; ++f) {
        const double center = hz(mel_hi * (f + 1) / (cfg.n_mels + 1));
        if (std::abs(center - 1000.0) < best) {
            best = std::abs(center - 1000.0);
            expected = f;
        }
    }

    const Eigen::MatrixXf m = logmel(pcm, cfg);
    for (int t = 0; t < m.cols(); ++t) {
        int arg = 0;
        m.col(t).maxCoeff(&arg);
        CHECK(arg == expected);
    }
}

TEST_CASE("mel frame values match a naive double-precision oracle") {
    FeatureConfig cfg;
    const auto pcm = random_signal(8000, 99);
    MelExtractor ex(cfg);
    const Eigen::MatrixXf m = logmel(pcm, cfg);

    for (int j : {0, 7, 42, 97}) {
        std::vector<float> win(pcm.begin() + j * cfg.hop_samples(),
                               pcm.begin() + j * cfg.hop_samples() + cfg.window_samples());
        const auto oracle = oracle_mel_frame(win, cfg, ex.nfft());
        for (int f = 0; f < cfg.n_mels; ++f)
            CHECK(m(f, j) == Catch::Approx(oracle[f]).margin(1e-3));
    }
}

TEST_CASE("splicing dimensions, subsampling, and edge replication") {
    FeatureConfig cfg;
    Rng01 rng(5);

    Eigen::MatrixXf one(cfg.n_mels, 1);
    for (int i = 0; i < cfg.n_mels; ++i) one(i, 0) = rng.next();
    const FeatureSequence fs1 = splice_subsample(one, cfg);
    REQUIRE(fs1.data.rows() == 345);
    REQUIRE(fs1.data.cols() == 1);
    for (int o = 0; o < 15; ++o)
        CHECK(fs1.data.block(o * cfg.n_mels, 0, cfg.n_mels, 1) == one.col(0));

    Eigen::MatrixXf hundred(cfg.n_mels, 100);
    for (int c = 0; c < 100; ++c)
        for (int r = 0; r < cfg.n_mels; ++r) hundred(r, c) = rng.next();
    const FeatureSequence fs = splice_subsample(hundred, cfg);
    CHECK(fs.data.cols() == 10);
    CHECK(fs.frame_period == Catch::Approx(0.1));
    // Interior frame: straight concatenation of 15 consecutive mel frames.
    for (int o = 0; o < 15; ++o)
        CHECK(fs.data.block(o * cfg.n_mels, 5, cfg.n_mels, 1) == hundred.col(50 - 7 + o));

    Eigen::MatrixXf constant = Eigen::MatrixXf::Constant(cfg.n_mels, 34, 0.75f);
    const FeatureSequence fsc = splice_subsample(constant, cfg);
    CHECK(fsc.data.cols() == 4);
    CHECK((fsc.data.array() == 0.75f).all());
}

TEST_CASE("streaming featurizer is bit-identical to the batch frontend") {
    FeatureConfig cfg;
    const auto pcm = random_signal(18960, 123);  // 2.37 s
    const FeatureSequence batch = splice_subsample(logmel(pcm, cfg), cfg);

    StreamingFeaturizer sf(cfg);
    Eigen::MatrixXf got(cfg.spliced_dim(), 0);
    auto append = [&](const Eigen::MatrixXf& block) {
        const auto old = got.cols();
        got.conservativeResize(Eigen::NoChange, old + block.cols());
        got.rightCols(block.cols()) = block;
    };
    size_t pos = 0;
    const size_t sizes[] = {1, 7, 160, 999, 4001, 83};
    size_t si = 0;
    while (pos < pcm.size()) {
        const size_t n = std::min(sizes[si++ % 6], pcm.size() - pos);
        append(sf.push(std::span<const float>(pcm.data() + pos, n)));
        pos += n;
    }
    append(sf.finish());

    REQUIRE(got.cols() == batch.data.cols());
    CHECK((got.array() == batch.data.array()).all());

    CHECK(sf.finish().cols() == 0);  // idempotent
    CHECK_THROWS_AS(sf.push(std::span<const float>(pcm.data(), 1)), contract_error);
}

TEST_CASE("streaming featurizer survives sample-by-sample feeding") {
    FeatureConfig cfg;
    const auto pcm = random_signal(4000, 321);  // 0.5 s
    const FeatureSequence batch = splice_subsample(logmel(pcm, cfg), cfg);

    StreamingFeaturizer sf(cfg);
    Eigen::MatrixXf got(cfg.spliced_dim(), 0);
    for (float v : pcm) {
        const Eigen::MatrixXf block = sf.push(std::span<const float>(&v, 1));
        if (block.cols() > 0) {
            const auto old = got.cols();
            got.conservativeResize(Eigen::NoChange, old + block.cols());
            got.rightCols(block.cols()) = block;
        }
    }
    const Eigen::MatrixXf tail = sf.finish();
    if (tail.cols() > 0) {
        const auto old = got.cols();
        got.conservativeResize(Eigen::NoChange, old + tail.cols());
        got.rightCols(tail.cols()) = tail;
    }
    REQUIRE(got.cols() == batch.data.cols());
    CHECK((got.array() == batch.data.array()).all());
}
