// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "oencsd/common.hpp"
#include "oencsd/weights.hpp"

using namespace oencsd;

namespace {

ModelConfig tiny_config() {
    ModelConfig mc;
    mc.d_model = 8;
    mc.n_heads = 2;
    mc.n_encoder_layers = 1;
    mc.ff_dim = 16;
    mc.max_speakers = 3;
    mc.n_decoder_layers_refine = 1;
    mc.input_dim = 10;
    return mc;
}

std::string serialized(const WeightBundle& b) {
    std::ostringstream os(std::ios::binary);
    b.save(os);
    return os.str();
}

WeightBundle parse(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    return WeightBundle::load(is);
}

}  // namespace

TEST_CASE("required tensor registry includes the documented names") {
    const auto specs = WeightBundle::required_tensors(tiny_config());
    auto find = [&](const std::string& n) {
        return std::find_if(specs.begin(), specs.end(),
                            [&](const TensorSpec& s) { return s.name == n; }) != specs.end();
    };
    CHECK(find("gru.update.W"));
    CHECK(find("cluster.h0"));
    CHECK(find("refine.g_spk"));
    CHECK(find("eda.exist.b"));
    CHECK(find("encoder.layer0.attn.Wq"));
    CHECK(find("refine.cent.layer0.cross.Wv"));
}

TEST_CASE("random bundles are seeded, bounded, and complete") {
    const ModelConfig mc = tiny_config();
    const WeightBundle a = WeightBundle::random(mc, 42);
    const WeightBundle b = WeightBundle::random(mc, 42);
    const WeightBundle c = WeightBundle::random(mc, 43);
    a.validate_complete();

    const float bound = 1.0f / std::sqrt(float(mc.d_model));
    bool any_diff = false;
    for (const auto& spec : WeightBundle::required_tensors(mc)) {
        const auto& ma = a.mat(spec.name, spec.rows, spec.cols);
        const auto& mb = b.mat(spec.name, spec.rows, spec.cols);
        const auto& mcm = c.mat(spec.name, spec.rows, spec.cols);
        REQUIRE((ma.array() == mb.array()).all());
        if (!(ma.array() == mcm.array()).all()) any_diff = true;
        REQUIRE(ma.array().isFinite().all());
        REQUIRE((ma.array().abs() <= bound).all());
    }
    CHECK(any_diff);
}

TEST_CASE("save then load is bit-exact") {
    const WeightBundle a = WeightBundle::random(tiny_config(), 7);
    const WeightBundle b = parse(serialized(a));
    CHECK(b.config().d_model == a.config().d_model);
    CHECK(b.config().existence_threshold == a.config().existence_threshold);
    CHECK(b.n_tensors() == a.n_tensors());
    for (const auto& spec : WeightBundle::required_tensors(a.config())) {
        const auto& ma = a.mat(spec.name, spec.rows, spec.cols);
        const auto& mb = b.mat(spec.name, spec.rows, spec.cols);
        CHECK((ma.array() == mb.array()).all());
    }
}

TEST_CASE("corrupted containers are rejected with format errors") {
    const std::string good = serialized(WeightBundle::random(tiny_config(), 3));

    SECTION("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        CHECK_THROWS_AS(parse(bad), format_error);
    }
    SECTION("truncated payload") {
        CHECK_THROWS_AS(parse(good.substr(0, good.size() - 9)), format_error);
    }
    SECTION("flipped payload byte breaks the checksum") {
        std::string bad = good;
        bad[good.size() / 2] ^= 0x40;
        CHECK_THROWS_AS(parse(bad), format_error);
    }
    SECTION("flipped trailing checksum byte") {
        std::string bad = good;
        bad[good.size() - 1] ^= 0x01;
        CHECK_THROWS_AS(parse(bad), format_error);
    }
}

TEST_CASE("missing required tensor names the offender") {
    WeightBundle a = WeightBundle::random(tiny_config(), 9);
    a.erase("gru.update.W");
    try {
        parse(serialized(a));
        FAIL("expected bundle_incomplete_error");
    } catch (const bundle_incomplete_error& e) {
        CHECK(e.tensor() == "gru.update.W");
    }
}

TEST_CASE("wrong tensor shape is a format error") {
    WeightBundle a = WeightBundle::random(tiny_config(), 9);
    a.set("cluster.h0", Eigen::MatrixXf::Zero(3, 1));
    CHECK_THROWS_AS(parse(serialized(a)), format_error);
}

TEST_CASE("file helpers report missing paths") {
    CHECK_THROWS_AS(WeightBundle::load_file("/nonexistent/weights.oeenc"), format_error);
}
