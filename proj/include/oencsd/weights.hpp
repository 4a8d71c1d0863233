// SPDX-License-Identifier: Apache-2.0
//
// Weight bundle: every trainable tensor of the chunk model, the refinement
// decoders, and the clustering head, in a single checksummed binary file.
//
// Layout (all integers little-endian):
//   magic "OEENC1" | version u32 | header_len u32 | header JSON bytes
//   per tensor: name_len u32 | name | rank u32 | dims u32[rank] | f32 payload
//   trailing CRC32 (poly 0xEDB88320, reflected) over all preceding bytes
//
// Tensors are stored row-major; rank 1 covers vectors and scalars.
// The JSON header echoes the ModelConfig and the tensor count.

#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oencsd/common.hpp"
#include "oencsd/config.hpp"

namespace oencsd {

static_assert(std::endian::native == std::endian::little,
              "weight bundle I/O assumes a little-endian host");

namespace detail {

class Crc32 {
public:
    Crc32() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table_[i] = c;
        }
    }
    void update(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i)
            state_ = table_[(state_ ^ p[i]) & 0xFFu] ^ (state_ >> 8);
    }
    std::uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

private:
    std::uint32_t table_[256];
    std::uint32_t state_ = 0xFFFFFFFFu;
};

}  // namespace detail

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;  // 1 for vectors; rank-1 on disk
    bool is_vector() const { return cols == 1; }
};

class WeightBundle {
public:
    static constexpr char kMagic[6] = {'O', 'E', 'E', 'N', 'C', '1'};
    static constexpr std::uint32_t kVersion = 1;

    WeightBundle() = default;
    explicit WeightBundle(const ModelConfig& cfg) : cfg_(cfg) { cfg.validate(); }

    const ModelConfig& config() const { return cfg_; }

    // Every tensor the configured architecture requires, with shapes.
    // This list is the single source of truth for completeness checks.
    static std::vector<TensorSpec> required_tensors(const ModelConfig& cfg) {
        const int D = cfg.d_model;
        std::vector<TensorSpec> out;
        auto mat = [&](std::string n, int r, int c) { out.push_back({std::move(n), r, c}); };
        auto vec = [&](std::string n, int r) { out.push_back({std::move(n), r, 1}); };

        mat("encoder.input.W", D, cfg.input_dim);
        vec("encoder.input.b", D);
        for (int l = 0; l < cfg.n_encoder_layers; ++l) {
            const std::string p = "encoder.layer" + std::to_string(l) + ".";
            vec(p + "ln1.gamma", D);
            vec(p + "ln1.beta", D);
            for (const char* m : {"q", "k", "v", "o"}) {
                mat(p + "attn.W" + m, D, D);
                vec(p + "attn.b" + m, D);
            }
            vec(p + "ln2.gamma", D);
            vec(p + "ln2.beta", D);
            mat(p + "ff.W1", cfg.ff_dim, D);
            vec(p + "ff.b1", cfg.ff_dim);
            mat(p + "ff.W2", D, cfg.ff_dim);
            vec(p + "ff.b2", D);
        }
        vec("encoder.out_ln.gamma", D);
        vec("encoder.out_ln.beta", D);

        // Attractor LSTMs: gates packed by rows in (input, forget, cell, output) order.
        for (const char* side : {"encoder", "decoder"}) {
            const std::string p = std::string("eda.") + side + ".";
            mat(p + "W", 4 * D, D);
            mat(p + "U", 4 * D, D);
            vec(p + "b", 4 * D);
        }
        vec("eda.exist.w", D);
        vec("eda.exist.b", 1);

        for (const char* dec : {"attr", "cent"}) {
            for (int l = 0; l < cfg.n_decoder_layers_refine; ++l) {
                const std::string p =
                    std::string("refine.") + dec + ".layer" + std::to_string(l) + ".";
                vec(p + "ln1.gamma", D);
                vec(p + "ln1.beta", D);
                for (const char* m : {"q", "k", "v", "o"}) {
                    mat(p + "self.W" + m, D, D);
                    vec(p + "self.b" + m, D);
                }
                vec(p + "ln2.gamma", D);
                vec(p + "ln2.beta", D);
                for (const char* m : {"q", "k", "v", "o"}) {
                    mat(p + "cross.W" + m, D, D);
                    vec(p + "cross.b" + m, D);
                }
                vec(p + "ln3.gamma", D);
                vec(p + "ln3.beta", D);
                mat(p + "ff.W1", cfg.ff_dim, D);
                vec(p + "ff.b1", cfg.ff_dim);
                mat(p + "ff.W2", D, cfg.ff_dim);
                vec(p + "ff.b2", D);
            }
            const std::string q = std::string("refine.") + dec + ".out_ln.";
            vec(q + "gamma", D);
            vec(q + "beta", D);
        }
        vec("refine.g_spk", D);

        for (const char* g : {"update", "reset", "cand"}) {
            const std::string p = std::string("gru.") + g + ".";
            mat(p + "W", D, D);
            mat(p + "U", D, D);
            vec(p + "b", D);
        }
        vec("cluster.h0", D);
        return out;
    }

    bool has(const std::string& name) const { return tensors_.count(name) != 0; }

    void set(const std::string& name, Eigen::MatrixXf value) {
        tensors_[name] = std::move(value);
    }

    void erase(const std::string& name) { tensors_.erase(name); }

    // Shape-checked accessors; shape errors indicate internal bugs because
    // completeness is validated against the config at load time.
    const Eigen::MatrixXf& mat(const std::string& name, int rows, int cols) const {
        const auto it = tensors_.find(name);
        if (it == tensors_.end()) throw bundle_incomplete_error(name);
        if (it->second.rows() != rows || it->second.cols() != cols)
            throw contract_error("tensor '" + name + "' has unexpected shape");
        return it->second;
    }

    Eigen::Ref<const Eigen::VectorXf> vec(const std::string& name, int n) const {
        return mat(name, n, 1).col(0);
    }

    float scalar(const std::string& name) const { return mat(name, 1, 1)(0, 0); }

    size_t n_tensors() const { return tensors_.size(); }

    // Throws bundle_incomplete_error for a missing tensor, format_error for a
    // present tensor of the wrong shape.
    void validate_complete() const {
        for (const auto& spec : required_tensors(cfg_)) {
            const auto it = tensors_.find(spec.name);
            if (it == tensors_.end()) throw bundle_incomplete_error(spec.name);
            if (it->second.rows() != spec.rows || it->second.cols() != spec.cols)
                throw format_error("tensor '" + spec.name + "' has shape " +
                                   std::to_string(it->second.rows()) + "x" +
                                   std::to_string(it->second.cols()) + ", expected " +
                                   std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
        }
    }

    // Seeded uniform init in [-1/sqrt(D), 1/sqrt(D)); identical bytes per seed.
    static WeightBundle random(const ModelConfig& cfg, std::uint64_t seed) {
        WeightBundle b(cfg);
        Rng01 rng(seed);
        const float bound = 1.0f / std::sqrt(static_cast<float>(cfg.d_model));
        for (const auto& spec : required_tensors(cfg)) {
            Eigen::MatrixXf m(spec.rows, spec.cols);
            for (int r = 0; r < spec.rows; ++r)
                for (int c = 0; c < spec.cols; ++c) m(r, c) = rng.range(-bound, bound);
            b.tensors_.emplace(spec.name, std::move(m));
        }
        return b;
    }

    void save(std::ostream& out) const {
        detail::Crc32 crc;
        auto put = [&](const void* p, size_t n) {
            crc.update(p, n);
            out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        };
        auto put_u32 = [&](std::uint32_t v) { put(&v, 4); };

        put(kMagic, sizeof(kMagic));
        put_u32(kVersion);

        nlohmann::json hdr;
        hdr["version"] = kVersion;
        hdr["n_tensors"] = tensors_.size();
        hdr["model"] = {{"d_model", cfg_.d_model},
                        {"n_heads", cfg_.n_heads},
                        {"n_encoder_layers", cfg_.n_encoder_layers},
                        {"ff_dim", cfg_.ff_dim},
                        {"max_speakers", cfg_.max_speakers},
                        {"existence_threshold", cfg_.existence_threshold},
                        {"n_decoder_layers_refine", cfg_.n_decoder_layers_refine},
                        {"input_dim", cfg_.input_dim}};
        const std::string hdr_s = hdr.dump();
        put_u32(static_cast<std::uint32_t>(hdr_s.size()));
        put(hdr_s.data(), hdr_s.size());

        std::vector<float> row_major;
        for (const auto& [name, m] : tensors_) {
            put_u32(static_cast<std::uint32_t>(name.size()));
            put(name.data(), name.size());
            const bool vector_like = m.cols() == 1;
            const std::uint32_t rank = vector_like ? 1 : 2;
            put_u32(rank);
            put_u32(static_cast<std::uint32_t>(m.rows()));
            if (rank == 2) put_u32(static_cast<std::uint32_t>(m.cols()));
            row_major.resize(static_cast<size_t>(m.size()));
            for (int r = 0; r < m.rows(); ++r)
                for (int c = 0; c < m.cols(); ++c)
                    row_major[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
            put(row_major.data(), row_major.size() * sizeof(float));
        }

        const std::uint32_t digest = crc.value();
        out.write(reinterpret_cast<const char*>(&digest), 4);
        if (!out) throw format_error("failed writing weight bundle");
    }

    static WeightBundle load(std::istream& in) {
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        if (bytes.size() < sizeof(kMagic) + 8 + 4)
            throw format_error("weight bundle truncated");
        if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
            throw format_error("not a weight bundle (bad magic)");

        detail::Crc32 crc;
        crc.update(bytes.data(), bytes.size() - 4);
        std::uint32_t stored;
        std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
        if (crc.value() != stored) throw format_error("weight bundle checksum mismatch");

        size_t pos = sizeof(kMagic);
        auto need = [&](size_t n) {
            if (pos + n > bytes.size() - 4) throw format_error("weight bundle truncated");
        };
        auto get_u32 = [&]() {
            need(4);
            std::uint32_t v;
            std::memcpy(&v, bytes.data() + pos, 4);
            pos += 4;
            return v;
        };

        const std::uint32_t version = get_u32();
        if (version != kVersion)
            throw format_error("unsupported weight bundle version " + std::to_string(version));

        const std::uint32_t hdr_len = get_u32();
        need(hdr_len);
        nlohmann::json hdr;
        try {
            hdr = nlohmann::json::parse(bytes.substr(pos, hdr_len));
        } catch (const nlohmann::json::exception& e) {
            throw format_error(std::string("weight bundle header is not valid JSON: ") + e.what());
        }
        pos += hdr_len;

        WeightBundle b;
        try {
            const auto& m = hdr.at("model");
            b.cfg_.d_model = m.at("d_model").get<int>();
            b.cfg_.n_heads = m.at("n_heads").get<int>();
            b.cfg_.n_encoder_layers = m.at("n_encoder_layers").get<int>();
            b.cfg_.ff_dim = m.at("ff_dim").get<int>();
            b.cfg_.max_speakers = m.at("max_speakers").get<int>();
            b.cfg_.existence_threshold = m.at("existence_threshold").get<float>();
            b.cfg_.n_decoder_layers_refine = m.at("n_decoder_layers_refine").get<int>();
            b.cfg_.input_dim = m.at("input_dim").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw format_error(std::string("weight bundle header incomplete: ") + e.what());
        }
        try {
            b.cfg_.validate();
        } catch (const config_error& e) {
            throw format_error(std::string("weight bundle config invalid: ") + e.what());
        }

        if (!hdr.contains("n_tensors"))
            throw format_error("weight bundle header incomplete: n_tensors missing");
        const auto n_tensors = hdr["n_tensors"].get<std::uint64_t>();
        for (std::uint64_t i = 0; i < n_tensors; ++i) {
            const std::uint32_t name_len = get_u32();
            need(name_len);
            std::string name = bytes.substr(pos, name_len);
            pos += name_len;
            const std::uint32_t rank = get_u32();
            if (rank < 1 || rank > 2)
                throw format_error("tensor '" + name + "' has unsupported rank");
            const std::uint32_t rows = get_u32();
            const std::uint32_t cols = rank == 2 ? get_u32() : 1;
            if (rows == 0 || cols == 0 || std::uint64_t(rows) * cols > (1u << 28))
                throw format_error("tensor '" + name + "' has implausible shape");
            need(std::uint64_t(rows) * cols * sizeof(float));
            Eigen::MatrixXf m(rows, cols);
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (std::uint32_t c = 0; c < cols; ++c) {
                    float v;
                    std::memcpy(&v, bytes.data() + pos + (std::uint64_t(r) * cols + c) * 4, 4);
                    m(r, c) = v;
                }
            }
            pos += std::uint64_t(rows) * cols * sizeof(float);
            if (!b.tensors_.emplace(std::move(name), std::move(m)).second)
                throw format_error("duplicate tensor name in weight bundle");
        }
        if (pos != bytes.size() - 4)
            throw format_error("weight bundle has trailing garbage");

        b.validate_complete();
        return b;
    }

    void save_file(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw format_error("cannot open '" + path + "' for writing");
        save(f);
    }

    static WeightBundle load_file(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw format_error("cannot open weight bundle '" + path + "'");
        return load(f);
    }

private:
    ModelConfig cfg_;
    std::map<std::string, Eigen::MatrixXf> tensors_;
};

}  // namespace oencsd
