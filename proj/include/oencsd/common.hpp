// SPDX-License-Identifier: Apache-2.0
//
// Shared error taxonomy and small numeric helpers.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace oencsd {

// Invalid or inconsistent configuration supplied by the caller.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: audio containers, annotation files, weight bundles.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A weight bundle parsed fine but lacks a tensor the model needs.
class bundle_incomplete_error : public format_error {
public:
    explicit bundle_incomplete_error(const std::string& tensor)
        : format_error("weight bundle is missing tensor '" + tensor + "'"),
          tensor_(tensor) {}
    const std::string& tensor() const noexcept { return tensor_; }

private:
    std::string tensor_;
};

// An internal invariant was violated; indicates a bug, not bad input.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Uniform float in [0,1) built from the top 24 bits of a mersenne draw.
// The construction is byte-identical across platforms, unlike
// std::uniform_real_distribution which the standard leaves unspecified.
class Rng01 {
public:
    explicit Rng01(std::uint64_t seed) : gen_(static_cast<std::mt19937::result_type>(seed)) {}

    float next() {
        return static_cast<float>(gen_() >> 8) * 0x1.0p-24f;
    }

    // Uniform in [lo, hi).
    float range(float lo, float hi) { return lo + (hi - lo) * next(); }

    std::uint32_t bits() { return gen_(); }

private:
    std::mt19937 gen_;
};

}  // namespace oencsd
