// SPDX-License-Identifier: Apache-2.0
//
// Minimal RIFF/WAVE reader and writer for 16-bit PCM mono audio. Samples map
// to floats as s / 32768, so any float already on that grid round-trips
// bit-exactly through a write-read cycle.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oencsd/common.hpp"

namespace oencsd {

struct WavData {
    std::vector<float> samples;
    int sample_rate = 0;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace detail

inline std::int16_t quantize_pcm16(float x) {
    const float scaled = x * 32768.0f;
    const long q = std::lrintf(scaled);
    return static_cast<std::int16_t>(std::min(32767L, std::max(-32768L, q)));
}

inline void write_wav(std::ostream& out, std::span<const float> samples, int sample_rate) {
    if (sample_rate < 1) throw contract_error("sample rate must be positive");
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    std::string s;
    s.reserve(44 + data_bytes);
    s += "RIFF";
    detail::put_u32(s, 36 + data_bytes);
    s += "WAVE";
    s += "fmt ";
    detail::put_u32(s, 16);
    detail::put_u16(s, 1);  // PCM
    detail::put_u16(s, 1);  // mono
    detail::put_u32(s, static_cast<std::uint32_t>(sample_rate));
    detail::put_u32(s, static_cast<std::uint32_t>(sample_rate * 2));  // byte rate
    detail::put_u16(s, 2);   // block align
    detail::put_u16(s, 16);  // bits per sample
    s += "data";
    detail::put_u32(s, data_bytes);
    for (float x : samples) {
        const std::int16_t q = quantize_pcm16(x);
        const auto u = static_cast<std::uint16_t>(q);
        s.push_back(static_cast<char>(u & 0xff));
        s.push_back(static_cast<char>((u >> 8) & 0xff));
    }
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw format_error("failed to write audio stream");
}

inline void write_wav_file(const std::string& path, std::span<const float> samples,
                           int sample_rate) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open '" + path + "' for writing");
    write_wav(f, samples, sample_rate);
}

inline WavData read_wav(std::istream& in) {
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>()};
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw format_error("not a RIFF/WAVE stream");

    WavData wav;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        char tag[5] = {0};
        std::memcpy(tag, bytes.data() + pos, 4);
        const std::uint32_t size = detail::get_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            throw format_error("audio chunk '" + std::string(tag) + "' is truncated");
        const unsigned char* body = bytes.data() + pos;
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw format_error("format chunk too short");
            if (detail::get_u16(body) != 1)
                throw format_error("only uncompressed PCM audio is supported");
            if (detail::get_u16(body + 2) != 1)
                throw format_error("only mono audio is supported");
            if (detail::get_u16(body + 14) != 16)
                throw format_error("only 16-bit samples are supported");
            wav.sample_rate = static_cast<int>(detail::get_u32(body + 4));
            if (wav.sample_rate < 1) throw format_error("invalid sample rate");
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw format_error("data chunk precedes the format chunk");
            if (size % 2 != 0) throw format_error("sample payload has an odd byte count");
            wav.samples.reserve(size / 2);
            for (std::uint32_t i = 0; i < size; i += 2) {
                const auto raw = static_cast<std::int16_t>(detail::get_u16(body + i));
                wav.samples.push_back(static_cast<float>(raw) / 32768.0f);
            }
            return wav;
        }
        pos += size + (size % 2);  // chunks are word-aligned
    }
    throw format_error("no sample data chunk found");
}

inline WavData read_wav_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open '" + path + "' for reading");
    return read_wav(f);
}

}  // namespace oencsd
