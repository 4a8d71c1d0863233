// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: diarize (WAV -> RTTM through a streaming session),
// score (two RTTM files -> one DER line), bench (per-step op counts and wall
// times plus a complexity verdict), simulate (synthetic conversation ->
// WAV + reference RTTM). Exit codes: 0 success, 1 usage error, 2 I/O or
// format error, 3 internal contract violation.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oencsd/common.hpp"
#include "oencsd/config.hpp"
#include "oencsd/eval.hpp"
#include "oencsd/rttm.hpp"
#include "oencsd/simulate.hpp"
#include "oencsd/stream.hpp"
#include "oencsd/wav.hpp"
#include "oencsd/weights.hpp"

namespace oencsd {

namespace detail {

inline std::string slurp_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void spill_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw format_error("cannot open '" + path + "' for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    f.flush();
    if (!f) throw format_error("failed to write '" + path + "'");
}

inline std::string fixed_decimals(double x, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, x);
    return buf;
}

}  // namespace detail

// ============================================================================
// Subcommand bodies
// ============================================================================

struct DiarizeArgs {
    std::string audio;
    std::string weights;
    std::string out;
    std::string file_id = "audio";
    double latency_s = 0.0;
    double buffer_s = 0.0;
};

inline void run_diarize(const DiarizeArgs& a, std::ostream& out) {
    const WeightBundle bundle = WeightBundle::load_file(a.weights);

    StreamConfig cfg;
    cfg.latency_s = a.latency_s;
    cfg.buffer_s = a.buffer_s;
    cfg.model = bundle.config();
    cfg.validate();

    const WavData wav = read_wav_file(a.audio);
    if (wav.sample_rate != cfg.features.sample_rate)
        throw format_error("'" + a.audio + "' is sampled at " + std::to_string(wav.sample_rate) +
                           " Hz but the frontend expects " +
                           std::to_string(cfg.features.sample_rate) + " Hz");

    const auto t0 = std::chrono::steady_clock::now();
    Session session(bundle, cfg);
    session.push(wav.samples);
    session.finalize();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    detail::spill_file(a.out,
                       write_rttm(records_from_segments(a.file_id, session.output().to_segments())));
    out << "speakers=" << session.output().speakers.size()
        << " frames=" << session.emitted_frames() << " steps=" << session.steps().size()
        << " elapsed_s=" << detail::fixed_decimals(elapsed, 3) << "\n";
}

struct ScoreArgs {
    std::string ref;
    std::string hyp;
    double collar_s = 0.25;
};

inline void run_score(const ScoreArgs& a, std::ostream& out) {
    const std::vector<Segment> ref = segments_from_records(parse_rttm(detail::slurp_file(a.ref)));
    const std::vector<Segment> hyp = segments_from_records(parse_rttm(detail::slurp_file(a.hyp)));
    const DerBreakdown d = der(ref, hyp, a.collar_s);
    const auto pct = [&](double seconds) {
        return detail::fixed_decimals(100.0 * seconds / d.scored_speech, 2);
    };
    out << "DER=" << detail::fixed_decimals(100.0 * d.der, 2) << " MISS=" << pct(d.miss)
        << " FA=" << pct(d.false_alarm) << " CONF=" << pct(d.confusion) << "\n";
}

struct BenchArgs {
    double latency_s = 0.0;
    double buffer_s = 0.0;
    double duration_s = 0.0;
    std::string weights;            // empty: random weights from `seed`
    std::uint64_t seed = 1;
    bool unbounded = false;
};

inline void run_bench(const BenchArgs& a, std::ostream& out) {
    const WeightBundle bundle = a.weights.empty() ? WeightBundle::random(ModelConfig{}, a.seed)
                                                  : WeightBundle::load_file(a.weights);
    StreamConfig cfg;
    cfg.latency_s = a.latency_s;
    cfg.buffer_s = a.buffer_s;
    cfg.unbounded_buffer = a.unbounded;
    cfg.model = bundle.config();
    cfg.validate();

    SimConfig sim;
    sim.n_speakers = 2;
    sim.duration_s = a.duration_s;
    sim.seed = 1;
    const Conversation conv = simulate_conversation(sim);

    Session session(bundle, cfg);
    session.push(conv.audio);
    session.finalize();
    for (const StepStats& s : session.steps())
        out << "step=" << s.index << " frames=" << s.chunk_frames << " C=" << s.n_centroids
            << " macs=" << s.macs
            << " wall_ms=" << detail::fixed_decimals(s.wall_seconds * 1e3, 3) << "\n";
    out << "verdict=" << bench_verdict(session.steps(), cfg.buffer_frames()) << "\n";
}

struct SimulateArgs {
    int speakers = 2;
    double duration_s = 0.0;
    std::uint32_t seed = 1;
    std::string out_audio;
    std::string out_rttm;
};

inline void run_simulate(const SimulateArgs& a, std::ostream& out) {
    SimConfig cfg;
    cfg.n_speakers = a.speakers;
    cfg.duration_s = a.duration_s;
    cfg.seed = a.seed;
    const Conversation conv = simulate_conversation(cfg);
    write_wav_file(a.out_audio, conv.audio, cfg.sample_rate);
    detail::spill_file(a.out_rttm, write_rttm(records_from_segments("sim", conv.reference)));
    out << "speakers=" << cfg.n_speakers
        << " duration_s=" << detail::fixed_decimals(cfg.duration_s, 3)
        << " samples=" << conv.audio.size() << " turns=" << conv.reference.size() << "\n";
}

// ============================================================================
// Driver
// ============================================================================

// `args` excludes the program name. Streams receive everything the user sees,
// so the driver is testable in-process.
inline int cli_main(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"streaming online speaker diarization"};
    app.require_subcommand(1);

    DiarizeArgs da;
    CLI::App* diarize = app.add_subcommand("diarize", "Diarize a WAV file into an RTTM file");
    diarize->add_option("--audio", da.audio, "input WAV (8 kHz mono PCM16)")->required();
    diarize->add_option("--weights", da.weights, "weight bundle file")->required();
    diarize->add_option("--latency", da.latency_s, "emission hop in seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    diarize->add_option("--buffer", da.buffer_s, "chunk context in seconds (>= latency)")
        ->required()
        ->check(CLI::PositiveNumber);
    diarize->add_option("--out", da.out, "output RTTM path")->required();
    diarize->add_option("--file-id", da.file_id, "RTTM file id (default: audio)");

    ScoreArgs sa;
    CLI::App* score = app.add_subcommand("score", "Score a hypothesis RTTM against a reference");
    score->add_option("--ref", sa.ref, "reference RTTM")->required();
    score->add_option("--hyp", sa.hyp, "hypothesis RTTM")->required();
    score->add_option("--collar", sa.collar_s, "boundary collar in seconds (default: 0.25)")
        ->check(CLI::NonNegativeNumber);

    BenchArgs ba;
    CLI::App* bench =
        app.add_subcommand("bench", "Measure per-step op counts on a synthetic conversation");
    bench->add_option("--latency", ba.latency_s, "emission hop in seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    bench->add_option("--buffer", ba.buffer_s, "chunk context in seconds (>= latency)")
        ->required()
        ->check(CLI::PositiveNumber);
    bench->add_option("--duration", ba.duration_s, "synthetic audio length in seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    CLI::Option* bw = bench->add_option("--weights", ba.weights, "weight bundle file");
    CLI::Option* bs =
        bench->add_option("--random-seed", ba.seed, "seed for random weights (default: 1)");
    bw->excludes(bs);
    bs->excludes(bw);
    bench->add_flag("--unbounded", ba.unbounded, "retain the whole stream as chunk context");

    SimulateArgs ma;
    CLI::App* simulate =
        app.add_subcommand("simulate", "Generate a synthetic conversation WAV + reference RTTM");
    simulate->add_option("--speakers", ma.speakers, "number of speakers")
        ->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--duration", ma.duration_s, "length in seconds")->required();
    simulate->add_option("--seed", ma.seed, "generator seed (default: 1)");
    simulate->add_option("--out-audio", ma.out_audio, "output WAV path")->required();
    simulate->add_option("--out-rttm", ma.out_rttm, "output RTTM path")->required();

    // CLI11 consumes lexer-style input: last token first.
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(diarize)) run_diarize(da, out);
        else if (app.got_subcommand(score)) run_score(sa, out);
        else if (app.got_subcommand(bench)) run_bench(ba, out);
        else run_simulate(ma, out);
        return 0;
    } catch (const config_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const format_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const contract_error& e) {
        err << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace oencsd
