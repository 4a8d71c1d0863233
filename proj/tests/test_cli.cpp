// SPDX-License-Identifier: Apache-2.0
//
// In-process driver tests: exit codes, output formats, file determinism, and
// the usage-error surface of every subcommand.

#include <catch2/catch_amalgamated.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oencsd/cli.hpp"

using namespace oencsd;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_main(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

const std::filesystem::path& work_dir() {
    static const std::filesystem::path p = [] {
        auto q = std::filesystem::temp_directory_path() / "oencsd_cli_tests";
        std::filesystem::remove_all(q);
        std::filesystem::create_directories(q);
        return q;
    }();
    return p;
}

std::string path_of(const std::string& name) { return (work_dir() / name).string(); }

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ModelConfig small_model() {
    ModelConfig cfg;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.n_encoder_layers = 2;
    cfg.ff_dim = 64;
    cfg.max_speakers = 3;
    return cfg;
}

const std::string& small_bundle_path() {
    static const std::string p = [] {
        const std::string path = path_of("small.weights");
        WeightBundle::random(small_model(), 7).save_file(path);
        return path;
    }();
    return p;
}

// A bundle whose existence head never fires: no attractors, so the centroid
// bank stays empty and every steady step has the same (frames, C) shape.
const std::string& silent_bundle_path() {
    static const std::string p = [] {
        const std::string path = path_of("silent.weights");
        WeightBundle b = WeightBundle::random(small_model(), 7);
        b.set("eda.exist.b", Eigen::MatrixXf::Constant(1, 1, -40.0f));
        b.save_file(path);
        return path;
    }();
    return p;
}

const std::string& conversation_wav_path() {
    static const std::string p = [] {
        SimConfig cfg;
        cfg.n_speakers = 2;
        cfg.duration_s = 12.0;
        cfg.seed = 11;
        const Conversation conv = simulate_conversation(cfg);
        const std::string path = path_of("talk12s.wav");
        write_wav_file(path, conv.audio, cfg.sample_rate);
        return path;
    }();
    return p;
}

struct BenchRow {
    int step = -1;
    long frames = -1;
    int c = -1;
    unsigned long long macs = 0;
    double wall_ms = -1.0;
};

// Splits bench stdout into parsed rows plus the trailing verdict line.
std::pair<std::vector<BenchRow>, std::string> parse_bench(const std::string& text) {
    std::vector<BenchRow> rows;
    std::string verdict;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("verdict=", 0) == 0) {
            verdict = line.substr(8);
            continue;
        }
        BenchRow r;
        REQUIRE(std::sscanf(line.c_str(), "step=%d frames=%ld C=%d macs=%llu wall_ms=%lf",
                            &r.step, &r.frames, &r.c, &r.macs, &r.wall_ms) == 5);
        rows.push_back(r);
    }
    return {rows, verdict};
}

}  // namespace

TEST_CASE("cli rejects bad invocations with usage errors") {
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"--help"}).out.find("diarize") != std::string::npos);
    CHECK(run_cli({"--help"}).out.find("score") != std::string::npos);

    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);

    const CliResult missing = run_cli({"diarize"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("--audio") != std::string::npos);

    CHECK(run_cli({"score", "--ref", "a", "--hyp", "b", "--bogus"}).code == 1);
    CHECK(run_cli({"score", "--ref", "a", "--hyp", "b", "--collar", "-1"}).code == 1);

    // The weight source is exclusive: a file or a seed, never both.
    CHECK(run_cli({"bench", "--latency", "1", "--buffer", "1", "--duration", "2", "--weights",
                   small_bundle_path(), "--random-seed", "4"})
              .code == 1);
}

TEST_CASE("cli simulate writes deterministic wav and rttm files") {
    const CliResult first = run_cli({"simulate", "--speakers", "2", "--duration", "8", "--seed",
                                     "5", "--out-audio", path_of("a.wav"), "--out-rttm",
                                     path_of("a.rttm")});
    REQUIRE(first.code == 0);
    CHECK(first.out.rfind("speakers=2 duration_s=8.000 samples=64000 turns=", 0) == 0);

    const WavData wav = read_wav_file(path_of("a.wav"));
    CHECK(wav.sample_rate == 8000);
    CHECK(wav.samples.size() == 64000);

    const std::vector<RttmRecord> records = parse_rttm(slurp(path_of("a.rttm")));
    REQUIRE(!records.empty());
    for (const RttmRecord& r : records) {
        CHECK(r.file_id == "sim");
        CHECK((r.speaker == "spk0" || r.speaker == "spk1"));
    }

    const CliResult second = run_cli({"simulate", "--speakers", "2", "--duration", "8", "--seed",
                                      "5", "--out-audio", path_of("b.wav"), "--out-rttm",
                                      path_of("b.rttm")});
    REQUIRE(second.code == 0);
    CHECK(slurp(path_of("a.wav")) == slurp(path_of("b.wav")));
    CHECK(slurp(path_of("a.rttm")) == slurp(path_of("b.rttm")));

    CHECK(run_cli({"simulate", "--speakers", "2", "--duration", "0", "--out-audio",
                   path_of("z.wav"), "--out-rttm", path_of("z.rttm")})
              .code == 1);
    CHECK(run_cli({"simulate", "--speakers", "0", "--duration", "5", "--out-audio",
                   path_of("z.wav"), "--out-rttm", path_of("z.rttm")})
              .code == 1);
    CHECK(run_cli({"simulate", "--speakers", "2", "--duration", "5", "--out-audio",
                   path_of("no_such_dir/z.wav"), "--out-rttm", path_of("z.rttm")})
              .code == 2);
}

TEST_CASE("cli score prints the fixed-format percentage line") {
    const auto write_records = [](const std::string& path, const std::vector<Segment>& segs) {
        std::ofstream f(path, std::ios::binary);
        f << write_rttm(records_from_segments("f", segs));
    };
    write_records(path_of("ref.rttm"), {{"A", 0.0, 10.0}});
    write_records(path_of("hyp_split.rttm"), {{"X", 0.0, 9.0}, {"Y", 9.0, 10.0}});
    write_records(path_of("hyp_same.rttm"), {{"A", 0.0, 10.0}});
    { std::ofstream f(path_of("hyp_empty.rttm"), std::ios::binary); }

    // One second of a ten second turn confused at collar zero.
    const CliResult split = run_cli({"score", "--ref", path_of("ref.rttm"), "--hyp",
                                     path_of("hyp_split.rttm"), "--collar", "0"});
    REQUIRE(split.code == 0);
    CHECK(split.out == "DER=10.00 MISS=0.00 FA=0.00 CONF=10.00\n");

    // Identical files score zero under the default collar.
    const CliResult same =
        run_cli({"score", "--ref", path_of("ref.rttm"), "--hyp", path_of("hyp_same.rttm")});
    REQUIRE(same.code == 0);
    CHECK(same.out == "DER=0.00 MISS=0.00 FA=0.00 CONF=0.00\n");

    const CliResult empty = run_cli({"score", "--ref", path_of("ref.rttm"), "--hyp",
                                     path_of("hyp_empty.rttm"), "--collar", "0"});
    REQUIRE(empty.code == 0);
    CHECK(empty.out == "DER=100.00 MISS=100.00 FA=0.00 CONF=0.00\n");

    CHECK(run_cli({"score", "--ref", path_of("absent.rttm"), "--hyp", path_of("ref.rttm")}).code ==
          2);

    {
        std::ofstream f(path_of("mangled.rttm"), std::ios::binary);
        f << "SPEAKER f 1 oops 1.0 <NA> <NA> a <NA> <NA>\n";
    }
    const CliResult mangled =
        run_cli({"score", "--ref", path_of("mangled.rttm"), "--hyp", path_of("ref.rttm")});
    CHECK(mangled.code == 2);
    CHECK(mangled.err.find("line 1") != std::string::npos);
}

TEST_CASE("cli diarize emits a deterministic rttm and a summary line") {
    const std::vector<std::string> base = {
        "diarize", "--audio", conversation_wav_path(), "--weights", small_bundle_path(),
        "--latency", "1", "--buffer", "3"};

    auto with_out = [&](const std::string& out_path, std::vector<std::string> extra = {}) {
        std::vector<std::string> args = base;
        args.insert(args.end(), {"--out", out_path});
        args.insert(args.end(), extra.begin(), extra.end());
        return args;
    };

    const CliResult first = run_cli(with_out(path_of("h1.rttm")));
    REQUIRE(first.code == 0);
    INFO(first.out);
    long speakers = -1, frames = -1, steps = -1;
    double elapsed = -1.0;
    REQUIRE(std::sscanf(first.out.c_str(), "speakers=%ld frames=%ld steps=%ld elapsed_s=%lf",
                        &speakers, &frames, &steps, &elapsed) == 4);
    CHECK(speakers >= 0);
    CHECK(frames == 120);  // twelve whole seconds at a 0.1 s frame period
    CHECK(steps == 12);
    CHECK(elapsed >= 0.0);

    // Onsets non-decreasing and segments inside the audio extent.
    const std::vector<RttmRecord> records = parse_rttm(slurp(path_of("h1.rttm")));
    for (std::size_t i = 1; i < records.size(); ++i)
        CHECK(records[i - 1].onset <= records[i].onset);
    for (const RttmRecord& r : records) {
        CHECK(r.file_id == "audio");
        CHECK(r.speaker.rfind("spk", 0) == 0);
        CHECK(r.onset + r.duration <= 12.0 + 1e-9);
    }

    const CliResult second = run_cli(with_out(path_of("h2.rttm")));
    REQUIRE(second.code == 0);
    CHECK(slurp(path_of("h1.rttm")) == slurp(path_of("h2.rttm")));

    const CliResult named = run_cli(with_out(path_of("h3.rttm"), {"--file-id", "phone"}));
    REQUIRE(named.code == 0);
    for (const RttmRecord& r : parse_rttm(slurp(path_of("h3.rttm"))))
        CHECK(r.file_id == "phone");
}

TEST_CASE("cli diarize maps failures to the documented exit codes") {
    // Context shorter than the emission hop is a usage error.
    const CliResult swapped =
        run_cli({"diarize", "--audio", conversation_wav_path(), "--weights", small_bundle_path(),
                 "--latency", "2", "--buffer", "1", "--out", path_of("x.rttm")});
    CHECK(swapped.code == 1);
    CHECK(swapped.err.find("buffer") != std::string::npos);

    CHECK(run_cli({"diarize", "--audio", path_of("absent.wav"), "--weights", small_bundle_path(),
                   "--latency", "1", "--buffer", "2", "--out", path_of("x.rttm")})
              .code == 2);
    CHECK(run_cli({"diarize", "--audio", conversation_wav_path(), "--weights",
                   path_of("absent.weights"), "--latency", "1", "--buffer", "2", "--out",
                   path_of("x.rttm")})
              .code == 2);

    // A bundle with a tensor stripped fails completeness validation at load.
    {
        WeightBundle b = WeightBundle::random(small_model(), 3);
        b.erase("cluster.h0");
        b.save_file(path_of("gappy.weights"));
    }
    CHECK(run_cli({"diarize", "--audio", conversation_wav_path(), "--weights",
                   path_of("gappy.weights"), "--latency", "1", "--buffer", "2", "--out",
                   path_of("x.rttm")})
              .code == 2);

    // The frontend is pinned to 8 kHz input.
    write_wav_file(path_of("fast.wav"), std::vector<float>(16000, 0.0f), 16000);
    const CliResult fast =
        run_cli({"diarize", "--audio", path_of("fast.wav"), "--weights", small_bundle_path(),
                 "--latency", "1", "--buffer", "2", "--out", path_of("x.rttm")});
    CHECK(fast.code == 2);
    CHECK(fast.err.find("8000") != std::string::npos);
}

TEST_CASE("cli bench reports steady per-step cost and growth without eviction") {
    const CliResult steady =
        run_cli({"bench", "--latency", "1", "--buffer", "2", "--duration", "5", "--weights",
                 small_bundle_path()});
    REQUIRE(steady.code == 0);
    const auto [rows, verdict] = parse_bench(steady.out);
    REQUIRE(rows.size() == 5);
    CHECK(verdict == "CONSTANT");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].step == static_cast<int>(i));
        CHECK(rows[i].frames == (i == 0 ? 10 : 20));  // FIFO fills then holds
        CHECK(rows[i].wall_ms >= 0.0);
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
        for (std::size_t j = 1; j < i; ++j)
            if (rows[i].c == rows[j].c) CHECK(rows[i].macs == rows[j].macs);

    const CliResult growing =
        run_cli({"bench", "--latency", "1", "--buffer", "1", "--duration", "5", "--weights",
                 small_bundle_path(), "--unbounded"});
    REQUIRE(growing.code == 0);
    const auto [grows, gverdict] = parse_bench(growing.out);
    REQUIRE(grows.size() == 5);
    CHECK(gverdict == "GROWING");
    for (std::size_t i = 0; i < grows.size(); ++i) CHECK(grows[i].frames == 10 * (1 + (long)i));
    for (std::size_t i = 1; i < grows.size(); ++i) CHECK(grows[i].macs > grows[i - 1].macs);

    // Per-step cost is a pure function of (frames, C): equal shapes cost the
    // same no matter how long the stream has been running.
    const CliResult doubled =
        run_cli({"bench", "--latency", "1", "--buffer", "2", "--duration", "10", "--weights",
                 small_bundle_path()});
    REQUIRE(doubled.code == 0);
    const auto [drows, dverdict] = parse_bench(doubled.out);
    REQUIRE(drows.size() == 10);
    CHECK(dverdict == "CONSTANT");
    for (const BenchRow& r : rows)
        for (const BenchRow& q : drows)
            if (r.frames == q.frames && r.c == q.c) CHECK(r.macs == q.macs);

    // With the centroid count pinned, doubling the duration leaves the
    // per-step op-count ceiling unchanged.
    unsigned long long max_short = 0, max_long = 0;
    for (const std::string& dur : {"5", "10"}) {
        const CliResult res = run_cli({"bench", "--latency", "1", "--buffer", "2", "--duration",
                                       dur, "--weights", silent_bundle_path()});
        REQUIRE(res.code == 0);
        const auto [srows, sverdict] = parse_bench(res.out);
        CHECK(sverdict == "CONSTANT");
        for (const BenchRow& r : srows) {
            CHECK(r.c == 0);
            (dur == std::string("5") ? max_short : max_long) =
                std::max(dur == std::string("5") ? max_short : max_long, r.macs);
        }
    }
    CHECK(max_short > 0);
    CHECK(max_short == max_long);
}
