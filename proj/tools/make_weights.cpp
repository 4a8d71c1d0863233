// SPDX-License-Identifier: Apache-2.0
//
// Utility: writes a randomly initialized weight bundle for a chosen model
// geometry. Random weights produce meaningless diarization; the bundles
// exist so the pipeline can be exercised and benchmarked end to end.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oencsd/config.hpp"
#include "oencsd/weights.hpp"

int main(int argc, char** argv) {
    CLI::App app{"write a randomly initialized weight bundle"};
    std::string out;
    std::uint64_t seed = 1;
    oencsd::ModelConfig cfg;
    app.add_option("--out", out, "output bundle path")->required();
    app.add_option("--seed", seed, "init seed (default: 1)");
    app.add_option("--d-model", cfg.d_model, "embedding width (default: 256)");
    app.add_option("--heads", cfg.n_heads, "attention heads (default: 4)");
    app.add_option("--encoder-layers", cfg.n_encoder_layers, "encoder depth (default: 4)");
    app.add_option("--ff-dim", cfg.ff_dim, "feed-forward width (default: 1024)");
    app.add_option("--max-speakers", cfg.max_speakers, "attractor capacity (default: 4)");
    app.add_option("--refine-layers", cfg.n_decoder_layers_refine,
                   "refinement decoder depth (default: 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        cfg.validate();
        oencsd::WeightBundle::random(cfg, seed).save_file(out);
        std::cout << "wrote " << out << " (d_model=" << cfg.d_model << " seed=" << seed << ")\n";
        return 0;
    } catch (const oencsd::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
