#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "evmkit/experiment.hpp"

namespace fs = std::filesystem;
using namespace evmkit;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

PlotSpec default_plot(const ExperimentConfig& cfg) {
    PlotSpec p;
    p.y_col = "evm_rms";
    p.y_label = "EVM (rms fraction)";
    if (cfg.command == "sweep_nav") {
        p.x_col = "nav_us";
        p.x_label = "NAV (us)";
        p.group_cols = {"frame_type", "tracking"};
    } else if (cfg.command == "sweep_snr") {
        p.x_col = "snr_db";
        p.x_label = "subcarrier SNR (dB)";
        p.group_cols = {"tracking"};
    } else if (cfg.command == "vho") {
        p.x_col = "step";
        p.x_label = "measurement step";
        p.group_cols = {"network_id"};
    }
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"link-level OFDM EVM simulator and handover trigger toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    uint64_t seed = 0;
    bool seed_set = false;
    int parallel = 1;

    std::vector<CLI::App*> subs;
    for (const char* name : {"single", "sweep_nav", "sweep_snr", "vho",
                             "compare_triggers"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--parallel", parallel, "worker threads for sweeps")
            ->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = load_config(config_path);
        const std::string command = app.get_subcommands().front()->get_name();
        if (cfg.command != command)
            throw config_error("config.command is '" + cfg.command +
                               "' but the CLI command is '" + command + "'");
        if (seed_set) {
            cfg.seed = seed;
            cfg.scenario.seed = seed;
        }

        fs::create_directories(out_dir);
        const ResultTable table = run_experiment(cfg, parallel);
        write_file(fs::path(out_dir) / "results.csv", table.csv());
        write_file(fs::path(out_dir) / "config.resolved.json", cfg.resolved_json());
        if (command == "single") {
            // one row: plot the per-subcarrier EVM profile instead
            ResultTable profile;
            profile.columns = {"subcarrier", "evm_rms"};
            for (int l = 0; l < 52; ++l)
                profile.rows.push_back(
                    {std::to_string(l),
                     table.rows[0][table.column_index("evm_sc" + std::to_string(l))]});
            PlotSpec p;
            p.x_col = "subcarrier";
            p.y_col = "evm_rms";
            p.x_label = "logical subcarrier index";
            p.y_label = "EVM (rms fraction)";
            write_file(fs::path(out_dir) / "plot.svg", emit_plot(profile, p));
        } else if (command != "compare_triggers") {
            write_file(fs::path(out_dir) / "plot.svg",
                       emit_plot(table, default_plot(cfg)));
        }
        std::cout << "wrote " << table.rows.size() << " rows to " << out_dir
                  << "/results.csv (config " << cfg.config_hash() << ")\n";
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
