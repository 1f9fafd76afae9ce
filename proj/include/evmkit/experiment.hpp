#pragma once

#include <span>

#include "evmkit/vho.hpp"
#include "evmkit/vsa.hpp"

namespace evmkit {

/// Maps a per-subcarrier SNR target to the Eb/N0 the channel must be
/// configured with, given the modem's rate and FFT occupancy.
double ebn0_db_for_subcarrier_snr_db(double snr_db, const OfdmParams& params,
                                     const ConstellationSpec& spec);
double subcarrier_snr_db_for_ebn0_db(double ebn0_db, const OfdmParams& params,
                                     const ConstellationSpec& spec);

struct SweepAxis {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> points() const;
};

struct ExperimentConfig {
    std::string command;  // single | sweep_nav | sweep_snr | vho | compare_triggers
    MgmtFrameSpec frame;
    std::vector<MgmtFrameType> frame_types;  // sweep series; defaults to frame.frame_type
    ImpairmentConfig impairments;
    OfdmParams phy;
    Scheme scheme = Scheme::Bpsk;
    AnalyzerConfig analyzer;
    bool compare_tracking = false;  // emit tracking-on and tracking-off series
    SweepAxis sweep;
    int n_frames = 20;
    int n_symbols = 100;  // payload symbols per frame for single / sweep_snr
    uint64_t seed = 1;
    VhoScenario scenario;
    VhoPolicy policy;

    std::string resolved_json() const;
    std::string config_hash() const;  // FNV-1a over the resolved dump
};

/// Parses and schema-validates a config file; errors carry the field path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    size_t column_index(const std::string& name) const;  // throws on miss
    std::string csv() const;
};

ResultTable run_experiment(const ExperimentConfig& config, int parallel = 1);

struct PlotSpec {
    std::string x_col;
    std::string y_col;
    std::vector<std::string> group_cols;  // one series per distinct combination
    std::string x_label;
    std::string y_label;
};

/// Pure function of the table: an SVG line plot, one series per group.
std::string emit_plot(const ResultTable& table, const PlotSpec& spec);

/// One full simulate-and-analyze pass: N_f frames of random payload at the
/// given symbol count, impaired, analyzed, aggregated into one report.
EvmReport simulate_evm(const OfdmParams& params, const ConstellationSpec& spec,
                       const ImpairmentConfig& impairments, const AnalyzerConfig& analyzer,
                       int n_symbols, int n_frames, uint64_t seed);

}  // namespace evmkit
