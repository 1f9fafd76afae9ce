#pragma once

#include <optional>
#include <span>

#include "evmkit/ofdm.hpp"

namespace evmkit {

struct SyncResult {
    int timing_offset = 0;    // sample index of the first short-preamble sample
    double freq_err_hz = 0.0; // preamble-based CFO estimate
};

/// Timing via long-training cross-correlation, CFO via short (coarse) plus
/// long (fine) training autocorrelation. Throws sync_failure when no
/// correlation peak clears the threshold.
SyncResult synchronize(std::span<const cplx> rx, const OfdmParams& params);

enum class Tracking { Off, PilotPhaseAmplitude };
enum class CfoCorrection { Estimate, Fixed, Off };

struct AnalyzerConfig {
    Tracking tracking = Tracking::PilotPhaseAmplitude;
    CfoCorrection cfo_correction = CfoCorrection::Estimate;
    double fixed_cfo_hz = 0.0;  // used when cfo_correction == Fixed
    // data-aided per-subcarrier channel refinement over the whole frame;
    // requires reference symbols
    bool data_aided_refinement = true;
};

struct RxGrid {
    std::vector<CplxVec> measured;   // [symbol][52]
    std::vector<CplxVec> reference;  // matching ideal grid
    std::array<bool, ofdm::kNumSubcarriers> pilot_mask{};
    double freq_err_hz = 0.0;        // refined estimate (preamble + pilot slope)
};

/// CFO-corrects, strips prefix/preamble, FFTs, equalizes against the long
/// training channel estimate and optionally applies per-symbol pilot
/// phase/amplitude tracking. reference supplies the data-aided ideal grid
/// (decision-directed demapping is used when absent).
RxGrid demodulate_to_grid(std::span<const cplx> rx, const SyncResult& sync,
                          const OfdmParams& params, const ConstellationSpec& spec,
                          const AnalyzerConfig& cfg,
                          const std::vector<CplxVec>* reference, int n_symbols);

enum class EvmScope { DataAndPilot, PilotOnly, DataOnly };

struct EvmReport {
    double evm_rms = 0.0;
    double evm_db = -100.0;
    double evm_pilot = 0.0;
    double evm_pilot_db = -100.0;
    double freq_err_hz = 0.0;
    std::array<double, ofdm::kNumSubcarriers> per_subcarrier_evm{};
    int n_frames = 0;
    int symbols_per_frame = 0;
    double avg_constellation_power = 0.0;  // P_o

    std::string csv_header() const;
    std::string csv_row() const;
};

/// IEEE 802.11a-style EVM: per-frame RMS over symbols and subcarriers, then
/// arithmetic mean over frames.
EvmReport compute_evm(std::span<const RxGrid> frames, EvmScope scope = EvmScope::DataAndPilot);

struct BerReport {
    size_t bits = 0;
    size_t errors = 0;
    double ber = 0.0;
};

BerReport measure_ber(std::span<const uint8_t> decoded_bits,
                      std::span<const uint8_t> truth_bits);

/// Convenience: synchronize + demodulate one received frame.
RxGrid analyze_one(std::span<const cplx> rx, const OfdmParams& params,
                   const ConstellationSpec& spec, const AnalyzerConfig& cfg,
                   const std::vector<CplxVec>* reference, int n_symbols);

}  // namespace evmkit
