#pragma once

#include <limits>
#include <span>

#include "evmkit/common.hpp"

namespace evmkit {

struct MultipathTap {
    int delay_samples = 0;
    cplx gain{1.0, 0.0};
};

/// All impairments default to their neutral values; an infinite ebn0_db
/// disables noise.
struct ImpairmentConfig {
    double ebn0_db = std::numeric_limits<double>::infinity();
    double cfo_hz = 0.0;
    double phase_noise_linewidth_hz = 0.0;
    double iq_gain_imbalance_db = 0.0;
    double iq_phase_skew_deg = 0.0;
    std::vector<MultipathTap> multipath_taps = {{0, {1.0, 0.0}}};
    // optional memoryless saturating amplifier; <= 0 disables it
    double nonlinear_input_backoff_db = 0.0;
    uint64_t seed = 0;

    bool noise_enabled() const { return std::isfinite(ebn0_db); }
    bool is_neutral() const;
    void validate() const;  // taps normalized, finite values
};

/// Rate context the channel needs to turn Eb/N0 into a per-sample noise
/// variance.
struct ChannelMeta {
    double bits_per_second = 6e6;
    double sample_rate = 20e6;
};

/// sigma^2 = P * Fs / (10^(ebn0/10) * Rb), total variance of the circular
/// complex noise added per sample.
double calibrate_noise(double signal_power, double ebn0_db, double bits_per_second,
                       double sample_rate);

/// Applies multipath -> IQ imbalance -> CFO -> phase noise -> AWGN, in that
/// order; deterministic for a given seed. Output is input length plus the
/// maximum tap delay.
CplxVec apply_channel(std::span<const cplx> samples, const ChannelMeta& meta,
                      const ImpairmentConfig& cfg);

}  // namespace evmkit
