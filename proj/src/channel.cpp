#include "evmkit/channel.hpp"

#include <algorithm>
#include <numbers>
#include <random>

#include "evmkit/dsp.hpp"

namespace evmkit {

bool ImpairmentConfig::is_neutral() const {
    const bool taps_neutral = multipath_taps.size() == 1 &&
                              multipath_taps[0].delay_samples == 0 &&
                              multipath_taps[0].gain == cplx{1.0, 0.0};
    return !noise_enabled() && cfo_hz == 0.0 && phase_noise_linewidth_hz == 0.0 &&
           iq_gain_imbalance_db == 0.0 && iq_phase_skew_deg == 0.0 &&
           nonlinear_input_backoff_db <= 0.0 && taps_neutral;
}

void ImpairmentConfig::validate() const {
    if (multipath_taps.empty())
        throw config_error("multipath taps must not be empty");
    double total = 0.0;
    for (const auto& tap : multipath_taps) {
        if (tap.delay_samples < 0)
            throw config_error("negative multipath tap delay");
        total += std::norm(tap.gain);
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw config_error("multipath taps must be normalized to unit power");
    if (phase_noise_linewidth_hz < 0.0)
        throw config_error("phase noise linewidth must be non-negative");
}

double calibrate_noise(double signal_power, double ebn0_db, double bits_per_second,
                       double sample_rate) {
    if (!std::isfinite(ebn0_db)) return 0.0;
    if (signal_power <= 0.0 || bits_per_second <= 0.0 || sample_rate <= 0.0)
        throw domain_error("calibrate_noise: inputs must be positive");
    return signal_power * sample_rate / (db_to_linear(ebn0_db) * bits_per_second);
}

CplxVec apply_channel(std::span<const cplx> samples, const ChannelMeta& meta,
                      const ImpairmentConfig& cfg) {
    if (samples.empty()) throw domain_error("apply_channel: empty input");
    cfg.validate();

    // multipath tapped-delay line
    int max_delay = 0;
    for (const auto& tap : cfg.multipath_taps)
        max_delay = std::max(max_delay, tap.delay_samples);
    CplxVec out(samples.size() + static_cast<size_t>(max_delay), cplx{0.0, 0.0});
    for (const auto& tap : cfg.multipath_taps)
        for (size_t n = 0; n < samples.size(); ++n)
            out[n + static_cast<size_t>(tap.delay_samples)] += tap.gain * samples[n];

    // memoryless saturating amplifier (Rapp-style, p = 2)
    if (cfg.nonlinear_input_backoff_db > 0.0) {
        const double sat = std::sqrt(dsp::mean_power(out) *
                                     db_to_linear(cfg.nonlinear_input_backoff_db));
        for (auto& v : out) {
            const double a = std::abs(v);
            if (a > 0.0) {
                const double r = a / sat;
                v *= 1.0 / std::sqrt(std::sqrt(1.0 + r * r * r * r));
            }
        }
    }

    // IQ gain/phase imbalance (image-generating transform)
    if (cfg.iq_gain_imbalance_db != 0.0 || cfg.iq_phase_skew_deg != 0.0) {
        const double g = std::pow(10.0, cfg.iq_gain_imbalance_db / 20.0);
        const double phi = cfg.iq_phase_skew_deg * std::numbers::pi / 180.0;
        for (auto& v : out) {
            const double i = v.real();
            const double q = v.imag();
            v = cplx(i + q * g * std::sin(phi), q * g * std::cos(phi));
        }
    }

    // CFO rotation
    if (cfg.cfo_hz != 0.0) {
        const double w = 2.0 * std::numbers::pi * cfg.cfo_hz / meta.sample_rate;
        for (size_t n = 0; n < out.size(); ++n)
            out[n] *= cplx(std::cos(w * n), std::sin(w * n));
    }

    std::mt19937_64 rng(cfg.seed);

    // Wiener phase noise: i.i.d. Gaussian increments, variance 2*pi*linewidth/Fs
    if (cfg.phase_noise_linewidth_hz > 0.0) {
        const double inc_std = std::sqrt(2.0 * std::numbers::pi *
                                         cfg.phase_noise_linewidth_hz / meta.sample_rate);
        std::normal_distribution<double> inc(0.0, inc_std);
        double phase = 0.0;
        for (auto& v : out) {
            phase += inc(rng);
            v *= cplx(std::cos(phase), std::sin(phase));
        }
    }

    if (cfg.noise_enabled()) {
        const double sig_pow = dsp::mean_power(samples);
        const double var = calibrate_noise(sig_pow, cfg.ebn0_db, meta.bits_per_second,
                                           meta.sample_rate);
        std::normal_distribution<double> noise(0.0, std::sqrt(var / 2.0));
        for (auto& v : out) v += cplx(noise(rng), noise(rng));
    }

    return out;
}

}  // namespace evmkit
