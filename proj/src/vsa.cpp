#include "evmkit/vsa.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "evmkit/dsp.hpp"

namespace evmkit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void derotate(CplxVec& x, double freq_hz, double sample_rate) {
    if (freq_hz == 0.0) return;
    const double w = -kTwoPi * freq_hz / sample_rate;
    for (size_t n = 0; n < x.size(); ++n)
        x[n] *= cplx(std::cos(w * n), std::sin(w * n));
}

}  // namespace

SyncResult synchronize(std::span<const cplx> rx, const OfdmParams& params) {
    // need the full preamble plus some slack
    if (rx.size() < 420) throw sync_failure("input shorter than one preamble");

    // Schmidl-Cox style detection on the short training periodicity (lag 16)
    const size_t search = std::min<size_t>(rx.size() - 160, 2048);
    size_t d_best = 0;
    double m_best = 0.0;
    cplx a_best{0.0, 0.0};
    for (size_t d = 0; d < search; ++d) {
        cplx a{0.0, 0.0};
        double e = 0.0;
        for (size_t n = 0; n < 144; ++n) {
            a += std::conj(rx[d + n]) * rx[d + n + 16];
            e += std::norm(rx[d + n]);
        }
        if (e <= 0.0) continue;
        const double m = std::abs(a) / e;
        if (m > m_best) {
            m_best = m;
            d_best = d;
            a_best = a;
        }
    }
    if (m_best < 0.2) throw sync_failure("no preamble correlation peak found");

    const double coarse = std::arg(a_best) * params.sample_rate / (kTwoPi * 16.0);

    // coarse-corrected copy of the long-training region for timing + fine CFO
    const size_t region_lo = d_best;
    const size_t region_hi = std::min(rx.size(), d_best + 560);
    CplxVec region(rx.begin() + static_cast<long>(region_lo),
                   rx.begin() + static_cast<long>(region_hi));
    derotate(region, coarse, params.sample_rate);

    const CplxVec& lts = long_training_symbol64();
    double lts_energy = 0.0;
    for (const auto& v : lts) lts_energy += std::norm(v);

    // both LTS repetitions must line up 64 samples apart
    size_t p_best = 0;
    double c_best = -1.0;
    if (region.size() < 160 + 128) throw sync_failure("input truncated before long training");
    for (size_t p = 0; p + 128 <= region.size(); ++p) {
        cplx c1{0.0, 0.0}, c2{0.0, 0.0};
        for (size_t n = 0; n < 64; ++n) {
            c1 += std::conj(lts[n]) * region[p + n];
            c2 += std::conj(lts[n]) * region[p + 64 + n];
        }
        const double c = std::norm(c1) + std::norm(c2);
        if (c > c_best) {
            c_best = c;
            p_best = p;
        }
    }
    (void)lts_energy;

    // fine CFO across the two LTS repetitions
    cplx acc{0.0, 0.0};
    for (size_t n = 0; n < 64; ++n)
        acc += std::conj(region[p_best + n]) * region[p_best + 64 + n];
    const double fine = std::arg(acc) * params.sample_rate / (kTwoPi * 64.0);

    SyncResult out;
    // p_best points at the first LTS symbol = frame start + 160 (STS) + 32 (GI2)
    out.timing_offset = static_cast<int>(region_lo + p_best) - 192;
    out.freq_err_hz = coarse + fine;
    return out;
}

RxGrid demodulate_to_grid(std::span<const cplx> rx, const SyncResult& sync,
                          const OfdmParams& params, const ConstellationSpec& spec,
                          const AnalyzerConfig& cfg,
                          const std::vector<CplxVec>* reference, int n_symbols) {
    if (n_symbols < 1) throw framing_error("demodulate_to_grid: n_symbols must be >= 1");
    if (reference && static_cast<int>(reference->size()) != n_symbols)
        throw framing_error("demodulate_to_grid: reference grid shape mismatch");

    const int sym_len = params.symbol_samples();
    const size_t start = static_cast<size_t>(std::max(sync.timing_offset, 0));
    // preamble (320) + SIGNAL symbol (80)
    const size_t payload_start = start + 400;
    if (payload_start + static_cast<size_t>(n_symbols) * sym_len > rx.size())
        throw sync_failure("demodulate_to_grid: timing estimate leaves fewer samples than declared symbols");

    double f_corr = 0.0;
    switch (cfg.cfo_correction) {
        case CfoCorrection::Estimate: f_corr = sync.freq_err_hz; break;
        case CfoCorrection::Fixed: f_corr = cfg.fixed_cfo_hz; break;
        case CfoCorrection::Off: f_corr = 0.0; break;
    }
    CplxVec work(rx.begin() + static_cast<long>(start), rx.end());
    derotate(work, f_corr, params.sample_rate);

    // least-squares channel estimate from the two long training symbols
    const auto lts_freq = long_training_freq();
    const CplxVec y1 = time_to_symbol(
        std::span<const cplx>(work).subspan(192, 64), params);
    const CplxVec y2 = time_to_symbol(
        std::span<const cplx>(work).subspan(256, 64), params);
    std::array<cplx, ofdm::kNumSubcarriers> chan;
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l)
        chan[l] = (y1[l] + y2[l]) * 0.5 / lts_freq[l];

    RxGrid grid;
    for (int p : ofdm::kPilotLogical) grid.pilot_mask[static_cast<size_t>(p)] = true;
    grid.measured.resize(n_symbols);
    grid.reference.resize(n_symbols);

    std::vector<cplx> pilot_gain(n_symbols);  // pre-tracking common gain per symbol
    for (int j = 0; j < n_symbols; ++j) {
        const size_t off = 400 + static_cast<size_t>(j) * sym_len +
                           static_cast<size_t>(params.cyclic_prefix_samples);
        CplxVec y = time_to_symbol(std::span<const cplx>(work).subspan(off, 64), params);
        for (int l = 0; l < ofdm::kNumSubcarriers; ++l) y[l] /= chan[l];

        // known pilot references for this symbol
        const double pol = ofdm::pilot_polarity(j + 1);
        CplxVec ref(ofdm::kNumSubcarriers);
        if (reference) {
            ref = (*reference)[static_cast<size_t>(j)];
        } else {
            for (int l = 0; l < ofdm::kNumSubcarriers; ++l)
                if (!ofdm::is_pilot(l)) ref[l] = demap_nearest(y[l], spec).ideal_point;
        }
        for (int p = 0; p < 4; ++p)
            ref[ofdm::kPilotLogical[p]] = cplx(ofdm::pilot_base(p) * pol, 0.0);

        cplx num{0.0, 0.0};
        double den = 0.0;
        for (int p : ofdm::kPilotLogical) {
            // weight by the channel-estimate power so a pilot equalized by a
            // weak (noise-dominated) estimate cannot swamp the combination
            const double w = std::norm(chan[p]);
            num += y[p] * std::conj(ref[p]) * w;
            den += std::norm(ref[p]) * w;
        }
        pilot_gain[j] = den > 0.0 ? num / den : cplx{1.0, 0.0};

        grid.measured[j] = std::move(y);
        grid.reference[j] = std::move(ref);
    }

    // residual CFO from the common-phase slope across symbols; the per-symbol
    // pilot phases are noisy enough at low SNR that an outlier can slip the
    // sequential unwrap by 2*pi, so unwrap a short-window smoothed sequence
    double slope = 0.0, intercept = 0.0;
    if (n_symbols >= 2) {
        constexpr int kSlopeWin = 4;  // +/- symbols
        std::vector<cplx> smoothed(static_cast<size_t>(n_symbols));
        // truncated edge windows are asymmetric; under a residual ramp their
        // mean phase belongs to the window centroid, not the center index
        std::vector<double> centroid(static_cast<size_t>(n_symbols));
        for (int j = 0; j < n_symbols; ++j) {
            cplx g{0.0, 0.0};
            int count = 0;
            double ksum = 0.0;
            for (int k = std::max(0, j - kSlopeWin);
                 k <= std::min(n_symbols - 1, j + kSlopeWin); ++k) {
                g += pilot_gain[static_cast<size_t>(k)];
                ksum += k;
                ++count;
            }
            smoothed[static_cast<size_t>(j)] = g / static_cast<double>(count);
            centroid[static_cast<size_t>(j)] = ksum / count;
        }
        std::vector<double> phase(n_symbols);
        double prev = std::arg(smoothed[0]);
        phase[0] = prev;
        for (int j = 1; j < n_symbols; ++j) {
            double ph = std::arg(smoothed[static_cast<size_t>(j)]);
            while (ph - prev > std::numbers::pi) ph -= kTwoPi;
            while (ph - prev < -std::numbers::pi) ph += kTwoPi;
            phase[j] = ph;
            prev = ph;
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int j = 0; j < n_symbols; ++j) {
            const double x = centroid[static_cast<size_t>(j)];
            sx += x;
            sy += phase[j];
            sxx += x * x;
            sxy += x * phase[j];
        }
        const double denom = n_symbols * sxx - sx * sx;
        slope = denom != 0.0 ? (n_symbols * sxy - sx * sy) / denom : 0.0;
        intercept = (sy - slope * sx) / n_symbols;
        grid.freq_err_hz = f_corr + slope / (kTwoPi * params.symbol_duration_s());
    } else {
        grid.freq_err_hz = f_corr;
    }

    // The preamble-only estimate is noisy; when estimating (rather than
    // applying a fixed correction) also strip the fitted residual
    // common-phase ramp from the data and from the pilot gains.
    if (cfg.cfo_correction == CfoCorrection::Estimate && n_symbols >= 2) {
        for (int j = 0; j < n_symbols; ++j) {
            const cplx rot = std::polar(1.0, -(intercept + slope * j));
            for (auto& v : grid.measured[static_cast<size_t>(j)]) v *= rot;
            pilot_gain[static_cast<size_t>(j)] *= rot;
        }
    }

    if (cfg.tracking == Tracking::PilotPhaseAmplitude) {
        // a short centered window over the de-ramped per-symbol pilot gains:
        // cuts the 4-pilot estimator noise enough to keep the correction
        // profitable at low SNR while still following slow phase wander
        constexpr int kWin = 4;  // +/- symbols
        for (int j = 0; j < n_symbols; ++j) {
            cplx g{0.0, 0.0};
            int count = 0;
            for (int k = std::max(0, j - kWin); k <= std::min(n_symbols - 1, j + kWin);
                 ++k) {
                g += pilot_gain[k];
                ++count;
            }
            g /= static_cast<double>(count);
            if (std::abs(g) < 1e-9) continue;
            for (auto& v : grid.measured[static_cast<size_t>(j)]) v /= g;
            if (!reference)  // re-demap after correction
                for (int l = 0; l < ofdm::kNumSubcarriers; ++l)
                    if (!ofdm::is_pilot(l))
                        grid.reference[static_cast<size_t>(j)][static_cast<size_t>(l)] =
                            demap_nearest(grid.measured[static_cast<size_t>(j)]
                                                       [static_cast<size_t>(l)],
                                          spec)
                                .ideal_point;
        }
    }

    // data-aided per-subcarrier residual channel refinement
    if (cfg.data_aided_refinement && reference) {
        for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
            cplx num{0.0, 0.0};
            double den = 0.0;
            for (int j = 0; j < n_symbols; ++j) {
                num += grid.measured[j][l] * std::conj(grid.reference[j][l]);
                den += std::norm(grid.reference[j][l]);
            }
            if (den <= 0.0) continue;
            const cplx g = num / den;
            if (std::abs(g) < 1e-9) continue;
            for (int j = 0; j < n_symbols; ++j) grid.measured[j][l] /= g;
        }
    }
    return grid;
}

EvmReport compute_evm(std::span<const RxGrid> frames, EvmScope scope) {
    if (frames.empty() || frames[0].measured.empty())
        throw domain_error("compute_evm: empty grid");
    const int n_sub = ofdm::kNumSubcarriers;
    const auto& mask = frames[0].pilot_mask;

    auto in_scope = [&](int l, EvmScope s) {
        switch (s) {
            case EvmScope::DataAndPilot: return true;
            case EvmScope::PilotOnly: return mask[static_cast<size_t>(l)];
            case EvmScope::DataOnly: return !mask[static_cast<size_t>(l)];
        }
        return true;
    };

    // P_o: average power of the reference constellation points in scope
    auto ref_power = [&](EvmScope s) {
        double acc = 0.0;
        size_t count = 0;
        for (const auto& f : frames)
            for (const auto& sym : f.reference)
                for (int l = 0; l < n_sub; ++l)
                    if (in_scope(l, s)) {
                        acc += std::norm(sym[l]);
                        ++count;
                    }
        return count ? acc / static_cast<double>(count) : 0.0;
    };

    auto scoped_evm = [&](EvmScope s, double p_o) {
        if (p_o <= 0.0) throw domain_error("compute_evm: zero constellation power");
        int class_size = 0;
        for (int l = 0; l < n_sub; ++l)
            if (in_scope(l, s)) ++class_size;
        double mean = 0.0;
        for (const auto& f : frames) {
            const auto lp = static_cast<double>(f.measured.size());
            double err = 0.0;
            for (size_t j = 0; j < f.measured.size(); ++j)
                for (int l = 0; l < n_sub; ++l)
                    if (in_scope(l, s)) err += std::norm(f.measured[j][l] - f.reference[j][l]);
            mean += std::sqrt(err / (class_size * lp * p_o));
        }
        return mean / static_cast<double>(frames.size());
    };

    EvmReport rep;
    rep.n_frames = static_cast<int>(frames.size());
    rep.symbols_per_frame = static_cast<int>(frames[0].measured.size());
    const double p_o = ref_power(scope);
    rep.avg_constellation_power = p_o;
    rep.evm_rms = scoped_evm(scope, p_o);
    rep.evm_db = amplitude_db(rep.evm_rms);
    const double p_o_pilot = ref_power(EvmScope::PilotOnly);
    rep.evm_pilot = scoped_evm(EvmScope::PilotOnly, p_o_pilot);
    rep.evm_pilot_db = amplitude_db(rep.evm_pilot);

    double freq = 0.0;
    size_t total_syms = 0;
    for (const auto& f : frames) {
        freq += f.freq_err_hz;
        total_syms += f.measured.size();
    }
    rep.freq_err_hz = freq / static_cast<double>(frames.size());

    for (int l = 0; l < n_sub; ++l) {
        double err = 0.0;
        for (const auto& f : frames)
            for (size_t j = 0; j < f.measured.size(); ++j)
                err += std::norm(f.measured[j][l] - f.reference[j][l]);
        rep.per_subcarrier_evm[static_cast<size_t>(l)] =
            std::sqrt(err / (static_cast<double>(total_syms) * p_o));
    }
    return rep;
}

std::string EvmReport::csv_header() const {
    std::ostringstream os;
    os << "frame_count,evm_rms,evm_db,evm_pilot,evm_pilot_db,freq_err_hz";
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l) os << ",evm_sc" << l;
    return os.str();
}

std::string EvmReport::csv_row() const {
    std::ostringstream os;
    os.precision(10);
    os << n_frames << ',' << evm_rms << ',' << evm_db << ',' << evm_pilot << ','
       << evm_pilot_db << ',' << freq_err_hz;
    for (double v : per_subcarrier_evm) os << ',' << v;
    return os.str();
}

BerReport measure_ber(std::span<const uint8_t> decoded_bits,
                      std::span<const uint8_t> truth_bits) {
    if (decoded_bits.size() != truth_bits.size())
        throw framing_error("measure_ber: length mismatch");
    BerReport rep;
    rep.bits = decoded_bits.size();
    for (size_t i = 0; i < decoded_bits.size(); ++i)
        rep.errors += (decoded_bits[i] & 1) != (truth_bits[i] & 1);
    rep.ber = rep.bits ? static_cast<double>(rep.errors) / static_cast<double>(rep.bits) : 0.0;
    return rep;
}

RxGrid analyze_one(std::span<const cplx> rx, const OfdmParams& params,
                   const ConstellationSpec& spec, const AnalyzerConfig& cfg,
                   const std::vector<CplxVec>* reference, int n_symbols) {
    const SyncResult sync = synchronize(rx, params);
    return demodulate_to_grid(rx, sync, params, spec, cfg, reference, n_symbols);
}

}  // namespace evmkit
