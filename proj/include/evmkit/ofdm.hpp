#pragma once

#include <array>
#include <optional>
#include <span>

#include "evmkit/constellation.hpp"

namespace evmkit {

// Rational code rate; only 1/2 and 3/4 are supported.
struct CodeRate {
    int num = 1;
    int den = 2;
    bool operator==(const CodeRate&) const = default;
};
inline constexpr CodeRate kRateHalf{1, 2};
inline constexpr CodeRate kRateThreeQuarters{3, 4};

struct OfdmParams {
    int fft_size = 64;
    int used_subcarriers = 52;
    int data_subcarriers = 48;
    int pilot_subcarriers = 4;
    int cyclic_prefix_samples = 16;
    double sample_rate = 20e6;
    CodeRate code_rate = kRateHalf;
    bool scrambler_enabled = true;

    double symbol_duration_s() const {
        return (fft_size + cyclic_prefix_samples) / sample_rate;
    }
    int symbol_samples() const { return fft_size + cyclic_prefix_samples; }
    int coded_bits_per_symbol(const ConstellationSpec& spec) const {
        return data_subcarriers * spec.bits_per_symbol;
    }
    int data_bits_per_symbol(const ConstellationSpec& spec) const {
        return coded_bits_per_symbol(spec) * code_rate.num / code_rate.den;
    }
    double data_rate_bps(const ConstellationSpec& spec) const {
        return data_bits_per_symbol(spec) / symbol_duration_s();
    }
};

namespace ofdm {

// Subcarrier bookkeeping: logical index 0..51 maps to physical -26..-1,+1..+26.
inline constexpr int kNumSubcarriers = 52;
inline constexpr std::array<int, 4> kPilotPhysical = {-21, -7, 7, 21};
inline constexpr std::array<int, 4> kPilotLogical = {5, 19, 32, 46};

int physical_subcarrier(int logical);  // logical 0..51 -> -26..26 skipping DC
bool is_pilot(int logical);

// 127-element pilot polarity sequence; data symbol j uses polarity(j + 1).
double pilot_polarity(int index);

// contribution of pilot p (0..3) before polarity: {1, 1, 1, -1}
double pilot_base(int p);

/// 802.11a scrambler, x^7 + x^4 + 1. Returns in XOR lfsr(seed).
BitVec scramble(std::span<const uint8_t> bits, uint8_t seed);

/// Rate-1/2 convolutional encoder, K=7, generators 133/171 octal.
/// Output interleaved A0 B0 A1 B1 ... ; encoder state starts at zero and is
/// not explicitly terminated (callers pad with zeros as needed).
BitVec conv_encode(std::span<const uint8_t> bits);

/// Hard-decision Viterbi for the code above. Input values: 0, 1, or 2 for an
/// erasure (depunctured position). Traceback starts from the best end state.
BitVec viterbi_decode(std::span<const uint8_t> coded);

BitVec puncture(std::span<const uint8_t> coded, CodeRate rate);
/// Re-inserts erasures (value 2) at punctured positions.
BitVec depuncture(std::span<const uint8_t> received, CodeRate rate);

/// Per-symbol block interleaver (block = coded bits of one OFDM symbol).
BitVec interleave(std::span<const uint8_t> bits, int ncbps, int bpsc);
BitVec deinterleave(std::span<const uint8_t> bits, int ncbps, int bpsc);

}  // namespace ofdm

/// Full transmit-side bit pipeline: scramble -> pad to symbol boundary ->
/// convolutional encode -> puncture -> per-symbol interleave.
BitVec encode_bits(std::span<const uint8_t> bits, const OfdmParams& params,
                   const ConstellationSpec& spec, uint8_t scramble_seed);

/// Inverse pipeline; n_bits is the original payload bit count (pad stripped).
BitVec decode_bits(std::span<const uint8_t> coded, const OfdmParams& params,
                   const ConstellationSpec& spec, uint8_t scramble_seed,
                   size_t n_bits);

struct TxFrame {
    CplxVec samples;                         // preamble + SIGNAL + payload
    std::vector<CplxVec> reference_grid;     // [symbol][52 logical subcarriers]
    BitVec source_bits;                      // coded bits fed to the modulator
    OfdmParams params;
    ConstellationSpec spec;
    int preamble_samples = 0;                // includes the SIGNAL symbol
    int n_symbols = 0;                       // payload OFDM symbols (L_p)
};

/// Builds preamble (short + long training), a SIGNAL-style header symbol and
/// the payload symbols with pilots; coded_bits must fill whole symbols.
TxFrame modulate_frame(std::span<const uint8_t> coded_bits, const OfdmParams& params,
                       const ConstellationSpec& spec);

/// One frequency-domain payload symbol -> 80 time samples (CP + 64),
/// unit mean power for unit-power subcarriers.
CplxVec symbol_to_time(std::span<const cplx> grid52, const OfdmParams& params);

/// 64-point FFT of one CP-stripped symbol back to the 52-subcarrier grid,
/// inverse of symbol_to_time's scaling.
CplxVec time_to_symbol(std::span<const cplx> time64, const OfdmParams& params);

const CplxVec& short_training_sequence();  // 160 samples
const CplxVec& long_training_sequence();   // 160 samples (GI2 + 2 x 64)
const CplxVec& long_training_symbol64();   // one 64-sample LTS period
std::array<cplx, ofdm::kNumSubcarriers> long_training_freq();  // +/-1 grid

// Interleaved float32 I/Q capture file with a small self-describing header.
struct CaptureMeta {
    double sample_rate;
    std::vector<std::pair<uint32_t, uint32_t>> frames;  // (offset, length) in samples
};

void write_capture(const std::string& path, std::span<const cplx> samples,
                   const CaptureMeta& meta);
std::pair<CplxVec, CaptureMeta> read_capture(const std::string& path);

}  // namespace evmkit
