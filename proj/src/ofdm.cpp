#include "evmkit/ofdm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "evmkit/dsp.hpp"

namespace evmkit {
namespace ofdm {

int physical_subcarrier(int logical) {
    if (logical < 0 || logical >= kNumSubcarriers)
        throw domain_error("subcarrier index out of range");
    return logical < 26 ? logical - 26 : logical - 25;
}

bool is_pilot(int logical) {
    for (int p : kPilotLogical)
        if (p == logical) return true;
    return false;
}

namespace {

// 802.11a pilot polarity sequence p0..p126
constexpr std::array<int8_t, 127> kPolarity = {
    1, 1, 1, 1, -1, -1, -1, 1,  -1, -1, -1, -1, 1, 1, -1, 1,
    -1, -1, 1, 1, -1, 1, 1, -1, 1, 1, 1, 1, 1, 1, -1, 1,
    1, 1, -1, 1, 1, -1, -1, 1,  1, 1, -1, 1, -1, -1, -1, 1,
    -1, 1, -1, -1, 1, -1, -1, 1, 1, 1, 1, 1, -1, -1, 1, 1,
    -1, -1, 1, -1, 1, -1, 1, 1, -1, -1, -1, 1, 1, -1, -1, -1,
    -1, 1, -1, -1, 1, -1, 1, 1, 1, 1, -1, 1, -1, 1, -1, 1,
    -1, -1, -1, -1, -1, 1, -1, 1, 1, -1, 1, -1, 1, 1, 1, -1,
    -1, 1, -1, -1, -1, 1, 1, 1, -1, -1, -1, -1, -1, -1, -1};

}  // namespace

double pilot_polarity(int index) {
    return static_cast<double>(kPolarity[static_cast<size_t>(index % 127)]);
}

double pilot_base(int p) { return p == 3 ? -1.0 : 1.0; }

BitVec scramble(std::span<const uint8_t> bits, uint8_t seed) {
    uint8_t state = seed & 0x7f;
    if (state == 0) throw config_error("scrambler seed must be nonzero");
    BitVec out(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) {
        const uint8_t fb = ((state >> 6) ^ (state >> 3)) & 1;  // x^7 + x^4 + 1
        state = static_cast<uint8_t>(((state << 1) | fb) & 0x7f);
        out[i] = (bits[i] ^ fb) & 1;
    }
    return out;
}

namespace {

// generators 133/171 octal, taps as delay masks (bit k = delay k)
constexpr uint32_t kGenA = 0x6D;
constexpr uint32_t kGenB = 0x4F;

inline uint8_t parity7(uint32_t v) {
    return static_cast<uint8_t>(std::popcount(v) & 1);
}

}  // namespace

BitVec conv_encode(std::span<const uint8_t> bits) {
    BitVec out;
    out.reserve(bits.size() * 2);
    uint32_t reg = 0;
    for (uint8_t b : bits) {
        reg = ((reg << 1) | (b & 1)) & 0x7F;
        out.push_back(parity7(reg & kGenA));
        out.push_back(parity7(reg & kGenB));
    }
    return out;
}

BitVec viterbi_decode(std::span<const uint8_t> coded) {
    if (coded.size() % 2 != 0)
        throw framing_error("viterbi: coded length must be even");
    const size_t steps = coded.size() / 2;
    constexpr int kStates = 64;
    constexpr uint32_t kInf = std::numeric_limits<uint32_t>::max() / 2;

    std::vector<uint32_t> metric(kStates, kInf), next(kStates);
    metric[0] = 0;  // encoder starts in the zero state
    std::vector<uint8_t> decisions(steps * kStates);

    // per-(state,input) expected output bits
    static const auto table = [] {
        std::array<std::array<uint8_t, 2>, kStates * 2> t{};
        for (int s = 0; s < kStates; ++s)
            for (int b = 0; b < 2; ++b) {
                const uint32_t reg = (static_cast<uint32_t>(s) << 1) | b;
                t[s * 2 + b] = {parity7(reg & kGenA), parity7(reg & kGenB)};
            }
        return t;
    }();

    for (size_t step = 0; step < steps; ++step) {
        const uint8_t r0 = coded[2 * step];
        const uint8_t r1 = coded[2 * step + 1];
        std::fill(next.begin(), next.end(), kInf);
        uint8_t* dec = &decisions[step * kStates];
        for (int s = 0; s < kStates; ++s) {
            if (metric[s] >= kInf) continue;
            for (int b = 0; b < 2; ++b) {
                const auto& exp = table[s * 2 + b];
                uint32_t m = metric[s];
                if (r0 != 2) m += (exp[0] != r0);
                if (r1 != 2) m += (exp[1] != r1);
                const int ns = ((s << 1) | b) & 0x3F;
                if (m < next[ns]) {
                    next[ns] = m;
                    dec[ns] = static_cast<uint8_t>((s << 1) | (b << 7));
                }
            }
        }
        metric.swap(next);
    }

    int state = 0;
    uint32_t best = kInf;
    for (int s = 0; s < kStates; ++s)
        if (metric[s] < best) {
            best = metric[s];
            state = s;
        }

    BitVec out(steps);
    for (size_t step = steps; step-- > 0;) {
        const uint8_t d = decisions[step * kStates + state];
        out[step] = (d >> 7) & 1;
        state = (d & 0x7F) >> 1;
    }
    return out;
}

BitVec puncture(std::span<const uint8_t> coded, CodeRate rate) {
    if (rate == kRateHalf) return BitVec(coded.begin(), coded.end());
    if (!(rate == kRateThreeQuarters))
        throw config_error("unsupported code rate");
    if (coded.size() % 6 != 0)
        throw framing_error("puncture: length must be a multiple of 6");
    BitVec out;
    out.reserve(coded.size() * 2 / 3);
    for (size_t i = 0; i < coded.size(); i += 6) {
        out.push_back(coded[i]);
        out.push_back(coded[i + 1]);
        out.push_back(coded[i + 2]);
        out.push_back(coded[i + 5]);
    }
    return out;
}

BitVec depuncture(std::span<const uint8_t> received, CodeRate rate) {
    if (rate == kRateHalf) return BitVec(received.begin(), received.end());
    if (!(rate == kRateThreeQuarters))
        throw config_error("unsupported code rate");
    if (received.size() % 4 != 0)
        throw framing_error("depuncture: length must be a multiple of 4");
    BitVec out;
    out.reserve(received.size() * 3 / 2);
    for (size_t i = 0; i < received.size(); i += 4) {
        out.push_back(received[i]);
        out.push_back(received[i + 1]);
        out.push_back(received[i + 2]);
        out.push_back(2);  // erasure
        out.push_back(2);
        out.push_back(received[i + 3]);
    }
    return out;
}

namespace {

std::vector<int> interleave_map(int ncbps, int bpsc) {
    const int s = std::max(bpsc / 2, 1);
    std::vector<int> map(ncbps);
    for (int k = 0; k < ncbps; ++k) {
        const int i = (ncbps / 16) * (k % 16) + k / 16;
        const int j = s * (i / s) + (i + ncbps - (16 * i) / ncbps) % s;
        map[k] = j;
    }
    return map;
}

}  // namespace

BitVec interleave(std::span<const uint8_t> bits, int ncbps, int bpsc) {
    if (bits.size() % static_cast<size_t>(ncbps) != 0)
        throw framing_error("interleave: length not a multiple of the block size");
    const auto map = interleave_map(ncbps, bpsc);
    BitVec out(bits.size());
    for (size_t blk = 0; blk < bits.size(); blk += ncbps)
        for (int k = 0; k < ncbps; ++k) out[blk + map[k]] = bits[blk + k];
    return out;
}

BitVec deinterleave(std::span<const uint8_t> bits, int ncbps, int bpsc) {
    if (bits.size() % static_cast<size_t>(ncbps) != 0)
        throw framing_error("deinterleave: length not a multiple of the block size");
    const auto map = interleave_map(ncbps, bpsc);
    BitVec out(bits.size());
    for (size_t blk = 0; blk < bits.size(); blk += ncbps)
        for (int k = 0; k < ncbps; ++k) out[blk + k] = bits[blk + map[k]];
    return out;
}

}  // namespace ofdm

BitVec encode_bits(std::span<const uint8_t> bits, const OfdmParams& params,
                   const ConstellationSpec& spec, uint8_t scramble_seed) {
    if (bits.empty()) throw domain_error("encode_bits: empty input");
    if (params.scrambler_enabled && (scramble_seed & 0x7f) == 0)
        throw config_error("encode_bits: zero scrambler seed");

    const int ndbps = params.data_bits_per_symbol(spec);
    const size_t n_sym = (bits.size() + ndbps - 1) / ndbps;
    BitVec work(bits.begin(), bits.end());
    work.resize(n_sym * ndbps, 0);
    if (params.scrambler_enabled) work = ofdm::scramble(work, scramble_seed);
    BitVec coded = ofdm::conv_encode(work);
    coded = ofdm::puncture(coded, params.code_rate);
    return ofdm::interleave(coded, params.coded_bits_per_symbol(spec),
                            spec.bits_per_symbol);
}

BitVec decode_bits(std::span<const uint8_t> coded, const OfdmParams& params,
                   const ConstellationSpec& spec, uint8_t scramble_seed,
                   size_t n_bits) {
    const int ncbps = params.coded_bits_per_symbol(spec);
    if (coded.empty() || coded.size() % static_cast<size_t>(ncbps) != 0)
        throw framing_error("decode_bits: length inconsistent with coded stream");
    BitVec deint = ofdm::deinterleave(coded, ncbps, spec.bits_per_symbol);
    deint = ofdm::depuncture(deint, params.code_rate);
    BitVec decoded = ofdm::viterbi_decode(deint);
    if (params.scrambler_enabled) decoded = ofdm::scramble(decoded, scramble_seed);
    if (n_bits > decoded.size())
        throw framing_error("decode_bits: requested more bits than decoded");
    decoded.resize(n_bits);
    return decoded;
}

CplxVec symbol_to_time(std::span<const cplx> grid52, const OfdmParams& params) {
    if (grid52.size() != ofdm::kNumSubcarriers)
        throw framing_error("symbol_to_time: grid must have 52 entries");
    CplxVec bins(params.fft_size, cplx{0.0, 0.0});
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
        const int k = ofdm::physical_subcarrier(l);
        bins[k >= 0 ? k : params.fft_size + k] = grid52[l];
    }
    dsp::fft(bins, true);
    const double scale = 1.0 / std::sqrt(static_cast<double>(ofdm::kNumSubcarriers));
    CplxVec out;
    out.reserve(params.symbol_samples());
    for (int n = params.fft_size - params.cyclic_prefix_samples; n < params.fft_size; ++n)
        out.push_back(bins[n] * scale);
    for (int n = 0; n < params.fft_size; ++n) out.push_back(bins[n] * scale);
    return out;
}

CplxVec time_to_symbol(std::span<const cplx> time64, const OfdmParams& params) {
    if (static_cast<int>(time64.size()) != params.fft_size)
        throw framing_error("time_to_symbol: expected one FFT window");
    CplxVec bins(time64.begin(), time64.end());
    dsp::fft(bins, false);
    const double scale =
        std::sqrt(static_cast<double>(ofdm::kNumSubcarriers)) / params.fft_size;
    CplxVec out(ofdm::kNumSubcarriers);
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
        const int k = ofdm::physical_subcarrier(l);
        out[l] = bins[k >= 0 ? k : params.fft_size + k] * scale;
    }
    return out;
}

namespace {

// Long training sequence on subcarriers -26..26 (DC at index 26)
constexpr std::array<int8_t, 53> kLtsFreq = {
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1,
    1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1,
    1, -1, 1, -1, 1, 1, 1, 1};

struct StsEntry {
    int k;
    double sign;  // times (1 + j)
};
constexpr std::array<StsEntry, 12> kStsFreq = {{{-24, 1},
                                                {-20, -1},
                                                {-16, 1},
                                                {-12, -1},
                                                {-8, -1},
                                                {-4, 1},
                                                {4, -1},
                                                {8, -1},
                                                {12, 1},
                                                {16, 1},
                                                {20, 1},
                                                {24, 1}}};

CplxVec ifft64_scaled(const CplxVec& bins) {
    CplxVec x = bins;
    dsp::fft(x, true);
    const double scale = 1.0 / std::sqrt(52.0);
    for (auto& v : x) v *= scale;
    return x;
}

}  // namespace

std::array<cplx, ofdm::kNumSubcarriers> long_training_freq() {
    std::array<cplx, ofdm::kNumSubcarriers> out;
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
        const int k = ofdm::physical_subcarrier(l);
        out[l] = cplx(static_cast<double>(kLtsFreq[static_cast<size_t>(k + 26)]), 0.0);
    }
    return out;
}

const CplxVec& long_training_symbol64() {
    static const CplxVec lts = [] {
        CplxVec bins(64, cplx{0.0, 0.0});
        for (int k = -26; k <= 26; ++k) {
            if (k == 0) continue;
            bins[static_cast<size_t>(k >= 0 ? k : 64 + k)] =
                cplx(static_cast<double>(kLtsFreq[static_cast<size_t>(k + 26)]), 0.0);
        }
        return ifft64_scaled(bins);
    }();
    return lts;
}

const CplxVec& long_training_sequence() {
    static const CplxVec seq = [] {
        const CplxVec& lts = long_training_symbol64();
        CplxVec out;
        out.reserve(160);
        for (int n = 32; n < 64; ++n) out.push_back(lts[n]);  // GI2
        out.insert(out.end(), lts.begin(), lts.end());
        out.insert(out.end(), lts.begin(), lts.end());
        return out;
    }();
    return seq;
}

const CplxVec& short_training_sequence() {
    static const CplxVec seq = [] {
        CplxVec bins(64, cplx{0.0, 0.0});
        const double amp = std::sqrt(13.0 / 6.0);
        for (const auto& e : kStsFreq)
            bins[static_cast<size_t>(e.k >= 0 ? e.k : 64 + e.k)] =
                cplx(e.sign * amp, e.sign * amp);
        const CplxVec sts = ifft64_scaled(bins);
        CplxVec out;
        out.reserve(160);
        for (int n = 0; n < 160; ++n) out.push_back(sts[static_cast<size_t>(n % 64)]);
        return out;
    }();
    return seq;
}

namespace {

// SIGNAL-field rate encodings for the OFDM PHY rates we support
uint8_t signal_rate_bits(const OfdmParams& params, const ConstellationSpec& spec) {
    const bool half = params.code_rate == kRateHalf;
    switch (spec.scheme) {
        case Scheme::Bpsk: return half ? 0b1101 : 0b1111;   // 6 / 9 Mbps
        case Scheme::Qpsk: return half ? 0b0101 : 0b0111;   // 12 / 18
        case Scheme::Qam16: return half ? 0b1001 : 0b1011;  // 24 / 36
        case Scheme::Qam64: return half ? 0b0001 : 0b0011;  // 48 (2/3 slot) / 54
    }
    return 0;
}

CplxVec build_signal_symbol(size_t payload_bits, const OfdmParams& params,
                            const ConstellationSpec& spec) {
    BitVec hdr(24, 0);
    const uint8_t rate = signal_rate_bits(params, spec);
    for (int b = 0; b < 4; ++b) hdr[b] = (rate >> (3 - b)) & 1;
    const uint32_t length = static_cast<uint32_t>(std::min<size_t>(payload_bits / 8, 4095));
    for (int b = 0; b < 12; ++b) hdr[5 + b] = (length >> b) & 1;  // LSB first
    uint8_t parity = 0;
    for (int b = 0; b < 17; ++b) parity ^= hdr[b];
    hdr[17] = parity;
    // 18..23 tail zeros

    BitVec coded = ofdm::conv_encode(hdr);
    coded = ofdm::interleave(coded, 48, 1);
    const ConstellationSpec bpsk = build_constellation(Scheme::Bpsk);
    const CplxVec points = map_bits(coded, bpsk);

    CplxVec grid(ofdm::kNumSubcarriers);
    size_t d = 0;
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
        if (ofdm::is_pilot(l)) continue;
        grid[l] = points[d++];
    }
    for (int p = 0; p < 4; ++p)
        grid[ofdm::kPilotLogical[p]] =
            cplx(ofdm::pilot_base(p) * ofdm::pilot_polarity(0), 0.0);
    return grid;
}

}  // namespace

TxFrame modulate_frame(std::span<const uint8_t> coded_bits, const OfdmParams& params,
                       const ConstellationSpec& spec) {
    const int ncbps = params.coded_bits_per_symbol(spec);
    if (coded_bits.empty() || coded_bits.size() % static_cast<size_t>(ncbps) != 0)
        throw framing_error("modulate_frame: coded bits must fill whole symbols");

    TxFrame frame;
    frame.params = params;
    frame.spec = spec;
    frame.source_bits.assign(coded_bits.begin(), coded_bits.end());
    frame.n_symbols = static_cast<int>(coded_bits.size()) / ncbps;

    const CplxVec& sts = short_training_sequence();
    const CplxVec& lts = long_training_sequence();
    frame.samples.insert(frame.samples.end(), sts.begin(), sts.end());
    frame.samples.insert(frame.samples.end(), lts.begin(), lts.end());

    const CplxVec signal_grid = build_signal_symbol(coded_bits.size(), params, spec);
    const CplxVec signal_time = symbol_to_time(signal_grid, params);
    frame.samples.insert(frame.samples.end(), signal_time.begin(), signal_time.end());
    frame.preamble_samples = static_cast<int>(frame.samples.size());

    const int bpsc = spec.bits_per_symbol;
    frame.reference_grid.reserve(frame.n_symbols);
    for (int j = 0; j < frame.n_symbols; ++j) {
        CplxVec grid(ofdm::kNumSubcarriers);
        const uint8_t* bits = coded_bits.data() + static_cast<size_t>(j) * ncbps;
        size_t pos = 0;
        for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
            if (ofdm::is_pilot(l)) continue;
            int label = 0;
            for (int b = 0; b < bpsc; ++b) label = (label << 1) | (bits[pos++] & 1);
            grid[l] = spec.ideal_points[static_cast<size_t>(label)];
        }
        const double pol = ofdm::pilot_polarity(j + 1);
        for (int p = 0; p < 4; ++p)
            grid[ofdm::kPilotLogical[p]] = cplx(ofdm::pilot_base(p) * pol, 0.0);
        const CplxVec time = symbol_to_time(grid, params);
        frame.samples.insert(frame.samples.end(), time.begin(), time.end());
        frame.reference_grid.push_back(std::move(grid));
    }
    return frame;
}

namespace {
constexpr char kCaptureMagic[8] = {'E', 'V', 'M', 'C', 'A', 'P', '0', '1'};
}

void write_capture(const std::string& path, std::span<const cplx> samples,
                   const CaptureMeta& meta) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open capture file for writing: " + path);
    f.write(kCaptureMagic, 8);
    f.write(reinterpret_cast<const char*>(&meta.sample_rate), 8);
    const uint32_t n_frames = static_cast<uint32_t>(meta.frames.size());
    f.write(reinterpret_cast<const char*>(&n_frames), 4);
    for (const auto& [off, len] : meta.frames) {
        f.write(reinterpret_cast<const char*>(&off), 4);
        f.write(reinterpret_cast<const char*>(&len), 4);
    }
    const uint64_t n = samples.size();
    f.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& s : samples) {
        const float iq[2] = {static_cast<float>(s.real()), static_cast<float>(s.imag())};
        f.write(reinterpret_cast<const char*>(iq), 8);
    }
}

std::pair<CplxVec, CaptureMeta> read_capture(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open capture file: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kCaptureMagic, 8) != 0)
        throw framing_error("not a capture file: " + path);
    CaptureMeta meta;
    f.read(reinterpret_cast<char*>(&meta.sample_rate), 8);
    uint32_t n_frames = 0;
    f.read(reinterpret_cast<char*>(&n_frames), 4);
    meta.frames.resize(n_frames);
    for (auto& [off, len] : meta.frames) {
        f.read(reinterpret_cast<char*>(&off), 4);
        f.read(reinterpret_cast<char*>(&len), 4);
    }
    uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    CplxVec samples(n);
    for (auto& s : samples) {
        float iq[2];
        f.read(reinterpret_cast<char*>(iq), 8);
        s = cplx(iq[0], iq[1]);
    }
    if (!f) throw framing_error("truncated capture file: " + path);
    return {std::move(samples), std::move(meta)};
}

}  // namespace evmkit
