#include "evmkit/constellation.hpp"

#include <algorithm>
#include <array>

namespace evmkit {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Bpsk: return "BPSK";
        case Scheme::Qpsk: return "QPSK";
        case Scheme::Qam16: return "16-QAM";
        case Scheme::Qam64: return "64-QAM";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "BPSK" || name == "bpsk") return Scheme::Bpsk;
    if (name == "QPSK" || name == "qpsk") return Scheme::Qpsk;
    if (name == "16-QAM" || name == "qam16" || name == "16QAM") return Scheme::Qam16;
    if (name == "64-QAM" || name == "qam64" || name == "64QAM") return Scheme::Qam64;
    throw config_error("unknown modulation scheme: " + name);
}

namespace {

// Gray code per dimension, 802.11a subcarrier modulation tables.
// gray_level(bits, n) returns the raw odd-integer level for an n-bit group.
double gray_level(int bits, int nbits) {
    switch (nbits) {
        case 1:
            return bits ? 1.0 : -1.0;
        case 2: {
            static constexpr std::array<double, 4> l2 = {-3, -1, 3, 1};  // 00,01,10,11
            return l2[static_cast<size_t>(bits)];
        }
        case 3: {
            static constexpr std::array<double, 8> l3 = {-7, -5, -1, -3, 7, 5, 1, 3};
            return l3[static_cast<size_t>(bits)];
        }
        default:
            throw domain_error("unsupported bits per dimension");
    }
}

}  // namespace

ConstellationSpec build_constellation(Scheme scheme) {
    ConstellationSpec spec;
    spec.scheme = scheme;
    switch (scheme) {
        case Scheme::Bpsk: spec.levels_per_dim = 2; spec.order = 2; break;
        case Scheme::Qpsk: spec.levels_per_dim = 2; spec.order = 4; break;
        case Scheme::Qam16: spec.levels_per_dim = 4; spec.order = 16; break;
        case Scheme::Qam64: spec.levels_per_dim = 8; spec.order = 64; break;
    }
    spec.bits_per_symbol = static_cast<int>(std::round(std::log2(spec.order)));

    // raw points on the odd-integer grid, then Eq 2.7-style normalization
    std::vector<cplx> raw(spec.order);
    const int m = spec.order;
    if (scheme == Scheme::Bpsk) {
        raw[0] = {-1.0, 0.0};
        raw[1] = {1.0, 0.0};
    } else {
        const int bits_i = spec.bits_per_symbol / 2;
        for (int label = 0; label < m; ++label) {
            const int i_bits = label >> bits_i;
            const int q_bits = label & ((1 << bits_i) - 1);
            raw[label] = {gray_level(i_bits, bits_i), gray_level(q_bits, bits_i)};
        }
    }
    double total = 0.0;
    for (const auto& p : raw) total += std::norm(p);
    spec.ideal_norm_factor = std::sqrt(static_cast<double>(m) / total);
    spec.ideal_points.resize(m);
    for (int label = 0; label < m; ++label)
        spec.ideal_points[label] = raw[label] * spec.ideal_norm_factor;
    return spec;
}

CplxVec map_bits(std::span<const uint8_t> bits, const ConstellationSpec& spec) {
    const int bps = spec.bits_per_symbol;
    if (bits.size() % static_cast<size_t>(bps) != 0)
        throw framing_error("bit count not divisible by bits per symbol");
    CplxVec out;
    out.reserve(bits.size() / bps);
    for (size_t i = 0; i < bits.size(); i += bps) {
        int label = 0;
        for (int b = 0; b < bps; ++b) label = (label << 1) | (bits[i + b] & 1);
        out.push_back(spec.ideal_points[label]);
    }
    return out;
}

DemapResult demap_nearest(cplx measured, const ConstellationSpec& spec) {
    if (!std::isfinite(measured.real()) || !std::isfinite(measured.imag()))
        throw domain_error("demap_nearest: non-finite input");
    int best = 0;
    double best_d = std::norm(measured - spec.ideal_points[0]);
    for (int label = 1; label < spec.order; ++label) {
        const double d = std::norm(measured - spec.ideal_points[label]);
        if (d < best_d) {  // ties keep the lowest label
            best_d = d;
            best = label;
        }
    }
    return {best, spec.ideal_points[best]};
}

BitVec demap_bits(std::span<const cplx> symbols, const ConstellationSpec& spec) {
    BitVec bits;
    bits.reserve(symbols.size() * spec.bits_per_symbol);
    for (const auto& s : symbols) {
        const int label = demap_nearest(s, spec).label;
        for (int b = spec.bits_per_symbol - 1; b >= 0; --b)
            bits.push_back(static_cast<uint8_t>((label >> b) & 1));
    }
    return bits;
}

double evm_rms_stream(std::span<const cplx> measured, std::span<const cplx> references,
                      const ConstellationSpec&, bool normalize) {
    if (measured.empty() || references.empty())
        throw domain_error("evm_rms_stream: empty input");
    if (measured.size() != references.size())
        throw framing_error("evm_rms_stream: length mismatch");

    const size_t t = measured.size();
    double p_v = 0.0;
    for (const auto& v : measured) p_v += std::norm(v);
    double scale = 1.0;
    if (normalize) {
        if (p_v <= 0.0) throw domain_error("evm_rms_stream: zero measured power");
        scale = std::sqrt(static_cast<double>(t) / p_v);  // |A|, Eqs 2.5-2.6
    }

    double err = 0.0, ref_pow = 0.0;
    for (size_t n = 0; n < t; ++n) {
        err += std::norm(measured[n] * scale - references[n]);
        ref_pow += std::norm(references[n]);
    }
    if (ref_pow <= 0.0) throw domain_error("evm_rms_stream: zero reference power");
    return std::sqrt(err / ref_pow);
}

}  // namespace evmkit
