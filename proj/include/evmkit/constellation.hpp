#pragma once

#include <span>

#include "evmkit/common.hpp"

namespace evmkit {

enum class Scheme { Bpsk, Qpsk, Qam16, Qam64 };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/// Square constellation with an IEEE 802.11a-style Gray bit mapping.
/// ideal_points[label] is the unit-mean-power point for that bit label
/// (bits read MSB-first, I bits before Q bits).
struct ConstellationSpec {
    Scheme scheme;
    int levels_per_dim;   // L
    int order;            // M
    int bits_per_symbol;  // log2(M)
    CplxVec ideal_points;
    double ideal_norm_factor;  // |A0| applied to the raw +/-odd-integer grid
};

ConstellationSpec build_constellation(Scheme scheme);

/// Maps bits (one per element) to normalized ideal points. Bit count must be
/// a multiple of bits_per_symbol.
CplxVec map_bits(std::span<const uint8_t> bits, const ConstellationSpec& spec);

struct DemapResult {
    int label;
    cplx ideal_point;
};

/// Euclidean-nearest ideal point; ties resolve to the lowest bit label.
DemapResult demap_nearest(cplx measured, const ConstellationSpec& spec);

BitVec demap_bits(std::span<const cplx> symbols, const ConstellationSpec& spec);

/// Stream RMS EVM. When normalize is set the measured stream is rescaled by
/// its own |A| = sqrt(T / sum|V|^2) so a common gain cancels; references are
/// taken as already-normalized ideal points.
double evm_rms_stream(std::span<const cplx> measured, std::span<const cplx> references,
                      const ConstellationSpec& spec, bool normalize = true);

}  // namespace evmkit
