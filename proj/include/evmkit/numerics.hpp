#pragma once

#include "evmkit/common.hpp"
#include "evmkit/constellation.hpp"

namespace evmkit::numerics {

/// Linear (not dB) power ratios for one operating point.
struct LinkBudget {
    double ebn0 = 0.0;
    double esn0 = 0.0;
    double snr = 0.0;

    static LinkBudget from_ebn0(double ebn0_linear, const ConstellationSpec& spec);
    static LinkBudget from_esn0(double esn0_linear, const ConstellationSpec& spec);
};

/// Tail probability of the standard normal, Q(x) = erfc(x/sqrt(2))/2.
double q_function(double x);

enum class BerInput { PerBit, PerSymbolRaisedCosine };

/// Closed-form M-ary BER for square constellations under coherent detection
/// in Gaussian noise; BPSK enters as the L=2, M=2 degenerate case.
double ber_closed_form(const ConstellationSpec& spec, const LinkBudget& budget,
                       BerInput input_kind);

enum class ConvertDirection { SnrToEvm, EvmToSnr };

/// EVM_rms = sqrt(1/SNR) and SNR = 1/EVM^2; exact inverses of each other.
double evm_snr_convert(double value, ConvertDirection direction);

/// BER predicted directly from the RMS EVM fraction.
double ber_from_evm(const ConstellationSpec& spec, double evm_rms);

}  // namespace evmkit::numerics
