#include "evmkit/numerics.hpp"

#include <algorithm>
#include <numbers>

namespace evmkit::numerics {

LinkBudget LinkBudget::from_ebn0(double ebn0_linear, const ConstellationSpec& spec) {
    if (ebn0_linear <= 0.0) throw domain_error("ebn0 must be positive");
    LinkBudget b;
    b.ebn0 = ebn0_linear;
    b.esn0 = ebn0_linear * spec.bits_per_symbol;
    b.snr = b.esn0;
    return b;
}

LinkBudget LinkBudget::from_esn0(double esn0_linear, const ConstellationSpec& spec) {
    if (esn0_linear <= 0.0) throw domain_error("esn0 must be positive");
    LinkBudget b;
    b.esn0 = esn0_linear;
    b.ebn0 = esn0_linear / spec.bits_per_symbol;
    b.snr = esn0_linear;
    return b;
}

double q_function(double x) {
    if (!std::isfinite(x)) throw domain_error("q_function: non-finite input");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double ber_closed_form(const ConstellationSpec& spec, const LinkBudget& budget,
                       BerInput input_kind) {
    const double l = spec.levels_per_dim;
    if (l < 2) throw domain_error("ber_closed_form: L must be >= 2");
    const double log2l = std::log2(l);
    const double coeff = 2.0 * (1.0 - 1.0 / l) / log2l;
    const double shape = 3.0 * log2l / (l * l - 1.0);

    double ratio;
    if (input_kind == BerInput::PerBit) {
        if (budget.ebn0 <= 0.0) throw domain_error("ber_closed_form: ebn0 not set");
        ratio = 2.0 * budget.ebn0;
    } else {
        if (budget.esn0 <= 0.0) throw domain_error("ber_closed_form: esn0 not set");
        ratio = 2.0 * budget.esn0 / spec.bits_per_symbol;
    }
    const double pb = coeff * q_function(std::sqrt(shape * ratio));
    return std::clamp(pb, 0.0, 0.5);
}

double evm_snr_convert(double value, ConvertDirection direction) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw domain_error("evm_snr_convert: value must be positive and finite");
    if (direction == ConvertDirection::SnrToEvm) return std::sqrt(1.0 / value);
    return 1.0 / (value * value);
}

double ber_from_evm(const ConstellationSpec& spec, double evm_rms) {
    if (!(evm_rms > 0.0) || !std::isfinite(evm_rms))
        throw domain_error("ber_from_evm: evm must be positive and finite");
    const double esn0 = evm_snr_convert(evm_rms, ConvertDirection::EvmToSnr);
    return ber_closed_form(spec, LinkBudget::from_esn0(esn0, spec),
                           BerInput::PerSymbolRaisedCosine);
}

}  // namespace evmkit::numerics
