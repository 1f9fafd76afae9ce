#include "evmkit/dsp.hpp"

#include <numbers>

namespace evmkit::dsp {

void fft(CplxVec& x, bool inverse) {
    const size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw domain_error("fft: size must be a nonzero power of two");

    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = x[i + k];
                cplx v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

CplxVec fft_copy(std::span<const cplx> x, bool inverse) {
    CplxVec out(x.begin(), x.end());
    fft(out, inverse);
    return out;
}

double mean_power(std::span<const cplx> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

}  // namespace evmkit::dsp
