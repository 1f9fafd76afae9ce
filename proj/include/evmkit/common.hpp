#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evmkit {

using cplx = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// 20*log10 of an amplitude ratio, floored so reports stay finite.
inline double amplitude_db(double amp, double floor_db = -100.0) {
    if (amp <= 0.0) return floor_db;
    return std::max(20.0 * std::log10(amp), floor_db);
}

struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct framing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct sync_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using BitVec = std::vector<uint8_t>;  // one bit per element, value 0 or 1
using CplxVec = std::vector<cplx>;

// splitmix64, used to derive independent per-trial seeds from a run seed
inline uint64_t split_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace evmkit
