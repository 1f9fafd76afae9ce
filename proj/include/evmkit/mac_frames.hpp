#pragma once

#include <array>
#include <span>

#include "evmkit/ofdm.hpp"

namespace evmkit {

enum class MgmtFrameType {
    AssocRequest,
    AssocResponse,
    ReassocRequest,
    ReassocResponse,
    ProbeRequest,
    ProbeResponse,
    Disassociation,
    Authentication,
    Deauthentication,
    Beacon,
};

inline constexpr std::array<MgmtFrameType, 10> kAllMgmtFrameTypes = {
    MgmtFrameType::AssocRequest,   MgmtFrameType::AssocResponse,
    MgmtFrameType::ReassocRequest, MgmtFrameType::ReassocResponse,
    MgmtFrameType::ProbeRequest,   MgmtFrameType::ProbeResponse,
    MgmtFrameType::Disassociation, MgmtFrameType::Authentication,
    MgmtFrameType::Deauthentication, MgmtFrameType::Beacon,
};

uint8_t mgmt_subtype_code(MgmtFrameType t);
const char* mgmt_frame_name(MgmtFrameType t);
MgmtFrameType mgmt_frame_from_name(const std::string& name);

struct MgmtFrameSpec {
    MgmtFrameType frame_type = MgmtFrameType::AssocRequest;
    uint32_t nav_us = 0;       // Duration field, must fit 15 bits
    size_t payload_bits = 0;   // frame body size
    std::array<uint8_t, 6> source{};
    std::array<uint8_t, 6> dest{};
    std::string ssid;

    bool operator==(const MgmtFrameSpec&) const = default;
};

struct FrameLayout {
    size_t oh_mgt_bits = 0;   // PLCP SIGNAL + MAC header + FCS
    size_t total_bits = 0;    // SERVICE + MAC frame + tail, before padding
    double airtime_us = 0.0;  // 20 + 4 * L_p
    int ofdm_symbol_count = 0;
};

/// IEEE 802.3 CRC-32 (reflected, init/xorout 0xFFFFFFFF); check value for
/// "123456789" is 0xCBF43926.
uint32_t crc32(std::span<const uint8_t> bytes);

/// MAC header + body (SSID element plus deterministic pseudorandom fill to
/// payload_bits) + FCS, as bytes.
std::vector<uint8_t> build_mgmt_frame_bytes(const MgmtFrameSpec& spec);
BitVec build_mgmt_frame(const MgmtFrameSpec& spec);

/// Inverse of build; verifies the FCS.
MgmtFrameSpec parse_mgmt_frame(std::span<const uint8_t> frame_bytes);
MgmtFrameSpec parse_mgmt_frame_bits(std::span<const uint8_t> frame_bits);

FrameLayout frame_layout(const MgmtFrameSpec& spec, const OfdmParams& params,
                         const ConstellationSpec& constellation);

/// Frame airtime budget -> payload OFDM symbol count, L_p = (nav - 20) / 4.
int nav_to_symbol_count(uint32_t nav_us, const OfdmParams& params);

BitVec bytes_to_bits(std::span<const uint8_t> bytes);  // LSB-first per octet
std::vector<uint8_t> bits_to_bytes(std::span<const uint8_t> bits);

}  // namespace evmkit
