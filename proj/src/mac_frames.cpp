#include "evmkit/mac_frames.hpp"

#include <algorithm>
#include <random>

namespace evmkit {

uint8_t mgmt_subtype_code(MgmtFrameType t) {
    switch (t) {
        case MgmtFrameType::AssocRequest: return 0;
        case MgmtFrameType::AssocResponse: return 1;
        case MgmtFrameType::ReassocRequest: return 2;
        case MgmtFrameType::ReassocResponse: return 3;
        case MgmtFrameType::ProbeRequest: return 4;
        case MgmtFrameType::ProbeResponse: return 5;
        case MgmtFrameType::Beacon: return 8;
        case MgmtFrameType::Disassociation: return 10;
        case MgmtFrameType::Authentication: return 11;
        case MgmtFrameType::Deauthentication: return 12;
    }
    throw domain_error("unknown management frame type");
}

const char* mgmt_frame_name(MgmtFrameType t) {
    switch (t) {
        case MgmtFrameType::AssocRequest: return "assoc_request";
        case MgmtFrameType::AssocResponse: return "assoc_response";
        case MgmtFrameType::ReassocRequest: return "reassoc_request";
        case MgmtFrameType::ReassocResponse: return "reassoc_response";
        case MgmtFrameType::ProbeRequest: return "probe_request";
        case MgmtFrameType::ProbeResponse: return "probe_response";
        case MgmtFrameType::Disassociation: return "disassociation";
        case MgmtFrameType::Authentication: return "authentication";
        case MgmtFrameType::Deauthentication: return "deauthentication";
        case MgmtFrameType::Beacon: return "beacon";
    }
    return "?";
}

MgmtFrameType mgmt_frame_from_name(const std::string& name) {
    for (MgmtFrameType t : kAllMgmtFrameTypes)
        if (name == mgmt_frame_name(t)) return t;
    throw config_error("unknown management frame type: " + name);
}

namespace {

MgmtFrameType mgmt_type_from_subtype(uint8_t code) {
    for (MgmtFrameType t : kAllMgmtFrameTypes)
        if (mgmt_subtype_code(t) == code) return t;
    throw framing_error("unknown management subtype code");
}

constexpr size_t kMacHeaderBytes = 24;
constexpr size_t kFcsBytes = 4;

uint64_t body_fill_seed(const MgmtFrameSpec& spec) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    mix(mgmt_subtype_code(spec.frame_type));
    mix(spec.nav_us);
    mix(spec.payload_bits);
    for (uint8_t b : spec.source) mix(b);
    for (uint8_t b : spec.dest) mix(b);
    for (char c : spec.ssid) mix(static_cast<uint8_t>(c));
    return h;
}

}  // namespace

uint32_t crc32(std::span<const uint8_t> bytes) {
    uint32_t crc = 0xFFFFFFFFu;
    for (uint8_t byte : bytes) {
        crc ^= byte;
        for (int b = 0; b < 8; ++b)
            crc = (crc >> 1) ^ (0xEDB88320u & (~(crc & 1u) + 1u));
    }
    return ~crc;
}

std::vector<uint8_t> build_mgmt_frame_bytes(const MgmtFrameSpec& spec) {
    if (spec.nav_us > 32767)
        throw domain_error("nav_us exceeds the 15-bit Duration encoding");
    if (spec.payload_bits % 8 != 0)
        throw framing_error("payload_bits must be a whole number of octets");
    const size_t body_bytes = spec.payload_bits / 8;
    if (body_bytes < 2 + spec.ssid.size())
        throw framing_error("payload too small for the SSID element");
    if (spec.ssid.size() > 32) throw framing_error("ssid longer than 32 octets");

    std::vector<uint8_t> f;
    f.reserve(kMacHeaderBytes + body_bytes + kFcsBytes);
    // frame control: protocol 0, type management, subtype
    f.push_back(static_cast<uint8_t>(mgmt_subtype_code(spec.frame_type) << 4));
    f.push_back(0);
    f.push_back(static_cast<uint8_t>(spec.nav_us & 0xFF));       // Duration LE
    f.push_back(static_cast<uint8_t>((spec.nav_us >> 8) & 0x7F));
    f.insert(f.end(), spec.dest.begin(), spec.dest.end());    // addr1
    f.insert(f.end(), spec.source.begin(), spec.source.end());  // addr2
    f.insert(f.end(), spec.source.begin(), spec.source.end());  // addr3 (BSSID)
    f.push_back(0);  // sequence control
    f.push_back(0);

    // body: SSID element then pseudorandom fill
    f.push_back(0);  // element id
    f.push_back(static_cast<uint8_t>(spec.ssid.size()));
    for (char c : spec.ssid) f.push_back(static_cast<uint8_t>(c));
    std::mt19937_64 rng(body_fill_seed(spec));
    for (size_t i = 2 + spec.ssid.size(); i < body_bytes; ++i)
        f.push_back(static_cast<uint8_t>(rng() & 0xFF));

    const uint32_t fcs = crc32(f);
    for (int b = 0; b < 4; ++b) f.push_back(static_cast<uint8_t>((fcs >> (8 * b)) & 0xFF));
    return f;
}

BitVec build_mgmt_frame(const MgmtFrameSpec& spec) {
    return bytes_to_bits(build_mgmt_frame_bytes(spec));
}

MgmtFrameSpec parse_mgmt_frame(std::span<const uint8_t> frame_bytes) {
    if (frame_bytes.size() < kMacHeaderBytes + 2 + kFcsBytes)
        throw framing_error("frame shorter than header + SSID element + FCS");
    const size_t body_end = frame_bytes.size() - kFcsBytes;
    uint32_t fcs = 0;
    for (int b = 0; b < 4; ++b)
        fcs |= static_cast<uint32_t>(frame_bytes[body_end + b]) << (8 * b);
    if (crc32(frame_bytes.subspan(0, body_end)) != fcs)
        throw framing_error("FCS mismatch");

    MgmtFrameSpec spec;
    if ((frame_bytes[0] & 0x0F) != 0 || frame_bytes[1] != 0)
        throw framing_error("not a management frame");
    spec.frame_type = mgmt_type_from_subtype(static_cast<uint8_t>(frame_bytes[0] >> 4));
    spec.nav_us = static_cast<uint32_t>(frame_bytes[2]) |
                  (static_cast<uint32_t>(frame_bytes[3] & 0x7F) << 8);
    std::copy_n(frame_bytes.begin() + 4, 6, spec.dest.begin());
    std::copy_n(frame_bytes.begin() + 10, 6, spec.source.begin());
    const size_t ssid_len = frame_bytes[kMacHeaderBytes + 1];
    if (kMacHeaderBytes + 2 + ssid_len > body_end)
        throw framing_error("SSID element overruns the frame body");
    spec.ssid.assign(frame_bytes.begin() + kMacHeaderBytes + 2,
                     frame_bytes.begin() + kMacHeaderBytes + 2 + ssid_len);
    spec.payload_bits = (body_end - kMacHeaderBytes) * 8;
    return spec;
}

MgmtFrameSpec parse_mgmt_frame_bits(std::span<const uint8_t> frame_bits) {
    return parse_mgmt_frame(bits_to_bytes(frame_bits));
}

FrameLayout frame_layout(const MgmtFrameSpec& spec, const OfdmParams& params,
                         const ConstellationSpec& constellation) {
    FrameLayout layout;
    const size_t mac_bits = kMacHeaderBytes * 8 + spec.payload_bits + kFcsBytes * 8;
    layout.oh_mgt_bits = 24 /* SIGNAL */ + kMacHeaderBytes * 8 + kFcsBytes * 8;
    layout.total_bits = 16 /* SERVICE */ + mac_bits + 6 /* tail */;
    const int ndbps = params.data_bits_per_symbol(constellation);
    layout.ofdm_symbol_count =
        static_cast<int>((layout.total_bits + ndbps - 1) / static_cast<size_t>(ndbps));
    layout.airtime_us = 20.0 + 4.0 * layout.ofdm_symbol_count;
    return layout;
}

int nav_to_symbol_count(uint32_t nav_us, const OfdmParams&) {
    if (nav_us < 24)
        throw domain_error("nav below the one-preamble-plus-one-symbol minimum");
    return static_cast<int>((nav_us - 20) / 4);
}

BitVec bytes_to_bits(std::span<const uint8_t> bytes) {
    BitVec bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t byte : bytes)
        for (int b = 0; b < 8; ++b) bits.push_back((byte >> b) & 1);
    return bits;
}

std::vector<uint8_t> bits_to_bytes(std::span<const uint8_t> bits) {
    if (bits.size() % 8 != 0)
        throw framing_error("bit count not a multiple of 8");
    std::vector<uint8_t> bytes(bits.size() / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        bytes[i / 8] |= static_cast<uint8_t>((bits[i] & 1) << (i % 8));
    return bytes;
}

}  // namespace evmkit
