#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evmkit/experiment.hpp"
#include "evmkit/numerics.hpp"

namespace py = pybind11;
using namespace evmkit;

namespace {

Scheme scheme_from(const std::string& name) { return scheme_from_name(name); }

py::dict table_to_dict(const ResultTable& table) {
    py::dict out;
    out["columns"] = table.columns;
    out["rows"] = table.rows;
    return out;
}

py::dict run_config(const std::string& json_text, int parallel) {
    const ExperimentConfig cfg = config_from_json_text(json_text);
    py::dict out = table_to_dict(run_experiment(cfg, parallel));
    out["config_hash"] = cfg.config_hash();
    out["resolved"] = cfg.resolved_json();
    return out;
}

py::dict simulate_point(const std::string& scheme, double ebn0_db, double cfo_hz,
                        double phase_noise_linewidth_hz, int n_symbols, int n_frames,
                        uint64_t seed, bool tracking) {
    const OfdmParams params;
    const auto spec = build_constellation(scheme_from(scheme));
    ImpairmentConfig imp;
    imp.ebn0_db = ebn0_db;
    imp.cfo_hz = cfo_hz;
    imp.phase_noise_linewidth_hz = phase_noise_linewidth_hz;
    AnalyzerConfig acfg;
    acfg.tracking = tracking ? Tracking::PilotPhaseAmplitude : Tracking::Off;
    const EvmReport rep = simulate_evm(params, spec, imp, acfg, n_symbols, n_frames, seed);
    py::dict out;
    out["evm_rms"] = rep.evm_rms;
    out["evm_db"] = rep.evm_db;
    out["evm_pilot"] = rep.evm_pilot;
    out["freq_err_hz"] = rep.freq_err_hz;
    out["n_frames"] = rep.n_frames;
    out["symbols_per_frame"] = rep.symbols_per_frame;
    return out;
}

py::bytes build_frame(const std::string& frame_type, uint32_t nav_us, size_t payload_bits,
                      const std::string& ssid) {
    MgmtFrameSpec spec;
    spec.frame_type = mgmt_frame_from_name(frame_type);
    spec.nav_us = nav_us;
    spec.payload_bits = payload_bits;
    spec.ssid = ssid;
    const auto bytes = build_mgmt_frame_bytes(spec);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

py::dict parse_frame(const py::bytes& data) {
    const std::string_view view = data;
    const MgmtFrameSpec spec = parse_mgmt_frame(
        std::span(reinterpret_cast<const uint8_t*>(view.data()), view.size()));
    py::dict out;
    out["frame_type"] = mgmt_frame_name(spec.frame_type);
    out["nav_us"] = spec.nav_us;
    out["payload_bits"] = spec.payload_bits;
    out["ssid"] = spec.ssid;
    return out;
}

double evm_stream(const std::vector<cplx>& measured, const std::vector<cplx>& reference,
                  const std::string& scheme, bool normalize) {
    return evm_rms_stream(measured, reference, build_constellation(scheme_from(scheme)),
                          normalize);
}

}  // namespace

PYBIND11_MODULE(_evmkit, m) {
    m.doc() = "OFDM link simulation and EVM measurement toolkit";

    m.def("q_function", &numerics::q_function, py::arg("x"),
          "Tail probability of the standard normal distribution");
    m.def(
        "evm_to_snr",
        [](double evm) {
            return numerics::evm_snr_convert(evm, numerics::ConvertDirection::EvmToSnr);
        },
        py::arg("evm_rms"), "Linear SNR implied by an RMS EVM fraction");
    m.def(
        "snr_to_evm",
        [](double snr) {
            return numerics::evm_snr_convert(snr, numerics::ConvertDirection::SnrToEvm);
        },
        py::arg("snr_linear"), "RMS EVM fraction implied by a linear SNR");
    m.def(
        "ber_from_evm",
        [](const std::string& scheme, double evm) {
            return numerics::ber_from_evm(build_constellation(scheme_from(scheme)), evm);
        },
        py::arg("scheme"), py::arg("evm_rms"),
        "BER predicted from a measured RMS EVM fraction");
    m.def(
        "crc32",
        [](const py::bytes& data) {
            const std::string_view view = data;
            return crc32(
                std::span(reinterpret_cast<const uint8_t*>(view.data()), view.size()));
        },
        py::arg("data"), "IEEE 802.3 CRC-32");

    m.def("evm_rms_stream", &evm_stream, py::arg("measured"), py::arg("reference"),
          py::arg("scheme"), py::arg("normalize") = false,
          "RMS EVM between two symbol streams");
    m.def("simulate_evm", &simulate_point, py::arg("scheme") = "bpsk",
          py::arg("ebn0_db") = 20.0, py::arg("cfo_hz") = 0.0,
          py::arg("phase_noise_linewidth_hz") = 0.0, py::arg("n_symbols") = 100,
          py::arg("n_frames") = 20, py::arg("seed") = 1, py::arg("tracking") = true,
          "Simulate impaired frames and return the aggregated EVM report");
    m.def("run_config", &run_config, py::arg("json_text"), py::arg("parallel") = 1,
          "Run a full experiment config (JSON text) and return the result table");
    m.def("build_mgmt_frame", &build_frame, py::arg("frame_type"), py::arg("nav_us"),
          py::arg("payload_bits"), py::arg("ssid"),
          "Build a management frame (MAC header + body + FCS) as bytes");
    m.def("parse_mgmt_frame", &parse_frame, py::arg("data"),
          "Parse a management frame built by build_mgmt_frame");
}
