#include "evmkit/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include <json.hpp>

#include "evmkit/numerics.hpp"

namespace evmkit {

using nlohmann::json;

double ebn0_db_for_subcarrier_snr_db(double snr_db, const OfdmParams& params,
                                     const ConstellationSpec& spec) {
    // noise per demodulated subcarrier is (52/64) of the per-sample variance
    const double s = db_to_linear(snr_db);
    const double ebn0 = s * params.sample_rate / params.data_rate_bps(spec) *
                        (static_cast<double>(params.used_subcarriers) / params.fft_size);
    return linear_to_db(ebn0);
}

double subcarrier_snr_db_for_ebn0_db(double ebn0_db, const OfdmParams& params,
                                     const ConstellationSpec& spec) {
    const double e = db_to_linear(ebn0_db);
    const double s = e * params.data_rate_bps(spec) / params.sample_rate *
                     (static_cast<double>(params.fft_size) / params.used_subcarriers);
    return linear_to_db(s);
}

std::vector<double> SweepAxis::points() const {
    if (step <= 0.0 || stop < start)
        throw config_error("sweep: bounds must satisfy start <= stop, step > 0");
    std::vector<double> pts;
    for (double v = start; v <= stop + step * 1e-9; v += step) pts.push_back(v);
    return pts;
}

// --- JSON (de)serialization -------------------------------------------------

namespace {

std::string format_mac(const std::array<uint8_t, 6>& mac) {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1],
                  mac[2], mac[3], mac[4], mac[5]);
    return buf;
}

std::array<uint8_t, 6> parse_mac(const std::string& text, const std::string& path) {
    std::array<uint8_t, 6> mac{};
    unsigned v[6];
    if (std::sscanf(text.c_str(), "%2x:%2x:%2x:%2x:%2x:%2x", &v[0], &v[1], &v[2],
                    &v[3], &v[4], &v[5]) != 6)
        throw config_error(path + ": malformed MAC address '" + text + "'");
    for (int i = 0; i < 6; ++i) mac[static_cast<size_t>(i)] = static_cast<uint8_t>(v[i]);
    return mac;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(path + "." + key + ": wrong type");
    }
}

json impairments_to_json(const ImpairmentConfig& c) {
    json j;
    if (c.noise_enabled()) j["ebn0_db"] = c.ebn0_db;
    j["cfo_hz"] = c.cfo_hz;
    j["phase_noise_linewidth_hz"] = c.phase_noise_linewidth_hz;
    j["iq_gain_imbalance_db"] = c.iq_gain_imbalance_db;
    j["iq_phase_skew_deg"] = c.iq_phase_skew_deg;
    j["nonlinear_input_backoff_db"] = c.nonlinear_input_backoff_db;
    json taps = json::array();
    for (const auto& t : c.multipath_taps)
        taps.push_back({t.delay_samples, t.gain.real(), t.gain.imag()});
    j["multipath_taps"] = taps;
    j["seed"] = c.seed;
    return j;
}

ImpairmentConfig impairments_from_json(const json& j, const std::string& path) {
    ImpairmentConfig c;
    if (j.contains("ebn0_db") && !j.at("ebn0_db").is_null())
        c.ebn0_db = get_or<double>(j, "ebn0_db", c.ebn0_db, path);
    c.cfo_hz = get_or<double>(j, "cfo_hz", 0.0, path);
    c.phase_noise_linewidth_hz = get_or<double>(j, "phase_noise_linewidth_hz", 0.0, path);
    c.iq_gain_imbalance_db = get_or<double>(j, "iq_gain_imbalance_db", 0.0, path);
    c.iq_phase_skew_deg = get_or<double>(j, "iq_phase_skew_deg", 0.0, path);
    c.nonlinear_input_backoff_db =
        get_or<double>(j, "nonlinear_input_backoff_db", 0.0, path);
    c.seed = get_or<uint64_t>(j, "seed", 0, path);
    if (j.contains("multipath_taps")) {
        c.multipath_taps.clear();
        const auto& taps = j.at("multipath_taps");
        if (!taps.is_array()) throw config_error(path + ".multipath_taps: expected array");
        for (const auto& t : taps) {
            if (!t.is_array() || t.size() != 3)
                throw config_error(path + ".multipath_taps: each tap is [delay, re, im]");
            c.multipath_taps.push_back(
                {t[0].get<int>(), cplx(t[1].get<double>(), t[2].get<double>())});
        }
    }
    c.validate();
    return c;
}

json frame_to_json(const MgmtFrameSpec& f) {
    return {{"frame_type", mgmt_frame_name(f.frame_type)},
            {"nav_us", f.nav_us},
            {"payload_bits", f.payload_bits},
            {"source", format_mac(f.source)},
            {"dest", format_mac(f.dest)},
            {"ssid", f.ssid}};
}

MgmtFrameSpec frame_from_json(const json& j, const std::string& path) {
    MgmtFrameSpec f;
    f.frame_type = mgmt_frame_from_name(
        get_or<std::string>(j, "frame_type", "assoc_request", path));
    f.nav_us = get_or<uint32_t>(j, "nav_us", 300, path);
    if (f.nav_us > 32767) throw config_error(path + ".nav_us: exceeds 32767");
    f.payload_bits = get_or<size_t>(j, "payload_bits", 10000, path);
    f.ssid = get_or<std::string>(j, "ssid", "overlay-net", path);
    if (j.contains("source")) f.source = parse_mac(j.at("source").get<std::string>(), path);
    if (j.contains("dest")) f.dest = parse_mac(j.at("dest").get<std::string>(), path);
    return f;
}

Tracking tracking_from_string(const std::string& s, const std::string& path) {
    if (s == "off") return Tracking::Off;
    if (s == "pilot" || s == "pilot_phase_amplitude") return Tracking::PilotPhaseAmplitude;
    throw config_error(path + ": unknown tracking mode '" + s + "'");
}

const char* tracking_name(Tracking t) {
    return t == Tracking::Off ? "off" : "pilot";
}

AnalyzerConfig analyzer_from_json(const json& j, const std::string& path) {
    AnalyzerConfig a;
    a.tracking = tracking_from_string(
        get_or<std::string>(j, "tracking", "pilot", path), path + ".tracking");
    const std::string cfo = get_or<std::string>(j, "cfo_correction", "estimate", path);
    if (cfo == "estimate")
        a.cfo_correction = CfoCorrection::Estimate;
    else if (cfo == "fixed")
        a.cfo_correction = CfoCorrection::Fixed;
    else if (cfo == "off")
        a.cfo_correction = CfoCorrection::Off;
    else
        throw config_error(path + ".cfo_correction: unknown mode '" + cfo + "'");
    a.fixed_cfo_hz = get_or<double>(j, "fixed_cfo_hz", 0.0, path);
    a.data_aided_refinement = get_or<bool>(j, "data_aided_refinement", true, path);
    return a;
}

json analyzer_to_json(const AnalyzerConfig& a) {
    const char* cfo = a.cfo_correction == CfoCorrection::Estimate ? "estimate"
                      : a.cfo_correction == CfoCorrection::Fixed  ? "fixed"
                                                                  : "off";
    return {{"tracking", tracking_name(a.tracking)},
            {"cfo_correction", cfo},
            {"fixed_cfo_hz", a.fixed_cfo_hz},
            {"data_aided_refinement", a.data_aided_refinement}};
}

OfdmParams phy_from_json(const json& j, const std::string& path) {
    OfdmParams p;
    const std::string rate = get_or<std::string>(j, "code_rate", "1/2", path);
    if (rate == "1/2")
        p.code_rate = kRateHalf;
    else if (rate == "3/4")
        p.code_rate = kRateThreeQuarters;
    else
        throw config_error(path + ".code_rate: must be \"1/2\" or \"3/4\"");
    p.scrambler_enabled = get_or<bool>(j, "scrambler_enabled", true, path);
    return p;
}

VhoScenario scenario_from_json(const json& j, const std::string& path) {
    VhoScenario sc;
    if (!j.contains("networks") || !j.at("networks").is_array())
        throw config_error(path + ".networks: expected array");
    for (size_t i = 0; i < j.at("networks").size(); ++i) {
        const auto& nj = j.at("networks")[i];
        const std::string npath = path + ".networks[" + std::to_string(i) + "]";
        NetworkSchedule net;
        net.network_id = get_or<std::string>(nj, "network_id", "", npath);
        if (net.network_id.empty())
            throw config_error(npath + ".network_id: required");
        net.rat_label = get_or<std::string>(nj, "rat_label", "WLAN", npath);
        if (!nj.contains("schedule") || !nj.at("schedule").is_object())
            throw config_error(npath + ".schedule: expected object of step -> impairments");
        for (const auto& [step_str, imp] : nj.at("schedule").items())
            net.schedule[std::stoi(step_str)] =
                impairments_from_json(imp, npath + ".schedule." + step_str);
        sc.networks.push_back(std::move(net));
    }
    sc.initial_serving = get_or<std::string>(j, "initial_serving", "", path);
    sc.n_steps = get_or<int>(j, "n_steps", 0, path);
    if (sc.n_steps < 1) throw config_error(path + ".n_steps: must be >= 1");
    sc.decode_for_ber = get_or<bool>(j, "decode_for_ber", false, path);
    if (j.contains("frame")) sc.frame = frame_from_json(j.at("frame"), path + ".frame");
    else {
        sc.frame.payload_bits = 240;
        sc.frame.nav_us = 100;
    }
    sc.scheme = scheme_from_name(get_or<std::string>(j, "scheme", "bpsk", path));
    return sc;
}

VhoPolicy policy_from_json(const json& j, const std::string& path) {
    VhoPolicy p;
    const std::string metric = get_or<std::string>(j, "trigger_metric", "evm", path);
    if (metric == "evm")
        p.trigger_metric = TriggerMetric::Evm;
    else if (metric == "snr")
        p.trigger_metric = TriggerMetric::Snr;
    else if (metric == "ber")
        p.trigger_metric = TriggerMetric::Ber;
    else
        throw config_error(path + ".trigger_metric: unknown metric '" + metric + "'");
    p.serving_degrade_threshold = get_or<double>(j, "serving_degrade_threshold", 0.50, path);
    p.candidate_margin = get_or<double>(j, "candidate_margin", 0.10, path);
    p.dwell_count = get_or<int>(j, "dwell_count", 2, path);
    if (p.dwell_count < 1) throw config_error(path + ".dwell_count: must be >= 1");
    return p;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.command = get_or<std::string>(j, "command", "", "config");
    static const std::vector<std::string> kCommands = {"single", "sweep_nav", "sweep_snr",
                                                       "vho", "compare_triggers"};
    if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
        throw config_error("config.command: must be one of single, sweep_nav, sweep_snr, "
                           "vho, compare_triggers");
    cfg.seed = get_or<uint64_t>(j, "seed", 1, "config");
    cfg.n_frames = get_or<int>(j, "n_frames", 20, "config");
    if (cfg.n_frames < 1) throw config_error("config.n_frames: must be >= 1");
    cfg.n_symbols = get_or<int>(j, "n_symbols", 100, "config");
    cfg.scheme = scheme_from_name(get_or<std::string>(j, "scheme", "bpsk", "config"));
    if (j.contains("phy")) cfg.phy = phy_from_json(j.at("phy"), "config.phy");
    if (j.contains("frame")) cfg.frame = frame_from_json(j.at("frame"), "config.frame");
    if (j.contains("impairments"))
        cfg.impairments = impairments_from_json(j.at("impairments"), "config.impairments");
    if (j.contains("analyzer"))
        cfg.analyzer = analyzer_from_json(j.at("analyzer"), "config.analyzer");
    cfg.compare_tracking = get_or<bool>(j, "compare_tracking", false, "config");
    if (j.contains("frame_types")) {
        for (const auto& t : j.at("frame_types"))
            cfg.frame_types.push_back(mgmt_frame_from_name(t.get<std::string>()));
    }
    if (cfg.frame_types.empty()) cfg.frame_types.push_back(cfg.frame.frame_type);
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        cfg.sweep.start = get_or<double>(s, "start", 0.0, "config.sweep");
        cfg.sweep.stop = get_or<double>(s, "stop", 0.0, "config.sweep");
        cfg.sweep.step = get_or<double>(s, "step", 1.0, "config.sweep");
    }
    if (cfg.command == "vho" || cfg.command == "compare_triggers") {
        if (!j.contains("scenario"))
            throw config_error("config.scenario: required for vho commands");
        cfg.scenario = scenario_from_json(j.at("scenario"), "config.scenario");
        cfg.scenario.seed = cfg.seed;
    }
    if (j.contains("policy")) cfg.policy = policy_from_json(j.at("policy"), "config.policy");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return config_from_json_text(buf.str());
}

std::string ExperimentConfig::resolved_json() const {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    j["n_frames"] = n_frames;
    j["n_symbols"] = n_symbols;
    j["scheme"] = scheme_name(scheme);
    j["phy"] = {{"code_rate", phy.code_rate == kRateHalf ? "1/2" : "3/4"},
                {"scrambler_enabled", phy.scrambler_enabled},
                {"sample_rate_hz", phy.sample_rate},
                {"data_rate_bps", phy.data_rate_bps(build_constellation(scheme))}};
    j["frame"] = frame_to_json(frame);
    json types = json::array();
    for (auto t : frame_types) types.push_back(mgmt_frame_name(t));
    j["frame_types"] = types;
    j["impairments"] = impairments_to_json(impairments);
    j["analyzer"] = analyzer_to_json(analyzer);
    j["compare_tracking"] = compare_tracking;
    j["sweep"] = {{"start", sweep.start}, {"stop", sweep.stop}, {"step", sweep.step}};
    return j.dump(2);
}

std::string ExperimentConfig::config_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : resolved_json()) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- result table -----------------------------------------------------------

size_t ResultTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw config_error("no such column: " + name);
}

std::string ResultTable::csv() const {
    std::ostringstream os;
    for (size_t i = 0; i < columns.size(); ++i)
        os << (i ? "," : "") << columns[i];
    os << "\r\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\r\n";
    }
    return os.str();
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

// --- simulation passes ------------------------------------------------------

EvmReport simulate_evm(const OfdmParams& params, const ConstellationSpec& spec,
                       const ImpairmentConfig& impairments, const AnalyzerConfig& analyzer,
                       int n_symbols, int n_frames, uint64_t seed) {
    const int ndbps = params.data_bits_per_symbol(spec);
    const ChannelMeta meta{params.data_rate_bps(spec), params.sample_rate};
    std::vector<RxGrid> grids;
    for (int f = 0; f < n_frames; ++f) {
        std::mt19937_64 rng(split_seed(seed, 0x1000 + static_cast<uint64_t>(f)));
        BitVec bits(static_cast<size_t>(n_symbols) * ndbps);
        for (auto& b : bits) b = static_cast<uint8_t>(rng() & 1);
        const BitVec coded = encode_bits(bits, params, spec, 0x5D);
        const TxFrame tx = modulate_frame(coded, params, spec);
        ImpairmentConfig ch = impairments;
        ch.seed = split_seed(seed, 0x2000 + static_cast<uint64_t>(f));
        const CplxVec rx = apply_channel(tx.samples, meta, ch);
        grids.push_back(analyze_one(rx, params, spec, analyzer, &tx.reference_grid,
                                    tx.n_symbols));
    }
    return compute_evm(grids, EvmScope::DataAndPilot);
}

namespace {

struct PointResult {
    EvmReport report;
    int sync_failures = 0;
    bool ok = false;
};

// frame spec sized so the transmit airtime matches the NAV budget
MgmtFrameSpec frame_for_nav(const MgmtFrameSpec& base, uint32_t nav_us,
                            const OfdmParams& params, const ConstellationSpec& spec) {
    const int lp = nav_to_symbol_count(nav_us, params);
    const int ndbps = params.data_bits_per_symbol(spec);
    const long budget = static_cast<long>(lp) * ndbps - 16 - 6 - 24 * 8 - 32;
    MgmtFrameSpec f = base;
    f.nav_us = std::min<uint32_t>(nav_us, 32767);
    const long min_bits = (2 + static_cast<long>(f.ssid.size())) * 8;
    f.payload_bits = static_cast<size_t>(std::max(budget - budget % 8, min_bits));
    return f;
}

PointResult run_nav_point(const ExperimentConfig& cfg, MgmtFrameType type,
                          const AnalyzerConfig& analyzer, uint32_t nav_us,
                          uint64_t seed) {
    const ConstellationSpec spec = build_constellation(cfg.scheme);
    const int lp = nav_to_symbol_count(nav_us, cfg.phy);
    const int ndbps = cfg.phy.data_bits_per_symbol(spec);

    MgmtFrameSpec fspec = frame_for_nav(cfg.frame, nav_us, cfg.phy, spec);
    fspec.frame_type = type;
    const BitVec frame_bits = build_mgmt_frame(fspec);
    BitVec data_bits(16, 0);  // SERVICE
    data_bits.insert(data_bits.end(), frame_bits.begin(), frame_bits.end());
    data_bits.resize(static_cast<size_t>(lp) * ndbps, 0);  // tail + pad

    const BitVec coded = encode_bits(data_bits, cfg.phy, spec, 0x5D);
    const TxFrame tx = modulate_frame(coded, cfg.phy, spec);
    const ChannelMeta meta{cfg.phy.data_rate_bps(spec), cfg.phy.sample_rate};

    PointResult pr;
    std::vector<RxGrid> grids;
    for (int f = 0; f < cfg.n_frames; ++f) {
        ImpairmentConfig ch = cfg.impairments;
        ch.seed = split_seed(seed, 0x3000 + static_cast<uint64_t>(f));
        const CplxVec rx = apply_channel(tx.samples, meta, ch);
        try {
            grids.push_back(analyze_one(rx, cfg.phy, spec, analyzer, &tx.reference_grid,
                                        tx.n_symbols));
        } catch (const sync_failure&) {
            ++pr.sync_failures;
        }
    }
    if (!grids.empty()) {
        pr.report = compute_evm(grids, EvmScope::DataAndPilot);
        pr.ok = true;
    }
    return pr;
}

std::vector<std::string> report_cells(const PointResult& pr) {
    std::vector<std::string> cells;
    if (pr.ok) {
        const EvmReport& r = pr.report;
        cells = {std::to_string(r.n_frames), fmt(r.evm_rms), fmt(r.evm_db),
                 fmt(r.evm_pilot), fmt(r.evm_pilot_db), fmt(r.freq_err_hz)};
        for (double v : r.per_subcarrier_evm) cells.push_back(fmt(v));
    } else {
        cells.assign(6 + ofdm::kNumSubcarriers, "");
    }
    cells.push_back(std::to_string(pr.sync_failures));
    return cells;
}

void append_report_columns(std::vector<std::string>& cols) {
    cols.insert(cols.end(), {"frame_count", "evm_rms", "evm_db", "evm_pilot",
                             "evm_pilot_db", "freq_err_hz"});
    for (int l = 0; l < ofdm::kNumSubcarriers; ++l)
        cols.push_back("evm_sc" + std::to_string(l));
    cols.push_back("sync_failures");
}

ResultTable run_sweep(const ExperimentConfig& cfg, bool nav_sweep, int parallel) {
    ResultTable table;
    table.columns = {"command", "config_hash", "frame_type", "tracking",
                     nav_sweep ? "nav_us" : "snr_db", "ebn0_db"};
    append_report_columns(table.columns);

    const ConstellationSpec spec = build_constellation(cfg.scheme);
    const std::string hash = cfg.config_hash();

    std::vector<AnalyzerConfig> modes;
    if (cfg.compare_tracking) {
        AnalyzerConfig on = cfg.analyzer, off = cfg.analyzer;
        on.tracking = Tracking::PilotPhaseAmplitude;
        off.tracking = Tracking::Off;
        modes = {on, off};
    } else {
        modes = {cfg.analyzer};
    }

    struct Job {
        MgmtFrameType type;
        AnalyzerConfig analyzer;
        double value;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    const auto points = cfg.sweep.points();
    for (MgmtFrameType type : cfg.frame_types)
        for (const auto& analyzer : modes)
            for (size_t p = 0; p < points.size(); ++p)
                // paired tracking runs share the per-point seed
                jobs.push_back({type, analyzer, points[p],
                                split_seed(cfg.seed, 0x9000 + p)});

    auto run_job = [&](const Job& job) -> std::pair<PointResult, double> {
        if (nav_sweep) {
            return {run_nav_point(cfg, job.type, job.analyzer,
                                  static_cast<uint32_t>(job.value), job.seed),
                    cfg.impairments.noise_enabled() ? cfg.impairments.ebn0_db
                                                    : std::numeric_limits<double>::infinity()};
        }
        ImpairmentConfig imp = cfg.impairments;
        imp.ebn0_db = ebn0_db_for_subcarrier_snr_db(job.value, cfg.phy, spec);
        PointResult pr;
        try {
            pr.report = simulate_evm(cfg.phy, spec, imp, job.analyzer, cfg.n_symbols,
                                     cfg.n_frames, job.seed);
            pr.ok = true;
        } catch (const sync_failure&) {
            pr.sync_failures = cfg.n_frames;
        }
        return {pr, imp.ebn0_db};
    };

    std::vector<std::pair<PointResult, double>> results(jobs.size());
    if (parallel > 1) {
        std::vector<std::future<void>> futures;
        std::atomic<size_t> next{0};
        for (int t = 0; t < parallel; ++t)
            futures.push_back(std::async(std::launch::async, [&] {
                for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
                    results[i] = run_job(jobs[i]);
            }));
        for (auto& f : futures) f.get();
    } else {
        for (size_t i = 0; i < jobs.size(); ++i) results[i] = run_job(jobs[i]);
    }

    for (size_t i = 0; i < jobs.size(); ++i) {
        std::vector<std::string> row = {cfg.command, hash, mgmt_frame_name(jobs[i].type),
                                        tracking_name(jobs[i].analyzer.tracking),
                                        fmt(jobs[i].value), fmt(results[i].second)};
        const auto cells = report_cells(results[i].first);
        row.insert(row.end(), cells.begin(), cells.end());
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable run_single(const ExperimentConfig& cfg) {
    ResultTable table;
    table.columns = {"command", "config_hash", "frame_type", "tracking", "ebn0_db"};
    append_report_columns(table.columns);
    const ConstellationSpec spec = build_constellation(cfg.scheme);
    PointResult pr;
    try {
        pr.report = simulate_evm(cfg.phy, spec, cfg.impairments, cfg.analyzer,
                                 cfg.n_symbols, cfg.n_frames, cfg.seed);
        pr.ok = true;
    } catch (const sync_failure&) {
        pr.sync_failures = cfg.n_frames;
    }
    std::vector<std::string> row = {
        cfg.command, cfg.config_hash(), mgmt_frame_name(cfg.frame.frame_type),
        tracking_name(cfg.analyzer.tracking),
        cfg.impairments.noise_enabled() ? fmt(cfg.impairments.ebn0_db) : "inf"};
    const auto cells = report_cells(pr);
    row.insert(row.end(), cells.begin(), cells.end());
    table.rows.push_back(std::move(row));
    return table;
}

ResultTable run_vho(const ExperimentConfig& cfg) {
    const ScenarioTrace trace = run_scenario(cfg.scenario, cfg.policy);
    ResultTable table;
    table.columns = {"command", "config_hash", "step", "network_id", "rat_label",
                     "evm_rms", "snr_db", "ber", "measurement_valid", "verdict",
                     "target", "serving_after"};
    const std::string hash = cfg.config_hash();
    for (const auto& row : trace.steps)
        for (const auto& s : row.snapshots)
            table.rows.push_back({cfg.command, hash, std::to_string(row.step),
                                  s.network_id, s.rat_label, fmt(s.evm_rms),
                                  fmt(s.snr_db), fmt(s.ber),
                                  s.measurement_valid ? "1" : "0",
                                  row.decision.is_handover() ? "handover" : "stay",
                                  row.decision.target, row.serving_after});
    return table;
}

ResultTable run_compare(const ExperimentConfig& cfg) {
    std::vector<VhoPolicy> policies(3, cfg.policy);
    policies[0].trigger_metric = TriggerMetric::Evm;
    policies[1].trigger_metric = TriggerMetric::Snr;
    // SNR thresholds live in dB; map the EVM threshold through SNR = 1/EVM^2
    policies[1].serving_degrade_threshold = linear_to_db(numerics::evm_snr_convert(
        cfg.policy.serving_degrade_threshold, numerics::ConvertDirection::EvmToSnr));
    policies[1].candidate_margin = 3.0;
    policies[2].trigger_metric = TriggerMetric::Ber;
    policies[2].serving_degrade_threshold = numerics::ber_from_evm(
        build_constellation(cfg.scenario.scheme), cfg.policy.serving_degrade_threshold);
    policies[2].candidate_margin = policies[2].serving_degrade_threshold * 0.5;

    const auto rows = compare_triggers(cfg.scenario, policies);
    ResultTable table;
    table.columns = {"command", "config_hash", "metric", "handover_step",
                     "measurements_to_decision", "demodulation_required"};
    const std::string hash = cfg.config_hash();
    for (const auto& r : rows)
        table.rows.push_back({cfg.command, hash, trigger_metric_name(r.metric),
                              std::to_string(r.handover_step),
                              std::to_string(r.measurements_to_decision),
                              r.demodulation_required ? "1" : "0"});
    return table;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg, int parallel) {
    if (cfg.command == "single") return run_single(cfg);
    if (cfg.command == "sweep_nav") return run_sweep(cfg, true, parallel);
    if (cfg.command == "sweep_snr") return run_sweep(cfg, false, parallel);
    if (cfg.command == "vho") return run_vho(cfg);
    if (cfg.command == "compare_triggers") return run_compare(cfg);
    throw config_error("unknown command: " + cfg.command);
}

// --- SVG plotting -----------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};

}  // namespace

std::string emit_plot(const ResultTable& table, const PlotSpec& spec) {
    if (table.rows.empty()) throw config_error("emit_plot: empty table");
    if (spec.x_col.empty() || spec.y_col.empty())
        throw config_error("emit_plot: empty series selection");
    const size_t xi = table.column_index(spec.x_col);
    const size_t yi = table.column_index(spec.y_col);
    std::vector<size_t> gi;
    for (const auto& g : spec.group_cols) gi.push_back(table.column_index(g));

    struct Series {
        std::string label;
        std::vector<std::pair<double, double>> pts;
    };
    std::vector<Series> series;
    for (const auto& row : table.rows) {
        if (row[xi].empty() || row[yi].empty()) continue;  // flagged rows
        std::string key;
        for (size_t g : gi) key += (key.empty() ? "" : " ") + row[g];
        if (key.empty()) key = spec.y_col;
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const Series& s) { return s.label == key; });
        if (it == series.end()) {
            series.push_back({key, {}});
            it = std::prev(series.end());
        }
        it->pts.emplace_back(std::stod(row[xi]), std::stod(row[yi]));
    }
    if (series.empty()) throw config_error("emit_plot: no plottable rows");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) { xmax += 1.0; xmin -= 1.0; }
    if (ymax == ymin) { ymax += 1.0; ymin -= 1.0; }

    const double w = 720, h = 480, ml = 70, mr = 160, mt = 30, mb = 55;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
       << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    os << "<g stroke=\"black\" fill=\"none\"><path d=\"M" << ml << " " << mt << " L" << ml
       << " " << (h - mb) << " L" << (w - mr) << " " << (h - mb) << "\"/></g>\n";

    for (int t = 0; t <= 5; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 5.0;
        const double yv = ymin + (ymax - ymin) * t / 5.0;
        os << "<line x1=\"" << px(xv) << "\" y1=\"" << (h - mb) << "\" x2=\"" << px(xv)
           << "\" y2=\"" << (h - mb + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px(xv) << "\" y=\"" << (h - mb + 20)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        os << "<line x1=\"" << (ml - 5) << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
           << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << (ml - 8) << "\" y=\"" << (py(yv) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    os << "<text x=\"" << (ml + (w - ml - mr) / 2) << "\" y=\"" << (h - 12)
       << "\" font-size=\"13\" text-anchor=\"middle\">"
       << (spec.x_label.empty() ? spec.x_col : spec.x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + (h - mt - mb) / 2)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << (mt + (h - mt - mb) / 2) << ")\">"
       << (spec.y_label.empty() ? spec.y_col : spec.y_label) << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        auto pts = series[si].pts;
        std::sort(pts.begin(), pts.end());
        const char* color = kPalette[si % std::size(kPalette)];
        // tracking-off series drawn dashed so tracked/untracked stay distinct
        const bool dashed = series[si].label.find("off") != std::string::npos;
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
        if (dashed) os << " stroke-dasharray=\"6 4\"";
        os << " points=\"";
        for (const auto& [x, y] : pts) os << px(x) << "," << py(y) << " ";
        os << "\"/>\n";
        const double ly = mt + 18 + 18 * static_cast<double>(si);
        os << "<line x1=\"" << (w - mr + 10) << "\" y1=\"" << ly << "\" x2=\""
           << (w - mr + 40) << "\" y2=\"" << ly << "\" stroke=\"" << color << "\"";
        if (dashed) os << " stroke-dasharray=\"6 4\"";
        os << "/>\n<text x=\"" << (w - mr + 46) << "\" y=\"" << (ly + 4)
           << "\" font-size=\"11\">" << series[si].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace evmkit
