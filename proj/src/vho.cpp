#include "evmkit/vho.hpp"

#include <algorithm>
#include <sstream>

#include "evmkit/numerics.hpp"
#include "evmkit/vsa.hpp"

namespace evmkit {

const char* trigger_metric_name(TriggerMetric m) {
    switch (m) {
        case TriggerMetric::Evm: return "evm";
        case TriggerMetric::Snr: return "snr";
        case TriggerMetric::Ber: return "ber";
    }
    return "?";
}

double metric_value(const NetworkSnapshot& s, TriggerMetric m) {
    switch (m) {
        case TriggerMetric::Evm: return s.evm_rms;
        case TriggerMetric::Snr: return s.snr_db;
        case TriggerMetric::Ber: return s.ber;
    }
    return 0.0;
}

bool metric_violates(double value, TriggerMetric m, double threshold) {
    // SNR degrades downward, EVM/BER upward
    return m == TriggerMetric::Snr ? value < threshold : value > threshold;
}

bool metric_better(double value, TriggerMetric m, double reference) {
    return m == TriggerMetric::Snr ? value > reference : value < reference;
}

VhoEngineState observe(const VhoEngineState& state, const NetworkSnapshot& snapshot,
                       const VhoPolicy& policy) {
    auto it = state.history.find(snapshot.network_id);
    if (it != state.history.end() && !it->second.empty() &&
        snapshot.timestamp <= it->second.back().timestamp)
        throw domain_error("observe: stale timestamp for network " + snapshot.network_id);

    VhoEngineState next = state;
    next.history[snapshot.network_id].push_back(snapshot);
    if (snapshot.measurement_valid) {
        int& count = next.consecutive_violations[snapshot.network_id];
        if (metric_violates(metric_value(snapshot, policy.trigger_metric),
                            policy.trigger_metric, policy.serving_degrade_threshold))
            ++count;
        else
            count = 0;
    }
    return next;
}

namespace {

const NetworkSnapshot* latest_valid(const VhoEngineState& state, const std::string& id) {
    auto it = state.history.find(id);
    if (it == state.history.end()) return nullptr;
    for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit)
        if (rit->measurement_valid) return &*rit;
    return nullptr;
}

}  // namespace

VhoDecision decide(const VhoEngineState& state, const VhoPolicy& policy) {
    if (state.serving.empty())
        throw config_error("decide: no serving network designated");

    VhoDecision decision;
    const NetworkSnapshot* serving = latest_valid(state, state.serving);
    decision.at_timestamp = serving ? serving->timestamp : 0;

    std::ostringstream reason;
    const TriggerMetric m = policy.trigger_metric;
    auto viol_it = state.consecutive_violations.find(state.serving);
    const int violations =
        viol_it == state.consecutive_violations.end() ? 0 : viol_it->second;
    reason << "metric=" << trigger_metric_name(m) << " serving=" << state.serving
           << " value=" << (serving ? metric_value(*serving, m) : 0.0)
           << " threshold=" << policy.serving_degrade_threshold
           << " consecutive_violations=" << violations << "/" << policy.dwell_count;

    if (violations < policy.dwell_count) {
        decision.reason = reason.str() + " -> stay";
        return decision;
    }

    // candidate must clear the threshold by the hysteresis margin
    const double bar = m == TriggerMetric::Snr
                           ? policy.serving_degrade_threshold + policy.candidate_margin
                           : policy.serving_degrade_threshold - policy.candidate_margin;
    const NetworkSnapshot* best = nullptr;
    for (const auto& [id, snaps] : state.history) {
        if (id == state.serving) continue;
        const NetworkSnapshot* latest = latest_valid(state, id);
        if (!latest) continue;
        const double v = metric_value(*latest, m);
        if (!metric_better(v, m, bar)) continue;
        if (!best || metric_better(v, m, metric_value(*best, m)))
            best = latest;  // ties keep the earlier (lowest) network_id
    }
    if (!best) {
        decision.reason = reason.str() + " -> stay (no candidate clears margin)";
        return decision;
    }

    decision.verdict = VhoDecision::Verdict::Handover;
    decision.target = best->network_id;
    reason << " candidate=" << best->network_id << " value=" << metric_value(*best, m)
           << " bar=" << bar << " -> handover";
    decision.reason = reason.str();
    return decision;
}

namespace {

const ImpairmentConfig& schedule_at(const NetworkSchedule& net, int step) {
    auto it = net.schedule.upper_bound(step);
    if (it == net.schedule.begin())
        throw config_error("empty schedule for network " + net.network_id);
    return std::prev(it)->second;
}

NetworkSnapshot simulate_link(const VhoScenario& scenario, const NetworkSchedule& net,
                              const ImpairmentConfig& impair, int step,
                              uint64_t link_seed) {
    const ConstellationSpec spec = build_constellation(scenario.scheme);
    const OfdmParams& params = scenario.params;
    const uint8_t scramble_seed = 0x5D;

    const BitVec frame_bits = build_mgmt_frame(scenario.frame);
    const BitVec coded = encode_bits(frame_bits, params, spec, scramble_seed);
    const TxFrame tx = modulate_frame(coded, params, spec);

    ImpairmentConfig cfg = impair;
    cfg.seed = link_seed;
    ChannelMeta meta{params.data_rate_bps(spec), params.sample_rate};
    const CplxVec rx = apply_channel(tx.samples, meta, cfg);

    NetworkSnapshot snap;
    snap.network_id = net.network_id;
    snap.rat_label = net.rat_label;
    snap.timestamp = step;
    try {
        AnalyzerConfig acfg;
        const RxGrid grid = analyze_one(rx, params, spec, acfg, &tx.reference_grid,
                                        tx.n_symbols);
        const RxGrid grids[1] = {grid};
        const EvmReport rep = compute_evm(grids, EvmScope::DataOnly);
        snap.evm_rms = rep.evm_rms;
        snap.snr_db = linear_to_db(
            numerics::evm_snr_convert(std::max(rep.evm_rms, 1e-6),
                                      numerics::ConvertDirection::EvmToSnr));
        if (scenario.decode_for_ber) {
            // hard-demap the measured grid and run the full decode path
            BitVec hard;
            hard.reserve(coded.size());
            for (size_t j = 0; j < grid.measured.size(); ++j)
                for (int l = 0; l < ofdm::kNumSubcarriers; ++l) {
                    if (ofdm::is_pilot(l)) continue;
                    const int label = demap_nearest(grid.measured[j][l], spec).label;
                    for (int b = spec.bits_per_symbol - 1; b >= 0; --b)
                        hard.push_back(static_cast<uint8_t>((label >> b) & 1));
                }
            const BitVec decoded =
                decode_bits(hard, params, spec, scramble_seed, frame_bits.size());
            snap.ber = measure_ber(decoded, frame_bits).ber;
        } else {
            snap.ber = numerics::ber_from_evm(spec, std::max(snap.evm_rms, 1e-6));
        }
    } catch (const sync_failure&) {
        snap.measurement_valid = false;
        snap.evm_rms = 1.0;
        snap.snr_db = 0.0;
        snap.ber = 0.5;
    }
    return snap;
}

}  // namespace

ScenarioTrace run_scenario(const VhoScenario& scenario, const VhoPolicy& policy) {
    if (scenario.networks.size() < 2)
        throw config_error("run_scenario: need at least two networks");
    if (scenario.n_steps < 1) throw config_error("run_scenario: empty schedule");
    for (const auto& net : scenario.networks)
        if (net.schedule.empty())
            throw config_error("run_scenario: empty schedule for " + net.network_id);

    VhoEngineState state;
    state.serving = scenario.initial_serving.empty() ? scenario.networks[0].network_id
                                                     : scenario.initial_serving;

    // snapshots join in network_id order regardless of config order
    std::vector<const NetworkSchedule*> nets;
    for (const auto& net : scenario.networks) nets.push_back(&net);
    std::sort(nets.begin(), nets.end(), [](const auto* a, const auto* b) {
        return a->network_id < b->network_id;
    });

    ScenarioTrace trace;
    for (int step = 0; step < scenario.n_steps; ++step) {
        ScenarioStep row;
        row.step = step;
        for (size_t n = 0; n < nets.size(); ++n) {
            const auto& net = *nets[n];
            const uint64_t link_seed =
                split_seed(scenario.seed, static_cast<uint64_t>(step) * 1000 + n);
            NetworkSnapshot snap =
                simulate_link(scenario, net, schedule_at(net, step), step, link_seed);
            state = observe(state, snap, policy);
            row.snapshots.push_back(std::move(snap));
        }
        row.decision = decide(state, policy);
        if (row.decision.is_handover()) {
            trace.handover_steps.push_back(step);
            state.serving = row.decision.target;
            state.consecutive_violations.clear();
        }
        row.serving_after = state.serving;
        trace.steps.push_back(std::move(row));
    }
    return trace;
}

std::string ScenarioTrace::csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "step,network_id,rat_label,evm_rms,snr_db,ber,measurement_valid,verdict,"
          "target,serving_after\n";
    for (const auto& row : steps)
        for (const auto& s : row.snapshots) {
            os << row.step << ',' << s.network_id << ',' << s.rat_label << ','
               << s.evm_rms << ',' << s.snr_db << ',' << s.ber << ','
               << (s.measurement_valid ? 1 : 0) << ','
               << (row.decision.is_handover() ? "handover" : "stay") << ','
               << row.decision.target << ',' << row.serving_after << '\n';
        }
    return os.str();
}

std::vector<TriggerComparisonRow> compare_triggers(const VhoScenario& scenario,
                                                   std::span<const VhoPolicy> policies) {
    std::vector<TriggerComparisonRow> rows;
    for (const auto& policy : policies) {
        VhoScenario sc = scenario;
        TriggerComparisonRow row;
        row.metric = policy.trigger_metric;
        row.demodulation_required = policy.trigger_metric == TriggerMetric::Ber;
        sc.decode_for_ber = row.demodulation_required;
        const ScenarioTrace trace = run_scenario(sc, policy);
        if (!trace.handover_steps.empty()) {
            row.handover_step = trace.handover_steps.front();
            row.measurements_to_decision =
                (row.handover_step + 1) * static_cast<int>(scenario.networks.size());
        } else {
            row.measurements_to_decision =
                scenario.n_steps * static_cast<int>(scenario.networks.size());
        }
        rows.push_back(row);
    }
    return rows;
}

std::string comparison_csv(std::span<const TriggerComparisonRow> rows) {
    std::ostringstream os;
    os << "metric,handover_step,measurements_to_decision,demodulation_required\n";
    for (const auto& r : rows)
        os << trigger_metric_name(r.metric) << ',' << r.handover_step << ','
           << r.measurements_to_decision << ',' << (r.demodulation_required ? 1 : 0)
           << '\n';
    return os.str();
}

}  // namespace evmkit
