#pragma once

#include <map>
#include <optional>
#include <span>

#include "evmkit/channel.hpp"
#include "evmkit/mac_frames.hpp"
#include "evmkit/ofdm.hpp"

namespace evmkit {

enum class TriggerMetric { Evm, Snr, Ber };

const char* trigger_metric_name(TriggerMetric m);

struct NetworkSnapshot {
    std::string network_id;
    std::string rat_label;
    int64_t timestamp = 0;
    double evm_rms = 0.0;
    double snr_db = 0.0;
    double ber = 0.0;
    bool measurement_valid = true;
};

struct VhoPolicy {
    TriggerMetric trigger_metric = TriggerMetric::Evm;
    double serving_degrade_threshold = 0.50;
    double candidate_margin = 0.10;
    int dwell_count = 2;
};

struct VhoDecision {
    enum class Verdict { Stay, Handover };
    Verdict verdict = Verdict::Stay;
    std::string target;  // set on Handover
    int64_t at_timestamp = 0;
    std::string reason;  // metric values and threshold comparisons

    bool is_handover() const { return verdict == Verdict::Handover; }
};

/// Value-semantic engine state; observe() returns an updated copy.
struct VhoEngineState {
    std::string serving;
    std::map<std::string, std::vector<NetworkSnapshot>> history;
    std::map<std::string, int> consecutive_violations;
};

VhoEngineState observe(const VhoEngineState& state, const NetworkSnapshot& snapshot,
                       const VhoPolicy& policy);

VhoDecision decide(const VhoEngineState& state, const VhoPolicy& policy);

double metric_value(const NetworkSnapshot& s, TriggerMetric m);
bool metric_violates(double value, TriggerMetric m, double threshold);
bool metric_better(double value, TriggerMetric m, double reference);

// --- scenario simulation ---

struct NetworkSchedule {
    std::string network_id;
    std::string rat_label = "WLAN";
    // step index -> impairment config; the last entry at or before a step
    // applies (step schedules are deltas over time)
    std::map<int, ImpairmentConfig> schedule;
};

struct VhoScenario {
    std::vector<NetworkSchedule> networks;
    std::string initial_serving;
    int n_steps = 0;
    MgmtFrameSpec frame;
    OfdmParams params;
    Scheme scheme = Scheme::Bpsk;
    bool decode_for_ber = false;  // default: predict BER from EVM
    uint64_t seed = 0;
};

struct ScenarioStep {
    int step = 0;
    std::vector<NetworkSnapshot> snapshots;
    VhoDecision decision;
    std::string serving_after;
};

struct ScenarioTrace {
    std::vector<ScenarioStep> steps;
    std::vector<int> handover_steps;

    std::string csv() const;
};

/// Simulates one management frame per network per step through the
/// modem -> channel -> analyzer chain and runs the trigger engine on the
/// resulting snapshots. Deterministic for a given seed.
ScenarioTrace run_scenario(const VhoScenario& scenario, const VhoPolicy& policy);

struct TriggerComparisonRow {
    TriggerMetric metric;
    int handover_step = -1;  // -1: never triggered
    int measurements_to_decision = 0;
    bool demodulation_required = false;
};

std::vector<TriggerComparisonRow> compare_triggers(const VhoScenario& scenario,
                                                   std::span<const VhoPolicy> policies);

std::string comparison_csv(std::span<const TriggerComparisonRow> rows);

}  // namespace evmkit
