#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simicd/checkpoint.hpp"
#include "simicd/events.hpp"
#include "simicd/icd.hpp"
#include "simicd/reentry.hpp"
#include "simicd/scenario.hpp"
#include "simicd/sensing.hpp"

namespace simicd {

/// Unresolved only ever comes out of open-loop replay of a truncated trace;
/// closed-loop runs extend until the episode resolves or fail loudly.
enum class Outcome { NoTherapyNeeded, Inhibited, Terminated, TherapyExhausted, Unresolved };

std::string outcome_label(Outcome o, int therapies);

struct TherapyRecord {
    double t_ms = 0;
    std::string zone, kind, scheme;
    int n_pulses = 0;
    double avg_vperiod_ms = 0;
};

struct EpisodeReport {
    Outcome outcome = Outcome::NoTherapyNeeded;
    int therapies_delivered = 0;
    int shocks_delivered = 0;
    bool inhibited = false;
    double terminated_t_ms = -1;
    std::vector<TherapyRecord> therapies;
    int sensed_beats = 0;
    double mean_bpm = 0;
    int zone_entries = 0;
    double duration_ms = 0;
    std::string final_rhythm;  // "sinus" | "tachycardia" | "quiescent"
    EventLog events;
};

nlohmann::json report_json(const EpisodeReport& r);

/// Mechanical consistency between the outcome fields and the event log;
/// inconsistencies raise SimulationError.
void validate_report(const EpisodeReport& r);

/// Device-originated events (sense/zone/sustained/therapy/termination/
/// exhausted), i.e. the part of the log an open-loop replay must reproduce.
EventLog device_events(const EventLog& log);

/// Everything heavy that is independent of the ICD programming: tuned grid,
/// probe kernels, the NSR morphology template, and (for reentrant episodes)
/// the induced circuit. Sweeps prepare once and run many ICD variants.
struct PreparedScenario {
    Scenario sc;
    TissueGrid grid;
    ProbeKernels probes;
    EgmTrace template_trace;
    NsrTemplate nsr_template;
    std::optional<InductionResult> induction;
};

PreparedScenario prepare_scenario(const Scenario& sc);

struct RunArtifacts {
    EgmTrace trace;
    EpisodeReport report;
    EgmTrace template_trace;
    NsrTemplate nsr_template;
    std::optional<InductionResult> induction;
};

RunArtifacts run_closed_loop(const PreparedScenario& ps);
RunArtifacts run_closed_loop(const Scenario& sc);

/// Replays the recorded trace through sensing + device logic alone (no
/// physics, no therapy execution) and reports the decisions the device
/// would make. A closed-loop run's trace reproduces its device event log.
EpisodeReport replay_open_loop(const EgmTrace& trace, const IcdParams& icd,
                               const NsrTemplate& tpl);

void write_artifacts(const RunArtifacts& art, const Scenario& sc, const std::string& out_dir);

}  // namespace simicd
