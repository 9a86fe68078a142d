#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "simicd/electrodes.hpp"
#include "simicd/icd.hpp"
#include "simicd/reentry.hpp"
#include "simicd/solver.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

enum class EpisodeKind { Nsr, Focal, Reentrant };

/// Randomized ectopic episode plan; every quantity drawn per episode from
/// the scenario seed.
struct FocalPlan {
    std::string site = "ectopic";  // "ectopic" | "sinus"
    int n_beats_lo = 8, n_beats_hi = 10;
    double cl_lo_ms = 400, cl_hi_ms = 460;
    int n_episodes = 4;
    double gap_lo_ms = 1500, gap_hi_ms = 3000;
    double first_onset_ms = 3000;
};

struct ReentrantPlan {
    // 0.20 slows the strip enough that the lap outlasts the wake; with the
    // patient-2/3 geometry the cycle length lands in the slowest detection
    // zone. Near 1.0 the wavefront catches its own tail and re-entry never
    // forms.
    double isthmus_factor = 0.20;
    std::string direction = "up";  // transit direction through the isthmus
};

/// Per-patient physics constants; patients 2/3 carry shorter APD and slower
/// bulk conduction so their re-entrant circuits land in the tachycardia
/// zones at the calibrated geometry.
struct PhysicsParams {
    double dt_ms = 0.05;
    double cv_target_mm_per_ms = 0.6;
    IonicParams ion;
    double sinus_cl_ms = 800.0;
    double sinus_first_ms = 10.0;
    double stim_duration_ms = 4.0;
    double stim_amplitude = 450.0;
    double segment_ms = 500.0;
    double checkpoint_every_ms = 1000.0;
    double template_ms = 8500.0;
    int nx = 101, ny = 101;
    double dx_mm = 0.5;
};

struct Scenario {
    int patient = 0;
    EpisodeKind kind = EpisodeKind::Nsr;
    FocalPlan focal;
    ReentrantPlan reentrant;
    double duration_ms = 30000;
    std::uint64_t seed = 1;
    IcdParams icd;
    PhysicsParams phys;
    LeadConfig leads;
    ScarSpec scar;
    bool has_scar = false;
    bool plots = false;
    nlohmann::json raw;  // canonical parsed config, basis of the config hash
};

/// Strict parse: schema violations and unknown keys raise ConfigError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

std::uint64_t scenario_hash(const Scenario& sc);

/// Builds the patient sheet and tunes its bulk conductivity to the CV
/// target; scar/isthmus geometry and stimulus sites included.
TissueGrid build_grid(const Scenario& sc);

StimulusSchedule sinus_schedule(const Scenario& sc, const TissueGrid& grid, double until_ms);
StimulusSchedule focal_schedule(const Scenario& sc, const TissueGrid& grid);

/// Induction protocol for the scenario's direction: "up" blocks the top
/// end and fires S1 from the sinus site below; "down" blocks the bottom end
/// and fires S1 from just above the scar.
ReentryProtocol reentry_protocol(const Scenario& sc, const TissueGrid& grid);

/// Deterministic scalar draws on top of mt19937_64 (library distributions
/// are implementation-defined, these are not).
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);  // inclusive bounds
};

}  // namespace simicd
