#pragma once

#include <array>
#include <vector>

#include "simicd/detection.hpp"

namespace simicd {

enum class TherapyKind { ATP, QCATP, Shock, Inhibit };
enum class AtpScheme { Burst, Ramp, QC };

const char* therapy_kind_name(TherapyKind k);
const char* atp_scheme_name(AtpScheme s);

/// Attempts used / allowed per zone plus the initial-episode flag. The flag
/// goes false once the first therapy of the episode has been delivered.
struct TherapyCounters {
    std::array<int, kNumZones> tcount = {0, 0, 0, 0};
    std::array<int, kNumZones> max_t = {2, 2, 1, 0};  // VT1, VT, VF1, VF
    bool initial = true;

    int count(ZoneId z) const { return tcount[static_cast<int>(z)]; }
    int max(ZoneId z) const { return max_t[static_cast<int>(z)]; }
};

struct TherapyDecision {
    TherapyKind kind = TherapyKind::Inhibit;
    ZoneId zone = ZoneId::VT1;
    double avg_vperiod_ms = 0.0;  // mean of the last 4 periods; ATP/QCATP only
    double v_time_ms = 0.0;       // absolute time of the last beat; ATP/QCATP only
};

/// Per-zone ATP programming.
struct AtpZoneParams {
    double pulse_interval_pct = 81.0;
    double coupling_interval_pct = 81.0;
    int n_pulses = 8;
    double ramp_decrement_ms = 10.0;
    double min_interval_ms = 220.0;

    void validate() const;
};

struct AtpParams {
    std::array<AtpZoneParams, kNumZones> zone;

    AtpParams() {
        // VF1 runs quick-convert timing at 88% with no ramp
        zone[static_cast<int>(ZoneId::VF1)].pulse_interval_pct = 88.0;
        zone[static_cast<int>(ZoneId::VF1)].coupling_interval_pct = 88.0;
        zone[static_cast<int>(ZoneId::VF1)].ramp_decrement_ms = 0.0;
    }
    const AtpZoneParams& for_zone(ZoneId z) const { return zone[static_cast<int>(z)]; }
    AtpZoneParams& for_zone(ZoneId z) { return zone[static_cast<int>(z)]; }
};

struct PulseSchedule {
    std::vector<double> pulse_times_ms;  // absolute onset times, strictly increasing
    double pulse_duration_ms = 4.0;
    double amplitude = 450.0;
};

struct ShockSpec {
    double onset_ms = 0.0;
    double duration_ms = 10.0;
    double amplitude = 450.0;
};

struct ShockParams {
    double charge_delay_ms = 2000.0;
    double duration_ms = 10.0;
    double amplitude = 450.0;
};

/// Therapy prescription for a zone flagged sustained this beat. VF1 with
/// attempts left gets quick-convert ATP; VT/VT1 with attempts left get ATP
/// unless the initial episode correlates with the NSR template (corrCount
/// over the ten scores above corr_count_max), which inhibits; everything
/// else falls through to shock. Counters advance only on ATP/QCATP.
std::pair<TherapyDecision, TherapyCounters> prescribe(ZoneId zone, const DetectionWindow& window,
                                                      const TherapyCounters& counters,
                                                      const DetectionParams& p);

/// VT/VT1: first attempt burst, second ramp; VF1: quick convert.
/// Attempts past the per-zone maximum are a logic error.
AtpScheme select_scheme(ZoneId zone, int tcount_before, const TherapyCounters& counters);

/// Coupling interval = coupling pct x avg period from the last beat; burst
/// pulses keep a constant interval, ramp intervals shrink by the decrement
/// each pulse, clamped at min_interval_ms.
PulseSchedule schedule_atp(AtpScheme scheme, const TherapyDecision& decision,
                           const AtpZoneParams& p);

ShockSpec schedule_shock(double t_now_ms, const ShockParams& p);

}  // namespace simicd
