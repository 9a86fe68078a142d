#include "simicd/therapy.hpp"

#include <stdexcept>

namespace simicd {

const char* therapy_kind_name(TherapyKind k) {
    switch (k) {
        case TherapyKind::ATP: return "ATP";
        case TherapyKind::QCATP: return "QCATP";
        case TherapyKind::Shock: return "Shock";
        case TherapyKind::Inhibit: return "Inhibit";
    }
    return "?";
}

const char* atp_scheme_name(AtpScheme s) {
    switch (s) {
        case AtpScheme::Burst: return "burst";
        case AtpScheme::Ramp: return "ramp";
        case AtpScheme::QC: return "qc";
    }
    return "?";
}

void AtpZoneParams::validate() const {
    if (!(pulse_interval_pct > 0.0 && pulse_interval_pct <= 100.0))
        throw std::invalid_argument("AtpZoneParams: pulse_interval_pct must be in (0,100]");
    if (!(coupling_interval_pct > 0.0 && coupling_interval_pct <= 100.0))
        throw std::invalid_argument("AtpZoneParams: coupling_interval_pct must be in (0,100]");
    if (n_pulses < 1) throw std::invalid_argument("AtpZoneParams: n_pulses must be >= 1");
    if (ramp_decrement_ms < 0.0)
        throw std::invalid_argument("AtpZoneParams: ramp_decrement_ms must be >= 0");
    if (!(min_interval_ms > 0.0))
        throw std::invalid_argument("AtpZoneParams: min_interval_ms must be > 0");
}

std::pair<TherapyDecision, TherapyCounters> prescribe(ZoneId zone, const DetectionWindow& window,
                                                      const TherapyCounters& counters,
                                                      const DetectionParams& p) {
    TherapyDecision d;
    d.zone = zone;
    TherapyCounters next = counters;

    const double avg = window.avg_last4();
    const double v_time = window.last_beat_t_ms();

    if (zone == ZoneId::VF1 && counters.count(zone) < counters.max(zone)) {
        d.kind = TherapyKind::QCATP;
        d.avg_vperiod_ms = avg;
        d.v_time_ms = v_time;
        next.tcount[static_cast<int>(zone)] += 1;
    } else if ((zone == ZoneId::VT || zone == ZoneId::VT1) &&
               counters.count(zone) < counters.max(zone)) {
        int corr_count = 0;
        for (double s : window.vtcs())
            if (s > p.vtc_threshold) ++corr_count;
        if (!counters.initial || corr_count <= p.corr_count_max) {
            d.kind = TherapyKind::ATP;
            d.avg_vperiod_ms = avg;
            d.v_time_ms = v_time;
            next.tcount[static_cast<int>(zone)] += 1;
        } else {
            d.kind = TherapyKind::Inhibit;
        }
    } else {
        d.kind = TherapyKind::Shock;
    }
    return {d, next};
}

AtpScheme select_scheme(ZoneId zone, int tcount_before, const TherapyCounters& counters) {
    if (tcount_before >= counters.max(zone))
        throw std::logic_error("select_scheme: attempts exhausted, prescription should be Shock");
    switch (zone) {
        case ZoneId::VT:
        case ZoneId::VT1:
            return tcount_before == 0 ? AtpScheme::Burst : AtpScheme::Ramp;
        case ZoneId::VF1:
            return AtpScheme::QC;
        case ZoneId::VF:
            break;
    }
    throw std::logic_error("select_scheme: no ATP scheme in the VF zone");
}

PulseSchedule schedule_atp(AtpScheme scheme, const TherapyDecision& decision,
                           const AtpZoneParams& p) {
    p.validate();
    const double avg = decision.avg_vperiod_ms;
    if (!(avg > 0.0)) throw std::invalid_argument("schedule_atp: avg_vperiod must be > 0");

    const double coupling = p.coupling_interval_pct / 100.0 * avg;
    const double interval0 = p.pulse_interval_pct / 100.0 * avg;

    PulseSchedule sched;
    sched.pulse_times_ms.reserve(static_cast<std::size_t>(p.n_pulses));
    double t = decision.v_time_ms + coupling;
    sched.pulse_times_ms.push_back(t);
    for (int k = 1; k < p.n_pulses; ++k) {
        double gap = interval0;
        if (scheme == AtpScheme::Ramp)
            gap = std::max(interval0 - static_cast<double>(k) * p.ramp_decrement_ms,
                           p.min_interval_ms);
        t += gap;
        sched.pulse_times_ms.push_back(t);
    }
    return sched;
}

ShockSpec schedule_shock(double t_now_ms, const ShockParams& p) {
    ShockSpec spec;
    spec.onset_ms = t_now_ms + p.charge_delay_ms;
    spec.duration_ms = p.duration_ms;
    spec.amplitude = p.amplitude;
    return spec;
}

}  // namespace simicd
