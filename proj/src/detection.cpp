#include "simicd/detection.hpp"

#include <cstring>
#include <stdexcept>

namespace simicd {

const char* zone_name(ZoneId z) {
    switch (z) {
        case ZoneId::VT1: return "VT1";
        case ZoneId::VT: return "VT";
        case ZoneId::VF1: return "VF1";
        case ZoneId::VF: return "VF";
    }
    return "?";
}

std::optional<ZoneId> zone_from_name(const char* name) {
    for (int z = 0; z < kNumZones; ++z)
        if (std::strcmp(name, zone_name(static_cast<ZoneId>(z))) == 0)
            return static_cast<ZoneId>(z);
    return std::nullopt;
}

void DetectionParams::validate() const {
    if (!(th_ms[3] < th_ms[2] && th_ms[2] < th_ms[1] && th_ms[1] < th_ms[0]))
        throw std::invalid_argument("DetectionParams: need th_VF < th_VF1 < th_VT < th_VT1");
    for (int z = 0; z < kNumZones; ++z) {
        if (!(th_ms[z] > 0.0) || !(dur_ms[z] > 0.0) || !(redetect_dur_ms[z] > 0.0))
            throw std::invalid_argument("DetectionParams: thresholds and durations must be > 0");
    }
    if (corr_count_max < 0 || corr_count_max > 10)
        throw std::invalid_argument("DetectionParams: corr_count_max out of range");
}

void DetectionWindow::push(double period_ms, double vtc, double beat_t_ms) {
    if (!(period_ms > 0.0))
        throw std::invalid_argument("DetectionWindow: period must be > 0");
    for (std::size_t i = 0; i + 1 < kSize; ++i) {
        periods_[i] = periods_[i + 1];
        vtcs_[i] = vtcs_[i + 1];
    }
    periods_[kSize - 1] = period_ms;
    vtcs_[kSize - 1] = vtc;
    last_beat_t_ms_ = beat_t_ms;
    if (count_ < kSize) ++count_;
}

void DetectionWindow::clear() {
    periods_.fill(0.0);
    vtcs_.fill(0.0);
    last_beat_t_ms_ = 0.0;
    count_ = 0;
}

double DetectionWindow::avg_last4() const {
    return (periods_[6] + periods_[7] + periods_[8] + periods_[9]) / 4.0;
}

std::pair<ZoneState, bool> update_zone(const ZoneState& state, const DetectionWindow& window,
                                       ZoneId zone, const DetectionParams& p, bool redetect) {
    if (!window.warm()) return {state, false};

    const double th = p.th(zone);
    const double dur = p.dur(zone, redetect);
    const auto& periods = window.periods();

    int fast_count = 0;
    for (double v : periods)
        if (v < th) ++fast_count;
    const double last = window.last_period();

    ZoneState next = state;
    if (fast_count >= 8 && last < th) next.in_zone = true;

    // clock gated on the pre-update entry flag: the entry beat itself does
    // not accumulate
    if (state.in_zone) {
        if (fast_count >= 6 && last < th) {
            next.t_zone_ms = state.t_zone_ms + last;
        } else {
            next.in_zone = false;
            next.t_zone_ms = 0.0;
        }
    }

    const bool sustained = next.t_zone_ms >= dur;
    return {next, sustained};
}

DetectorStep step_detector(const std::array<ZoneState, kNumZones>& zones,
                           const DetectionWindow& window, const DetectionParams& p,
                           bool redetect) {
    DetectorStep out;
    out.zones = zones;
    for (int z = 0; z < kNumZones; ++z) {
        auto [next, sustained] = update_zone(zones[z], window, static_cast<ZoneId>(z), p, redetect);
        out.zones[z] = next;
        out.sustained_flags[z] = sustained;
    }
    // highest-severity zone wins ties on the same beat
    for (int z = kNumZones - 1; z >= 0; --z) {
        if (out.sustained_flags[z]) {
            out.sustained_zone = static_cast<ZoneId>(z);
            break;
        }
    }
    return out;
}

}  // namespace simicd
