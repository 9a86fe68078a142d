#include "simicd/icd.hpp"

#include <cmath>

#include "simicd/errors.hpp"

namespace simicd {

void IcdParams::validate() const {
    detection.validate();
    for (const auto& z : atp.zone) z.validate();
    for (int a : max_attempts)
        if (a < 0) throw ConfigError("max_attempts must be non-negative");
    if (post_therapy_blank_ms < 0) throw ConfigError("blanking interval must be non-negative");
    if (termination_slow_beats < 1) throw ConfigError("termination_slow_beats must be positive");
    if (observation_window_ms <= 0) throw ConfigError("observation window must be positive");
    if (max_shocks < 1) throw ConfigError("max_shocks must be positive");
}

IcdLogic::IcdLogic(IcdParams p) : p_(std::move(p)) {
    p_.validate();
    counters_.max_t = p_.max_attempts;
}

TherapyOrder IcdLogic::build_order(const TherapyDecision& decision, int tcount_before,
                                   double t_ms) {
    TherapyOrder order;
    order.decision = decision;
    if (decision.kind == TherapyKind::Shock) {
        order.shock = schedule_shock(t_ms, p_.shock);
        order.delivery_end_ms = order.shock.onset_ms + order.shock.duration_ms;
    } else {
        order.scheme = select_scheme(decision.zone, tcount_before, counters_);
        order.pulses = schedule_atp(*order.scheme, decision, p_.atp.for_zone(decision.zone));
        order.delivery_end_ms = order.pulses.pulse_times_ms.back() + order.pulses.pulse_duration_ms;
    }
    order.resume_t_ms = order.delivery_end_ms + p_.post_therapy_blank_ms;
    return order;
}

std::optional<TherapyOrder> IcdLogic::on_beat(double t_ms, double vtc, EventLog& log) {
    if (done_ || suspended_at(t_ms)) return std::nullopt;
    if (!have_prev_) {
        have_prev_ = true;
        prev_beat_t_ = t_ms;
        return std::nullopt;
    }
    const double period = t_ms - prev_beat_t_;
    prev_beat_t_ = t_ms;
    window_.push(period, vtc, t_ms);

    if (observing_) {
        if (period >= p_.detection.th(ZoneId::VT1)) {
            if (++consec_slow_ >= p_.termination_slow_beats) {
                terminated_ = true;
                terminated_t_ = t_ms;
                done_ = true;
                log.push_back({t_ms, "termination",
                               {{"slow_beats", consec_slow_}, {"after_therapies", therapies_}}});
                return std::nullopt;
            }
        } else {
            consec_slow_ = 0;
        }
    }

    if (!window_.warm()) return std::nullopt;

    const bool redetect = !counters_.initial;
    auto step = step_detector(zones_, window_, p_.detection, redetect);
    for (int z = 0; z < kNumZones; ++z) {
        if (step.zones[z].in_zone && !zones_[z].in_zone)
            log.push_back({t_ms, "zone_entry", {{"zone", zone_name(static_cast<ZoneId>(z))}}});
        else if (!step.zones[z].in_zone && zones_[z].in_zone)
            log.push_back({t_ms, "zone_exit", {{"zone", zone_name(static_cast<ZoneId>(z))}}});
    }
    zones_ = step.zones;

    if (!step.sustained_zone) {
        sustained_latch_ = false;
        inhibit_latch_ = false;
        return std::nullopt;
    }

    const ZoneId zone = *step.sustained_zone;
    if (!sustained_latch_) {
        sustained_latch_ = true;
        log.push_back({t_ms, "sustained",
                       {{"zone", zone_name(zone)}, {"redetect", redetect}}});
    }

    const int tcount_before = counters_.count(zone);
    auto [decision, next_counters] = prescribe(zone, window_, counters_, p_.detection);

    if (decision.kind == TherapyKind::Inhibit) {
        inhibit_seen_ = true;
        if (!inhibit_latch_) {
            inhibit_latch_ = true;
            log.push_back({t_ms, "therapy",
                           {{"zone", zone_name(zone)}, {"kind", therapy_kind_name(decision.kind)}}});
        }
        return std::nullopt;
    }

    if (decision.kind == TherapyKind::Shock && shocks_ >= p_.max_shocks) {
        exhausted_ = true;
        done_ = true;
        log.push_back({t_ms, "exhausted", {{"zone", zone_name(zone)}, {"shocks", shocks_}}});
        return std::nullopt;
    }

    auto order = build_order(decision, tcount_before, t_ms);
    counters_ = next_counters;
    counters_.initial = false;
    ++therapies_;
    if (decision.kind == TherapyKind::Shock) ++shocks_;

    nlohmann::json payload{{"zone", zone_name(zone)},
                           {"kind", therapy_kind_name(decision.kind)},
                           {"resume_t_ms", order.resume_t_ms}};
    if (order.scheme) {
        payload["scheme"] = atp_scheme_name(*order.scheme);
        payload["n_pulses"] = order.pulses.pulse_times_ms.size();
        payload["avg_vperiod_ms"] = decision.avg_vperiod_ms;
        payload["first_pulse_ms"] = order.pulses.pulse_times_ms.front();
    } else {
        payload["onset_ms"] = order.shock.onset_ms;
    }
    log.push_back({t_ms, "therapy", payload});

    // post-therapy reset: fresh windows, fresh zone clocks, device blind
    // until resume, then watching for termination or re-detection
    window_.clear();
    zones_ = {};
    have_prev_ = false;
    resume_t_ = order.resume_t_ms;
    observing_ = true;
    consec_slow_ = 0;
    sustained_latch_ = false;
    inhibit_latch_ = false;
    return order;
}

bool classify_termination(const std::vector<double>& post_therapy_periods_ms,
                          const IcdParams& p) {
    DetectionWindow window;
    std::array<ZoneState, kNumZones> zones{};
    double elapsed = 0;
    int consec_slow = 0;
    for (double period : post_therapy_periods_ms) {
        elapsed += period;
        if (elapsed > p.observation_window_ms) return false;
        window.push(period, 0.0, elapsed);
        if (period >= p.detection.th(ZoneId::VT1)) {
            if (++consec_slow >= p.termination_slow_beats) return true;
        } else {
            consec_slow = 0;
        }
        if (window.warm()) {
            auto step = step_detector(zones, window, p.detection, /*redetect=*/true);
            zones = step.zones;
            if (step.sustained_zone) return false;
        }
    }
    return false;
}

}  // namespace simicd
