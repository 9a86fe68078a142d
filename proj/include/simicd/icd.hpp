#pragma once

#include <array>
#include <optional>
#include <vector>

#include "simicd/detection.hpp"
#include "simicd/events.hpp"
#include "simicd/sensing.hpp"
#include "simicd/therapy.hpp"

namespace simicd {

struct IcdParams {
    SensingParams sensing;
    DetectionParams detection;
    AtpParams atp;
    ShockParams shock;
    std::array<int, kNumZones> max_attempts = {2, 2, 1, 0};  // VT1, VT, VF1, VF
    double post_therapy_blank_ms = 250.0;  // device blind after the last pulse
    int termination_slow_beats = 10;
    double observation_window_ms = 10000.0;
    int max_shocks = 1;

    void validate() const;
};

/// A prescription the device wants executed in the tissue. The device is
/// blind from the moment of the decision until resume_t_ms (delivery plus
/// the post-therapy blanking interval).
struct TherapyOrder {
    TherapyDecision decision;
    std::optional<AtpScheme> scheme;  // ATP / QCATP
    PulseSchedule pulses;             // ATP / QCATP
    ShockSpec shock;                  // Shock
    double delivery_end_ms = 0;
    double resume_t_ms = 0;
};

/// Streaming device logic: feed one finalized beat marker at a time, get a
/// therapy order when a sustained zone prescribes one. Owns the rate
/// windows, zone state machines, therapy counters, post-therapy blanking
/// and the termination watch; emits the device event stream as it goes.
class IcdLogic {
  public:
    explicit IcdLogic(IcdParams p);

    /// t_ms is the beat marker, vtc its far-field template correlation.
    std::optional<TherapyOrder> on_beat(double t_ms, double vtc, EventLog& log);

    /// True inside a delivery + blanking window; beats there are discarded.
    bool suspended_at(double t_ms) const { return t_ms < resume_t_; }
    double resume_t_ms() const { return resume_t_; }

    bool done() const { return done_; }
    bool terminated() const { return terminated_; }
    double terminated_t_ms() const { return terminated_t_; }
    bool exhausted() const { return exhausted_; }
    bool inhibit_seen() const { return inhibit_seen_; }
    int therapies_delivered() const { return therapies_; }
    int shocks_delivered() const { return shocks_; }
    const TherapyCounters& counters() const { return counters_; }
    const std::array<ZoneState, kNumZones>& zones() const { return zones_; }

  private:
    TherapyOrder build_order(const TherapyDecision& decision, int tcount_before, double t_ms);

    IcdParams p_;
    DetectionWindow window_;
    std::array<ZoneState, kNumZones> zones_{};
    TherapyCounters counters_;
    bool have_prev_ = false;
    double prev_beat_t_ = 0;
    double resume_t_ = -1e300;
    bool done_ = false, terminated_ = false, exhausted_ = false, inhibit_seen_ = false;
    double terminated_t_ = 0;
    bool observing_ = false;
    int consec_slow_ = 0;
    bool sustained_latch_ = false, inhibit_latch_ = false;
    int therapies_ = 0, shocks_ = 0;
};

/// Batch form of the termination rule: true iff, inside the observation
/// window, termination_slow_beats consecutive periods are at or above the
/// VT1 threshold before any zone re-sustains (re-detection durations).
bool classify_termination(const std::vector<double>& post_therapy_periods_ms,
                          const IcdParams& p);

}  // namespace simicd
