#pragma once

#include <array>
#include <cstddef>
#include <optional>

namespace simicd {

/// Tachy-arrhythmia rate zones, severity ascending.
enum class ZoneId : int { VT1 = 0, VT = 1, VF1 = 2, VF = 3 };
constexpr int kNumZones = 4;

const char* zone_name(ZoneId z);
std::optional<ZoneId> zone_from_name(const char* name);

/// Per-zone detection state: entry flag plus the accumulated episode clock.
/// The clock only accumulates while inside the zone.
struct ZoneState {
    bool in_zone = false;
    double t_zone_ms = 0.0;
};

struct DetectionParams {
    // rate thresholds (a period shorter than th is "fast" for the zone)
    std::array<double, kNumZones> th_ms = {429.0, 353.0, 300.0, 240.0};
    // duration thresholds for initial detection and for post-therapy re-detection
    std::array<double, kNumZones> dur_ms = {2500.0, 2500.0, 1000.0, 1000.0};
    std::array<double, kNumZones> redetect_dur_ms = {1000.0, 1000.0, 1000.0, 1000.0};
    double vtc_threshold = 0.94;
    int corr_count_max = 3;

    double th(ZoneId z) const { return th_ms[static_cast<int>(z)]; }
    double dur(ZoneId z, bool redetect) const {
        return redetect ? redetect_dur_ms[static_cast<int>(z)] : dur_ms[static_cast<int>(z)];
    }

    /// Enforces th_VF < th_VF1 < th_VT < th_VT1 and positive durations.
    void validate() const;
};

/// Moving window of the latest ten ventricular periods and VTC scores.
/// Cold until ten periods have been seen; slides one beat at a time.
class DetectionWindow {
public:
    static constexpr std::size_t kSize = 10;

    void push(double period_ms, double vtc, double beat_t_ms);
    void clear();

    bool warm() const { return count_ >= kSize; }
    const std::array<double, kSize>& periods() const { return periods_; }
    const std::array<double, kSize>& vtcs() const { return vtcs_; }
    double last_period() const { return periods_[kSize - 1]; }
    double last_beat_t_ms() const { return last_beat_t_ms_; }
    double avg_last4() const;

private:
    std::array<double, kSize> periods_{};
    std::array<double, kSize> vtcs_{};
    double last_beat_t_ms_ = 0.0;
    std::size_t count_ = 0;
};

/// One beat of the per-zone sustained-episode state machine. Entry requires
/// 8+ of 10 periods fast including the last; the clock advances by the last
/// period while 6+ stay fast, otherwise the state resets. Sustained when the
/// updated clock reaches the duration threshold. Cold window is a no-op.
std::pair<ZoneState, bool> update_zone(const ZoneState& state, const DetectionWindow& window,
                                       ZoneId zone, const DetectionParams& p,
                                       bool redetect = false);

struct DetectorStep {
    std::array<ZoneState, kNumZones> zones;
    std::optional<ZoneId> sustained_zone;          // severity-maximal sustained zone
    std::array<bool, kNumZones> sustained_flags{}; // raw per-zone results
};

/// Runs all four zones on the same window; when several sustain on the same
/// beat the highest-severity zone wins.
DetectorStep step_detector(const std::array<ZoneState, kNumZones>& zones,
                           const DetectionWindow& window, const DetectionParams& p,
                           bool redetect = false);

}  // namespace simicd
