#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "simicd/egm.hpp"

namespace simicd {

struct BeatEvent {
    double t_ms = 0.0;  // sense-marker time
};

struct SensingParams {
    double refractory_ms = 150.0;
    double threshold_floor_mV = 0.5;   // typically 0.1 x NSR template peak
    double adaptive_fraction = 0.5;
    double rolling_window_ms = 2000.0;

    void validate() const;
};

/// Far-field morphology template for normal sinus rhythm, aligned on the
/// sense marker over the window [-80, +120] ms.
struct NsrTemplate {
    static constexpr double kPreMs = 80.0;
    static constexpr double kPostMs = 120.0;

    std::vector<double> window_mV;
    double peak_mV = 0.0;
    double dt_ms = 1.0;

    static std::size_t expected_length(double dt_ms) {
        return static_cast<std::size_t>((kPreMs + kPostMs) / dt_ms) + 1;
    }
};

/// Streaming adaptive-threshold sense amplifier for the near-field channel.
/// A marker fires on an upward crossing of max(floor, fraction * rolling peak)
/// on |nf|; markers closer than refractory_ms to the previous one are dropped.
class BeatSensor {
public:
    explicit BeatSensor(const SensingParams& p);

    /// Feed one sample; returns the marker time when a beat is sensed.
    std::optional<double> push(double t_ms, double nf_mV);

    void reset();
    double last_marker_ms() const { return last_marker_; }

private:
    SensingParams p_;
    std::deque<std::pair<double, double>> peak_window_;  // (t, |nf|), max-monotonic
    double last_marker_;
    double prev_abs_;
    double prev_thr_;
    bool has_prev_;
};

std::vector<BeatEvent> detect_beats(const EgmTrace& trace, const SensingParams& p);

/// periods[i] = beats[i+1].t - beats[i].t; fewer than 2 beats -> empty.
std::vector<double> compute_periods(const std::vector<BeatEvent>& beats);

/// Far-field window [-80,+120] ms around a marker; nullopt when the window
/// would run off either end of the trace.
std::optional<std::vector<double>> beat_window(const EgmTrace& trace, double marker_ms);

/// Per-sample mean of the far-field windows of beats 2..N-1 of a steady NSR
/// trace. Throws "insufficient NSR data" when fewer than 5 beats are sensed.
NsrTemplate build_nsr_template(const EgmTrace& nsr_trace, const SensingParams& p);

/// Zero-lag normalized correlation of a sense-aligned window against the
/// template; both mean-centered and unit-normalized. A zero-variance window
/// scores 0. Result clamped into [-1, 1].
double vtc_score(const std::vector<double>& beat_window, const NsrTemplate& tmpl);

/// CSV layout: header "offset_ms,ff_mV", offsets -80..+120 at the template
/// cadence. The peak is recomputed on read.
void write_template_csv(const NsrTemplate& tmpl, const std::string& path);
NsrTemplate read_template_csv(const std::string& path);

}  // namespace simicd
