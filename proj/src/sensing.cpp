#include "simicd/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace simicd {

void SensingParams::validate() const {
    if (!(refractory_ms > 0.0))
        throw std::invalid_argument("SensingParams: refractory_ms must be > 0");
    if (!(adaptive_fraction > 0.0 && adaptive_fraction < 1.0))
        throw std::invalid_argument("SensingParams: adaptive_fraction must be in (0,1)");
    if (!(threshold_floor_mV >= 0.0))
        throw std::invalid_argument("SensingParams: threshold_floor_mV must be >= 0");
}

BeatSensor::BeatSensor(const SensingParams& p) : p_(p) {
    p_.validate();
    reset();
}

void BeatSensor::reset() {
    peak_window_.clear();
    last_marker_ = -std::numeric_limits<double>::infinity();
    prev_abs_ = 0.0;
    prev_thr_ = 0.0;
    has_prev_ = false;
}

std::optional<double> BeatSensor::push(double t_ms, double nf_mV) {
    if (!std::isfinite(nf_mV) || !std::isfinite(t_ms))
        throw std::invalid_argument("BeatSensor: non-finite sample");
    const double a = std::abs(nf_mV);

    while (!peak_window_.empty() && peak_window_.front().first <= t_ms - p_.rolling_window_ms)
        peak_window_.pop_front();
    while (!peak_window_.empty() && peak_window_.back().second <= a)
        peak_window_.pop_back();
    peak_window_.emplace_back(t_ms, a);
    const double rolling_peak = peak_window_.front().second;

    const double thr = std::max(p_.threshold_floor_mV, p_.adaptive_fraction * rolling_peak);

    std::optional<double> marker;
    const bool crossed = has_prev_ && prev_abs_ < prev_thr_ && a >= thr;
    if (crossed && t_ms - last_marker_ >= p_.refractory_ms) {
        last_marker_ = t_ms;
        marker = t_ms;
    }
    prev_abs_ = a;
    prev_thr_ = thr;
    has_prev_ = true;
    return marker;
}

std::vector<BeatEvent> detect_beats(const EgmTrace& trace, const SensingParams& p) {
    trace.validate();
    BeatSensor sensor(p);
    std::vector<BeatEvent> beats;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (auto m = sensor.push(trace.time_at(i), trace.nf_mV[i]))
            beats.push_back(BeatEvent{*m});
    }
    return beats;
}

std::vector<double> compute_periods(const std::vector<BeatEvent>& beats) {
    std::vector<double> periods;
    if (beats.size() < 2) return periods;
    periods.reserve(beats.size() - 1);
    for (std::size_t i = 0; i + 1 < beats.size(); ++i)
        periods.push_back(beats[i + 1].t_ms - beats[i].t_ms);
    return periods;
}

std::optional<std::vector<double>> beat_window(const EgmTrace& trace, double marker_ms) {
    const double rel = (marker_ms - trace.t0_ms) / trace.dt_ms;
    const long idx = std::lround(rel);
    const long pre = std::lround(NsrTemplate::kPreMs / trace.dt_ms);
    const long post = std::lround(NsrTemplate::kPostMs / trace.dt_ms);
    const long lo = idx - pre;
    const long hi = idx + post;
    if (lo < 0 || hi >= static_cast<long>(trace.size())) return std::nullopt;
    std::vector<double> w(trace.ff_mV.begin() + lo, trace.ff_mV.begin() + hi + 1);
    return w;
}

NsrTemplate build_nsr_template(const EgmTrace& nsr_trace, const SensingParams& p) {
    const auto beats = detect_beats(nsr_trace, p);
    if (beats.size() < 5)
        throw std::runtime_error("insufficient NSR data: need >= 5 sensed beats, got " +
                                 std::to_string(beats.size()));

    NsrTemplate tmpl;
    tmpl.dt_ms = nsr_trace.dt_ms;
    const std::size_t len = NsrTemplate::expected_length(nsr_trace.dt_ms);
    tmpl.window_mV.assign(len, 0.0);

    // first and last beats excluded; clipped windows skipped
    std::size_t used = 0;
    for (std::size_t b = 1; b + 1 < beats.size(); ++b) {
        auto w = beat_window(nsr_trace, beats[b].t_ms);
        if (!w) continue;
        for (std::size_t i = 0; i < len; ++i) tmpl.window_mV[i] += (*w)[i];
        ++used;
    }
    if (used < 3)
        throw std::runtime_error("insufficient NSR data: fewer than 3 complete beat windows");
    for (double& v : tmpl.window_mV) v /= static_cast<double>(used);

    tmpl.peak_mV = 0.0;
    for (double v : tmpl.window_mV) tmpl.peak_mV = std::max(tmpl.peak_mV, std::abs(v));
    return tmpl;
}

double vtc_score(const std::vector<double>& beat_window, const NsrTemplate& tmpl) {
    if (beat_window.size() != tmpl.window_mV.size())
        throw std::invalid_argument("vtc_score: window length mismatch");
    const std::size_t n = beat_window.size();
    if (n == 0) throw std::invalid_argument("vtc_score: empty window");

    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += beat_window[i];
        mb += tmpl.window_mV[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);

    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = beat_window[i] - ma;
        const double db = tmpl.window_mV[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

void write_template_csv(const NsrTemplate& tmpl, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("offset_ms,ff_mV\n", f);
    for (std::size_t i = 0; i < tmpl.window_mV.size(); ++i) {
        const double off = -NsrTemplate::kPreMs + static_cast<double>(i) * tmpl.dt_ms;
        std::fprintf(f, "%.3f,%.17g\n", off, tmpl.window_mV[i]);
    }
    std::fclose(f);
}

NsrTemplate read_template_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("offset_ms,ff_mV", 0) != 0)
        throw std::runtime_error(path + ":1: expected header offset_ms,ff_mV");

    NsrTemplate tmpl;
    tmpl.window_mV.clear();
    double prev_off = 0.0;
    std::size_t n_line = 1;
    while (std::getline(f, line)) {
        ++n_line;
        if (line.empty()) continue;
        std::istringstream row(line);
        double off, v;
        char comma;
        if (!(row >> off >> comma >> v) || comma != ',')
            throw std::runtime_error(path + ":" + std::to_string(n_line) + ": bad row");
        if (tmpl.window_mV.size() == 1) tmpl.dt_ms = off - prev_off;
        prev_off = off;
        tmpl.window_mV.push_back(v);
    }
    if (!(tmpl.dt_ms > 0.0) || tmpl.window_mV.size() != NsrTemplate::expected_length(tmpl.dt_ms))
        throw std::runtime_error(path + ": not a sense-aligned template window");
    for (double v : tmpl.window_mV) tmpl.peak_mV = std::max(tmpl.peak_mV, std::abs(v));
    return tmpl;
}

}  // namespace simicd
