#include "simicd/scenario.hpp"

#include <cmath>
#include <fstream>

#include "simicd/checkpoint.hpp"
#include "simicd/errors.hpp"

namespace simicd {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + ctx);
    }
}

double num(const json& j, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

int integer(const json& j, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_number_integer())
        throw ConfigError(std::string("'") + key + "' must be an integer");
    return j.at(key).get<int>();
}

std::string text(const json& j, const char* key, const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

/// Scalar or [lo, hi].
std::pair<double, double> range(const json& j, const char* key, double def_lo, double def_hi) {
    if (!j.contains(key)) return {def_lo, def_hi};
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>(), v.get<double>()};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        const double lo = v[0].get<double>(), hi = v[1].get<double>();
        if (lo > hi) throw ConfigError(std::string("'") + key + "' range is inverted");
        return {lo, hi};
    }
    throw ConfigError(std::string("'") + key + "' must be a number or [lo, hi]");
}

template <std::size_t N>
void fill_array(const json& j, const char* key, std::array<double, N>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != N)
        throw ConfigError(std::string("'") + key + "' must be an array of " + std::to_string(N));
    for (std::size_t k = 0; k < N; ++k) out[k] = v[k].get<double>();
}

void parse_atp_zone(const json& j, AtpZoneParams& z, const std::string& ctx) {
    check_keys(j,
               {"pulse_interval_pct", "coupling_interval_pct", "n_pulses", "ramp_decrement_ms",
                "min_interval_ms"},
               ctx);
    z.pulse_interval_pct = num(j, "pulse_interval_pct", z.pulse_interval_pct);
    z.coupling_interval_pct = num(j, "coupling_interval_pct", z.coupling_interval_pct);
    z.n_pulses = integer(j, "n_pulses", z.n_pulses);
    z.ramp_decrement_ms = num(j, "ramp_decrement_ms", z.ramp_decrement_ms);
    z.min_interval_ms = num(j, "min_interval_ms", z.min_interval_ms);
}

void parse_icd(const json& j, IcdParams& icd) {
    check_keys(j,
               {"th_ms", "dur_ms", "redetect_dur_ms", "vtc_threshold", "corr_count_max",
                "max_attempts", "post_therapy_blank_ms", "max_shocks", "atp", "shock", "sensing"},
               "icd");
    fill_array(j, "th_ms", icd.detection.th_ms);
    fill_array(j, "dur_ms", icd.detection.dur_ms);
    fill_array(j, "redetect_dur_ms", icd.detection.redetect_dur_ms);
    icd.detection.vtc_threshold = num(j, "vtc_threshold", icd.detection.vtc_threshold);
    icd.detection.corr_count_max = integer(j, "corr_count_max", icd.detection.corr_count_max);
    if (j.contains("max_attempts")) {
        std::array<double, 4> tmp = {2, 2, 1, 0};
        fill_array(j, "max_attempts", tmp);
        for (int z = 0; z < kNumZones; ++z) icd.max_attempts[z] = static_cast<int>(tmp[z]);
    }
    icd.post_therapy_blank_ms = num(j, "post_therapy_blank_ms", icd.post_therapy_blank_ms);
    icd.max_shocks = integer(j, "max_shocks", icd.max_shocks);
    if (j.contains("atp")) {
        const auto& a = j.at("atp");
        check_keys(a, {"VT1", "VT", "VF1"}, "icd.atp");
        if (a.contains("VT1")) parse_atp_zone(a.at("VT1"), icd.atp.for_zone(ZoneId::VT1), "icd.atp.VT1");
        if (a.contains("VT")) parse_atp_zone(a.at("VT"), icd.atp.for_zone(ZoneId::VT), "icd.atp.VT");
        if (a.contains("VF1")) parse_atp_zone(a.at("VF1"), icd.atp.for_zone(ZoneId::VF1), "icd.atp.VF1");
    }
    if (j.contains("shock")) {
        const auto& s = j.at("shock");
        check_keys(s, {"charge_delay_ms", "duration_ms", "amplitude"}, "icd.shock");
        icd.shock.charge_delay_ms = num(s, "charge_delay_ms", icd.shock.charge_delay_ms);
        icd.shock.duration_ms = num(s, "duration_ms", icd.shock.duration_ms);
        icd.shock.amplitude = num(s, "amplitude", icd.shock.amplitude);
    }
    if (j.contains("sensing")) {
        const auto& s = j.at("sensing");
        check_keys(s, {"refractory_ms", "threshold_floor_mV", "adaptive_fraction",
                       "rolling_window_ms"},
                   "icd.sensing");
        icd.sensing.refractory_ms = num(s, "refractory_ms", icd.sensing.refractory_ms);
        icd.sensing.threshold_floor_mV = num(s, "threshold_floor_mV", icd.sensing.threshold_floor_mV);
        icd.sensing.adaptive_fraction = num(s, "adaptive_fraction", icd.sensing.adaptive_fraction);
        icd.sensing.rolling_window_ms = num(s, "rolling_window_ms", icd.sensing.rolling_window_ms);
    }
}

void apply_patient_preset(Scenario& sc) {
    switch (sc.patient) {
        case 0:
        case 1:
            break;  // healthy sheet physics
        case 2:
            // Post-infarct remodeling: the channel conducts slowly and stays
            // refractory long after the bulk has recovered. The long strip
            // APD is what separates the programmable ATP coupling intervals:
            // pulses below it find the tip unexcitable, pulses above capture.
            sc.scar = {20.0, 25.0, 7.0, 21.0, 1.5, 0.20, 1.62, 0.125};
            sc.has_scar = true;
            sc.phys.ion.tau_close_ms = 120.0;
            sc.phys.cv_target_mm_per_ms = 0.35;
            // tip/ring inside the channel: capture is then gated by the
            // channel's refractory period rather than the recovered bulk
            sc.leads.tip = point_electrode("tip", {20.0, 25.0, 1.0});
            sc.leads.ring = point_electrode("ring", {20.0, 28.0, 1.0});
            break;
        case 3:
            sc.scar = {30.0, 25.0, 7.0, 21.0, 1.5, 0.20, 1.62, 0.125};
            sc.has_scar = true;
            sc.phys.ion.tau_close_ms = 120.0;
            sc.phys.cv_target_mm_per_ms = 0.35;
            sc.leads.tip = point_electrode("tip", {30.0, 25.0, 1.0});
            sc.leads.ring = point_electrode("ring", {30.0, 28.0, 1.0});
            break;
        default:
            throw ConfigError("patient must be 0..3");
    }
}

void parse_physics(const json& j, Scenario& sc) {
    check_keys(j,
               {"dt_ms", "cv_target", "tau_in_ms", "tau_out_ms", "tau_open_ms", "tau_close_ms",
                "v_gate", "gain", "sinus_cl_ms", "template_ms"},
               "physics");
    sc.phys.dt_ms = num(j, "dt_ms", sc.phys.dt_ms);
    sc.phys.cv_target_mm_per_ms = num(j, "cv_target", sc.phys.cv_target_mm_per_ms);
    sc.phys.ion.tau_in_ms = num(j, "tau_in_ms", sc.phys.ion.tau_in_ms);
    sc.phys.ion.tau_out_ms = num(j, "tau_out_ms", sc.phys.ion.tau_out_ms);
    sc.phys.ion.tau_open_ms = num(j, "tau_open_ms", sc.phys.ion.tau_open_ms);
    sc.phys.ion.tau_close_ms = num(j, "tau_close_ms", sc.phys.ion.tau_close_ms);
    sc.phys.ion.v_gate = num(j, "v_gate", sc.phys.ion.v_gate);
    sc.leads.gain = num(j, "gain", sc.leads.gain);
    sc.phys.sinus_cl_ms = num(j, "sinus_cl_ms", sc.phys.sinus_cl_ms);
    sc.phys.template_ms = num(j, "template_ms", sc.phys.template_ms);
}

void parse_episode(const json& j, Scenario& sc) {
    check_keys(j,
               {"type", "site", "n_beats", "cl_ms", "n_episodes", "gap_ms", "first_onset_ms",
                "isthmus_factor", "direction"},
               "episode");
    const std::string type = text(j, "type", "nsr");
    if (type == "nsr") {
        sc.kind = EpisodeKind::Nsr;
        check_keys(j, {"type"}, "episode (nsr)");
    } else if (type == "focal") {
        sc.kind = EpisodeKind::Focal;
        sc.focal.site = text(j, "site", sc.focal.site);
        if (sc.focal.site != "ectopic" && sc.focal.site != "sinus")
            throw ConfigError("episode.site must be 'ectopic' or 'sinus'");
        std::tie(sc.focal.n_beats_lo, sc.focal.n_beats_hi) = [&] {
            auto [lo, hi] = range(j, "n_beats", sc.focal.n_beats_lo, sc.focal.n_beats_hi);
            return std::pair<int, int>{static_cast<int>(lo), static_cast<int>(hi)};
        }();
        std::tie(sc.focal.cl_lo_ms, sc.focal.cl_hi_ms) =
            range(j, "cl_ms", sc.focal.cl_lo_ms, sc.focal.cl_hi_ms);
        sc.focal.n_episodes = integer(j, "n_episodes", sc.focal.n_episodes);
        std::tie(sc.focal.gap_lo_ms, sc.focal.gap_hi_ms) =
            range(j, "gap_ms", sc.focal.gap_lo_ms, sc.focal.gap_hi_ms);
        sc.focal.first_onset_ms = num(j, "first_onset_ms", sc.focal.first_onset_ms);
        if (sc.focal.n_beats_lo < 1 || sc.focal.n_episodes < 1 || sc.focal.cl_lo_ms <= 0)
            throw ConfigError("focal episode parameters must be positive");
    } else if (type == "reentrant") {
        sc.kind = EpisodeKind::Reentrant;
        sc.reentrant.isthmus_factor = num(j, "isthmus_factor", sc.reentrant.isthmus_factor);
        sc.reentrant.direction = text(j, "direction", sc.reentrant.direction);
        if (sc.reentrant.direction != "up" && sc.reentrant.direction != "down")
            throw ConfigError("episode.direction must be 'up' or 'down'");
        if (sc.reentrant.isthmus_factor < 0 || sc.reentrant.isthmus_factor > 1)
            throw ConfigError("episode.isthmus_factor must lie in [0,1]");
    } else {
        throw ConfigError("episode.type must be 'nsr', 'focal' or 'reentrant'");
    }
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    check_keys(doc, {"patient", "duration_ms", "seed", "episode", "icd", "physics", "output",
                     "sweep"},
               "config");
    Scenario sc;
    sc.leads = LeadConfig::defaults();
    sc.patient = integer(doc, "patient", 0);
    if (sc.patient < 0 || sc.patient > 3) throw ConfigError("patient must be 0..3");
    apply_patient_preset(sc);

    sc.duration_ms = num(doc, "duration_ms", sc.duration_ms);
    if (sc.duration_ms <= 0) throw ConfigError("duration_ms must be positive");
    if (sc.duration_ms != std::floor(sc.duration_ms))
        throw ConfigError("duration_ms must be a whole number of milliseconds");
    const double seed = num(doc, "seed", 1);
    if (seed < 0) throw ConfigError("seed must be non-negative");
    sc.seed = static_cast<std::uint64_t>(seed);

    if (doc.contains("episode")) parse_episode(doc.at("episode"), sc);
    if (doc.contains("physics")) parse_physics(doc.at("physics"), sc);
    if (doc.contains("icd")) parse_icd(doc.at("icd"), sc.icd);
    if (doc.contains("output")) {
        check_keys(doc.at("output"), {"plots"}, "output");
        if (doc.at("output").contains("plots")) {
            if (!doc.at("output").at("plots").is_boolean())
                throw ConfigError("'plots' must be a boolean");
            sc.plots = doc.at("output").at("plots").get<bool>();
        }
    }

    // cohort availability
    if (sc.kind == EpisodeKind::Focal && sc.focal.site == "ectopic" && sc.patient != 1)
        throw ConfigError("focal ectopic episodes need patient 1 (the preset with an ectopic site)");
    if (sc.kind == EpisodeKind::Reentrant && sc.patient != 2 && sc.patient != 3)
        throw ConfigError("reentrant episodes need patient 2 or 3 (the scar presets)");

    try {
        sc.icd.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        // device-parameter validators speak std exceptions; surface them as
        // configuration errors so the CLI exits 2, not 1
        throw ConfigError(e.what());
    }
    sc.phys.ion.validate();
    if (sc.phys.dt_ms <= 0 || sc.phys.dt_ms > 0.1)
        throw ConfigError("physics.dt_ms must lie in (0, 0.1]");
    sc.raw = doc;
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& ex) {
        throw ConfigError("config is not valid JSON: " + std::string(ex.what()));
    }
    return parse_scenario(doc);
}

std::uint64_t scenario_hash(const Scenario& sc) {
    // Only the parts that shape the tissue trajectory before any therapy:
    // device programming and output options may vary between runs that share
    // a prepared state (sweeps reuse one induced circuit across many cells).
    nlohmann::json subset = nlohmann::json::object();
    for (const char* key : {"patient", "seed", "episode", "physics"})
        if (sc.raw.contains(key)) subset[key] = sc.raw.at(key);
    return fnv1a64(subset.dump());
}

TissueGrid build_grid(const Scenario& sc) {
    const double d = tune_conductivity(sc.phys.cv_target_mm_per_ms, sc.phys.ion, sc.phys.dx_mm,
                                       sc.phys.dt_ms);
    TissueGrid g = make_sheet(sc.phys.nx, sc.phys.ny, sc.phys.dx_mm, d);
    if (sc.has_scar) {
        ScarSpec spec = sc.scar;
        if (sc.kind == EpisodeKind::Reentrant)
            spec.isthmus_factor = sc.reentrant.isthmus_factor;
        apply_scar(g, spec);
    }
    g.sinus_site = block_site(g, 5.0, 5.0, 1);
    if (sc.patient == 1) g.ectopic_site = block_site(g, 25.0, 43.0, 1);
    const auto& tip = sc.leads.tip.points.at(0);
    g.tip_footprint = block_site(g, tip.x_mm, tip.y_mm, 2);  // 5x5 block
    return g;
}

StimulusSchedule sinus_schedule(const Scenario& sc, const TissueGrid& grid, double until_ms) {
    if (grid.sinus_site.empty()) throw ConfigError("grid has no sinus site");
    StimulusSchedule out;
    for (double t = sc.phys.sinus_first_ms; t < until_ms; t += sc.phys.sinus_cl_ms)
        out.push_back({grid.sinus_site, t, sc.phys.stim_duration_ms, sc.phys.stim_amplitude});
    return out;
}

StimulusSchedule focal_schedule(const Scenario& sc, const TissueGrid& grid) {
    if (sc.kind != EpisodeKind::Focal) return {};
    const std::vector<int>& site =
        sc.focal.site == "ectopic" ? grid.ectopic_site : grid.sinus_site;
    if (site.empty()) throw ConfigError("focal site is empty on this grid");
    Rng rng(sc.seed);
    StimulusSchedule out;
    double onset = sc.focal.first_onset_ms;
    for (int e = 0; e < sc.focal.n_episodes; ++e) {
        const int n = rng.uniform_int(sc.focal.n_beats_lo, sc.focal.n_beats_hi);
        const double cl = std::round(rng.uniform(sc.focal.cl_lo_ms, sc.focal.cl_hi_ms));
        for (int k = 0; k < n; ++k)
            out.push_back({site, onset + k * cl, sc.phys.stim_duration_ms, sc.phys.stim_amplitude});
        const double gap = std::round(rng.uniform(sc.focal.gap_lo_ms, sc.focal.gap_hi_ms));
        onset += (n - 1) * cl + gap;
    }
    return out;
}

ReentryProtocol reentry_protocol(const Scenario& sc, const TissueGrid& grid) {
    // S1 fires from beyond the blocked end: the wavefront wraps around the
    // scar, enters the open end and transits while the far side recovers.
    // Firing from the open side instead leaves the exit tissue refractory
    // when the slow transit emerges, and the circuit dies on its first lap.
    ReentryProtocol p;
    p.block_top = sc.reentrant.direction == "up";
    if (p.block_top)
        p.s1_site = block_site(grid, sc.scar.cx_mm, sc.scar.cy_mm + sc.scar.ry_mm + 2.0, 1);
    else
        p.s1_site = grid.sinus_site;
    return p;
}

double Rng::uniform(double lo, double hi) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

int Rng::uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace simicd
