// Acceptance gate: ten criteria, one pass/fail line each. Exit 0 iff all pass.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simicd/checkpoint.hpp"
#include "simicd/orchestrator.hpp"
#include "simicd/reentry.hpp"
#include "simicd/scenario.hpp"
#include "simicd/solver.hpp"
#include "simicd/therapy.hpp"

namespace fs = std::filesystem;
using namespace simicd;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int n, const char* name, bool pass, const std::string& detail, double secs) {
    std::printf("criterion %2d %-28s %s  (%s; %.1f s)\n", n, name, pass ? "PASS" : "FAIL",
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

// ---- independent pseudocode transcriptions used as oracles ----------------

// Sustained-episode state machine, one beat. The clock is gated on the
// pre-update entry flag and the sustained test reads the post-update clock
// (the published pseudocode line is ambiguous; this reading never drops a
// beat and matches the shipped semantics by design).
struct OracleZone {
    bool in_zone = false;
    double t = 0;
};

bool oracle_detect(OracleZone& s, const std::array<double, 10>& P, double th, double dur) {
    int fast = 0;
    for (double p : P)
        if (p < th) ++fast;
    bool in2 = s.in_zone;
    double t2 = s.t;
    if (fast >= 8 && P[9] < th) in2 = true;
    if (s.in_zone) {
        if (fast >= 6 && P[9] < th) {
            t2 = s.t + P[9];
        } else {
            in2 = false;
            t2 = 0;
        }
    }
    s.in_zone = in2;
    s.t = t2;
    return t2 >= dur;
}

// Therapy prescription branch structure.
TherapyKind oracle_prescribe(ZoneId zone, bool initial, int corr_count, int tcount, int max_t) {
    if (zone == ZoneId::VF1 && tcount < max_t) return TherapyKind::QCATP;
    if ((zone == ZoneId::VT || zone == ZoneId::VT1) && tcount < max_t) {
        if (!initial || corr_count <= 3) return TherapyKind::ATP;
        return TherapyKind::Inhibit;
    }
    return TherapyKind::Shock;
}

DetectionWindow window_of(const std::array<double, 10>& periods, double vtc = 0.5) {
    DetectionWindow w;
    double t = 0;
    for (double p : periods) {
        t += p;
        w.push(p, vtc, t);
    }
    return w;
}

// ---- criteria -------------------------------------------------------------

void c1_detector_oracle() {
    const auto t0 = clk::now();
    std::mt19937_64 rng(12345);
    const DetectionParams dp;
    long mismatches = 0;

    // 10,000 random windows against randomized prior state, all four zones,
    // both duration tables
    std::uniform_real_distribution<double> period(150.0, 900.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        std::array<double, 10> P;
        for (double& p : P) p = period(rng);
        const DetectionWindow w = window_of(P);
        const bool redetect = unit(rng) < 0.3;
        for (int z = 0; z < kNumZones; ++z) {
            const ZoneId zone = static_cast<ZoneId>(z);
            ZoneState st;
            st.in_zone = unit(rng) < 0.5;
            st.t_zone_ms = st.in_zone ? unit(rng) * 1.2 * dp.dur(zone, redetect) : 0.0;
            OracleZone os{st.in_zone, st.t_zone_ms};
            const auto [st2, sustained] = update_zone(st, w, zone, dp, redetect);
            const bool osust = oracle_detect(os, P, dp.th(zone), dp.dur(zone, redetect));
            if (st2.in_zone != os.in_zone || st2.t_zone_ms != os.t || sustained != osust)
                ++mismatches;
        }
    }

    // 1,000 random long sequences, evolved from cold; sticky segments so the
    // stream dwells in zones long enough to exercise entry, clock and reset
    for (int i = 0; i < 1000; ++i) {
        std::array<ZoneState, kNumZones> zones{};
        std::array<OracleZone, kNumZones> ozones{};
        DetectionWindow w;
        std::array<double, 10> last10{};
        int n_seen = 0;
        double t = 0;
        std::uniform_int_distribution<int> seg_len(5, 30);
        std::uniform_int_distribution<int> n_segs(3, 8);
        const int segments = n_segs(rng);
        for (int s = 0; s < segments; ++s) {
            const double base = period(rng);
            const int len = seg_len(rng);
            std::uniform_real_distribution<double> jitter(-10.0, 10.0);
            for (int b = 0; b < len; ++b) {
                const double p = std::max(100.0, base + jitter(rng));
                t += p;
                w.push(p, 0.5, t);
                for (int k = 0; k < 9; ++k) last10[k] = last10[k + 1];
                last10[9] = p;
                if (++n_seen < 10) continue;
                const DetectorStep step = step_detector(zones, w, dp);
                std::optional<ZoneId> osust_zone;
                for (int z = 0; z < kNumZones; ++z) {
                    const ZoneId zone = static_cast<ZoneId>(z);
                    const bool osust =
                        oracle_detect(ozones[z], last10, dp.th(zone), dp.dur(zone, false));
                    if (step.zones[z].in_zone != ozones[z].in_zone ||
                        step.zones[z].t_zone_ms != ozones[z].t ||
                        step.sustained_flags[z] != osust)
                        ++mismatches;
                    if (osust) osust_zone = zone;  // ascending severity: max wins
                }
                if (step.sustained_zone != osust_zone) ++mismatches;
                zones = step.zones;
            }
        }
    }

    const double secs = elapsed(t0);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%ld mismatches over 10000 windows + 1000 sequences",
                  mismatches);
    report(1, "detector oracle", mismatches == 0 && secs < 10.0, buf, secs);
}

void c2_prescription_table() {
    const auto t0 = clk::now();
    const DetectionParams dp;
    long mismatches = 0, cases = 0;

    std::array<double, 10> periods;
    periods.fill(300.0);
    for (int z = 0; z < kNumZones; ++z) {
        const ZoneId zone = static_cast<ZoneId>(z);
        const TherapyCounters defaults;
        const int max_t = defaults.max(zone);
        for (int initial = 0; initial <= 1; ++initial) {
            for (int corr = 0; corr <= 10; ++corr) {
                // window with exactly `corr` of ten scores above the threshold
                DetectionWindow w;
                double t = 0;
                for (int k = 0; k < 10; ++k) {
                    t += periods[k];
                    w.push(periods[k], k < corr ? 0.99 : 0.5, t);
                }
                for (int tc = 0; tc <= max_t; ++tc) {
                    TherapyCounters counters;
                    counters.tcount[z] = tc;
                    counters.initial = initial == 1;
                    const auto [decision, after] = prescribe(zone, w, counters, dp);
                    const TherapyKind want =
                        oracle_prescribe(zone, counters.initial, corr, tc, max_t);
                    ++cases;
                    if (decision.kind != want) ++mismatches;
                    // counters advance exactly on delivery
                    const int inc =
                        (want == TherapyKind::ATP || want == TherapyKind::QCATP) ? 1 : 0;
                    if (after.tcount[z] != tc + inc) ++mismatches;
                    if (want == TherapyKind::ATP || want == TherapyKind::QCATP) {
                        if (decision.avg_vperiod_ms != w.avg_last4()) ++mismatches;
                        if (decision.v_time_ms != w.last_beat_t_ms()) ++mismatches;
                    }
                }
            }
        }
    }
    const double secs = elapsed(t0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%ld mismatches over %ld cases", mismatches, cases);
    report(2, "prescription truth table", mismatches == 0 && secs < 1.0, buf, secs);
}

void c3_atp_arithmetic() {
    const auto t0 = clk::now();
    bool ok = true;
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };

    // burst: avg 400 ms at 81% -> coupling and all gaps 324 ms, 8 pulses
    {
        TherapyDecision d;
        d.kind = TherapyKind::ATP;
        d.avg_vperiod_ms = 400.0;
        d.v_time_ms = 10000.0;
        AtpZoneParams p;  // 81/81/8
        const PulseSchedule s = schedule_atp(AtpScheme::Burst, d, p);
        ok = ok && s.pulse_times_ms.size() == 8;
        ok = ok && close(s.pulse_times_ms[0], 10000.0 + 324.0);
        for (std::size_t k = 1; k < s.pulse_times_ms.size(); ++k)
            ok = ok && close(s.pulse_times_ms[k] - s.pulse_times_ms[k - 1], 324.0);
    }
    // quick convert: 88% of avg 350 -> 308 ms throughout
    {
        TherapyDecision d;
        d.kind = TherapyKind::QCATP;
        d.avg_vperiod_ms = 350.0;
        d.v_time_ms = 5000.0;
        AtpZoneParams p;
        p.pulse_interval_pct = 88.0;
        p.coupling_interval_pct = 88.0;
        const PulseSchedule s = schedule_atp(AtpScheme::QC, d, p);
        ok = ok && s.pulse_times_ms.size() == 8;
        ok = ok && close(s.pulse_times_ms[0], 5000.0 + 308.0);
        for (std::size_t k = 1; k < s.pulse_times_ms.size(); ++k)
            ok = ok && close(s.pulse_times_ms[k] - s.pulse_times_ms[k - 1], 308.0);
    }
    // ramp, the published "New (P2)" program: 88%, 12 pulses, decrement 5
    // -> intervals 352, 347, ..., 297
    {
        TherapyDecision d;
        d.kind = TherapyKind::ATP;
        d.avg_vperiod_ms = 400.0;
        d.v_time_ms = 0.0;
        AtpZoneParams p;
        p.pulse_interval_pct = 88.0;
        p.coupling_interval_pct = 88.0;
        p.n_pulses = 12;
        p.ramp_decrement_ms = 5.0;
        const PulseSchedule s = schedule_atp(AtpScheme::Ramp, d, p);
        ok = ok && s.pulse_times_ms.size() == 12;
        double expect = 352.0, prev = 0.0;
        for (std::size_t k = 0; k < s.pulse_times_ms.size(); ++k) {
            ok = ok && close(s.pulse_times_ms[k] - prev, expect);
            prev = s.pulse_times_ms[k];
            expect -= 5.0;
        }
        ok = ok && close(s.pulse_times_ms[11] - s.pulse_times_ms[10], 297.0);
    }
    report(3, "ATP arithmetic", ok, "324x8 / 308x8 / 352..297", elapsed(t0));
}

void c4_non_sustained(const Scenario& focal, const EpisodeReport& rep) {
    const auto t0 = clk::now();
    (void)focal;
    const bool entries = rep.zone_entries >= 1;
    const bool no_sustained = events_of_type(rep.events, "sustained").empty();
    const bool no_therapy =
        rep.outcome == Outcome::NoTherapyNeeded && rep.therapies_delivered == 0;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d zone entries, sustained=%s, outcome=%s", rep.zone_entries,
                  no_sustained ? "never" : "YES", outcome_label(rep.outcome, 0).c_str());
    report(4, "non-sustained inhibition", entries && no_sustained && no_therapy, buf, elapsed(t0));
}

bool therapy_order_is(const EventLog& log, const std::vector<std::pair<std::string, std::string>>& want) {
    const auto therapies = events_of_type(log, "therapy");
    std::vector<std::pair<std::string, std::string>> got;
    for (const auto& e : therapies) {
        if (e.data.at("kind") == "Inhibit") return false;  // no inhibits expected here
        got.emplace_back(e.data.at("kind").get<std::string>(),
                         e.data.value("scheme", std::string{}));
    }
    return got == want;
}

void c5_therapy_progression(const EpisodeReport& rep, const std::string& events_path) {
    const auto t0 = clk::now();
    // order checked from the serialized log, as a user would
    EventLog log;
    bool ok = true;
    try {
        log = read_event_log(events_path);
    } catch (const std::exception&) {
        ok = false;
    }
    ok = ok && therapy_order_is(log, {{"ATP", "Burst"}, {"ATP", "Ramp"}, {"Shock", ""}});
    for (const auto& e : events_of_type(log, "therapy"))
        ok = ok && e.data.at("kind") != "QCATP";
    ok = ok && rep.outcome == Outcome::Terminated && rep.shocks_delivered == 1;
    char buf[96];
    std::string seq;
    for (const auto& e : events_of_type(log, "therapy")) {
        seq += e.data.at("kind").get<std::string>();
        if (e.data.contains("scheme")) seq += "/" + e.data.at("scheme").get<std::string>();
        seq += " ";
    }
    std::snprintf(buf, sizeof buf, "order: %s-> %s", seq.c_str(),
                  outcome_label(rep.outcome, rep.therapies_delivered).c_str());
    report(5, "therapy progression", ok, buf, elapsed(t0));
}

struct SweepRow {
    double pct;
    int n_pulses;
    EpisodeReport rep;
};

void c6_sweep_effect(const std::vector<SweepRow>& rows, const std::string& summary_path) {
    const auto t0 = clk::now();
    std::ofstream csv(summary_path);
    csv << "pct,n_pulses,outcome,therapies,shocks,terminated_t_ms\n";
    bool default_one_round = false, any88_one_round = false;
    for (const auto& r : rows) {
        const bool one_round = r.rep.outcome == Outcome::Terminated &&
                               r.rep.therapies_delivered == 1 && r.rep.shocks_delivered == 0;
        if (r.pct == 81.0 && r.n_pulses == 8) default_one_round = one_round;
        if (r.pct == 88.0) any88_one_round = any88_one_round || one_round;
        csv << r.pct << ',' << r.n_pulses << ','
            << outcome_label(r.rep.outcome, r.rep.therapies_delivered) << ','
            << r.rep.therapies_delivered << ',' << r.rep.shocks_delivered << ','
            << r.rep.terminated_t_ms << "\n";
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "88%%-family one-round termination=%s, default one-round=%s",
                  any88_one_round ? "yes" : "NO", default_one_round ? "YES" : "no");
    report(6, "sweep parameter effect", any88_one_round && !default_one_round, buf, elapsed(t0));
}

void c7_rollback() {
    const auto t0 = clk::now();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int bad = 0;
    for (int i = 0; i < 20; ++i) {
        TissueGrid g = make_sheet(51, 51, 0.5, 0.1);
        if (unit(rng) < 0.5) {
            ScarSpec scar;
            scar.cx_mm = 10.0 + unit(rng) * 5.0;
            scar.cy_mm = 10.0 + unit(rng) * 5.0;
            scar.rx_mm = 4.0 + unit(rng) * 4.0;
            scar.ry_mm = 4.0 + unit(rng) * 4.0;
            scar.isthmus_halfwidth_mm = 1.0 + unit(rng);
            scar.isthmus_factor = 0.2 + unit(rng) * 0.3;
            scar.tau_close_factor = 1.5;
            scar.tau_open_factor = 0.3;
            apply_scar(g, scar);
        }
        StimulusSchedule stim;
        stim.push_back(Stimulus{{g.idx(1, 1), g.idx(1, 2), g.idx(2, 1)}, 5.0, 4.0, 450.0});
        const int n_extra = 2 + static_cast<int>(unit(rng) * 4);
        for (int s = 0; s < n_extra; ++s) {
            const int x = 5 + static_cast<int>(unit(rng) * 40);
            const int y = 5 + static_cast<int>(unit(rng) * 40);
            if (g.conductivity[g.idx(x, y)] <= 0.0) continue;
            stim.push_back(Stimulus{{g.idx(x, y), g.idx(x + 1, y), g.idx(x, y + 1)},
                                    std::floor(unit(rng) * 4500.0), 4.0, 450.0});
        }
        LeadConfig lc;
        lc.tip = point_electrode("tip", {12.0, 10.0, 1.0});
        lc.ring = point_electrode("ring", {12.0, 13.0, 1.0});
        lc.coil = segment_electrode("coil", {8.0, 12.0, 2.0}, {16.0, 12.0, 2.0}, 8);
        lc.can = point_electrode("can", {-50.0, 30.0, 40.0});
        ProbeKernels probes(g, lc);
        const std::uint64_t hash = fnv1a64("rollback " + std::to_string(i));

        Tissue a(g, IonicParams{});
        EgmSamples sa;
        a.run(stim, 5000.0, &probes, &sa);

        const double t_cp = std::floor(500.0 + unit(rng) * 4000.0);
        Tissue b(g, IonicParams{});
        EgmSamples sb;
        b.run(stim, t_cp, &probes, &sb);
        const Checkpoint cp = make_checkpoint(b, hash);
        Tissue c(g, IonicParams{});
        restore_checkpoint(c, cp, hash);
        c.run(stim, 5000.0 - t_cp, &probes, &sb);

        if (a.state().vm != c.state().vm || a.state().h != c.state().h ||
            sa.nf_mV != sb.nf_mV || sa.ff_mV != sb.ff_mV)
            ++bad;
    }
    const double secs = elapsed(t0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d of 20 scenarios diverged", bad);
    report(7, "checkpoint rollback", bad == 0 && secs < 120.0, buf, secs);
}

void c8_physics(const PreparedScenario* vt, double* reentry_jitter_pct) {
    const auto t0 = clk::now();
    std::string detail;
    bool ok = true;

    // gate bounds through a full paced episode
    {
        TissueGrid g = make_sheet(51, 51, 0.5, 0.1);
        Tissue t(g, IonicParams{});
        t.seed_uniform(0.0, 1.0);
        StimulusSchedule stim{Stimulus{{g.idx(1, 1), g.idx(1, 2), g.idx(2, 1)}, 5.0, 4.0, 450.0}};
        for (int ms = 0; ms < 600; ++ms) {
            t.run(stim, 1.0);
            for (double h : t.state().h)
                if (h < 0.0 || h > 1.0) ok = false;
        }
        if (!ok) detail += "h out of [0,1]; ";
    }
    // resting fixed point is exact
    {
        Tissue t(make_sheet(30, 30, 0.5, 0.1), IonicParams{});
        t.seed_uniform(0.0, 1.0);
        t.run({}, 500.0);
        for (double v : t.state().vm)
            if (v != 0.0) ok = false;
        for (double h : t.state().h)
            if (h != 1.0) ok = false;
        if (!ok && detail.empty()) detail += "resting state drifted; ";
    }
    // diffusion-only conservation over exactly 1000 steps
    {
        IonicParams ion;
        ion.tau_out_ms = 1e18;  // reaction suppressed to rounding level
        ion.tau_open_ms = 1e18;
        Tissue t(make_sheet(21, 21, 0.5, 0.1), ion);
        TissueState s = t.state();
        for (int i = 0; i < t.grid().n_nodes(); ++i) {
            const double x = t.grid().pos_x_mm(i), y = t.grid().pos_y_mm(i);
            s.vm[i] = std::exp(-((x - 3) * (x - 3) + (y - 4) * (y - 4)) / 4.0);
            s.h[i] = 0.0;
        }
        t.set_state(s);
        long double before = 0;
        for (double v : t.state().vm) before += v;
        t.run({}, 1000 * t.dt_ms());
        long double after = 0;
        for (double v : t.state().vm) after += v;
        const double drift = std::abs(static_cast<double>((after - before) / before));
        if (drift > 1e-9) {
            ok = false;
            detail += "conservation drift " + std::to_string(drift) + "; ";
        }
    }
    // tuned conduction velocity lands within 2% of target
    for (double target : {0.6, 0.35}) {
        const double d = tune_conductivity(target, IonicParams{}, 0.5, 0.05);
        const auto cv = measure_strip_cv(d, IonicParams{}, 0.5, 0.05);
        if (!cv || std::abs(*cv - target) / target > 0.02) {
            ok = false;
            detail += "CV miss at target " + std::to_string(target) + "; ";
        }
    }
    // the induced circuit holds >= 20 cycles under 5% jitter
    if (vt && vt->induction) {
        const auto m = measure_cycles(vt->grid, vt->sc.phys.ion, vt->sc.phys.dt_ms,
                                      vt->induction->checkpoint, scenario_hash(vt->sc), 20,
                                      15000.0);
        *reentry_jitter_pct = 100.0 * m.max_jitter_ms / m.mean_cl_ms;
        if (m.cycles < 20 || m.max_jitter_ms / m.mean_cl_ms >= 0.05) {
            ok = false;
            detail += "reentry cycles=" + std::to_string(m.cycles) +
                      " jitter=" + std::to_string(*reentry_jitter_pct) + "%; ";
        }
    } else {
        ok = false;
        detail += "no induced circuit; ";
    }
    if (detail.empty())
        detail = "bounds, rest, conservation, CV, " + std::to_string(*reentry_jitter_pct) +
                 "% reentry jitter";
    report(8, "physics properties", ok, detail, elapsed(t0));
}

void c9_nsr_rate(const EpisodeReport& rep) {
    const auto t0 = clk::now();
    char buf[48];
    std::snprintf(buf, sizeof buf, "mean rate %.2f bpm", rep.mean_bpm);
    report(9, "NSR rate", std::abs(rep.mean_bpm - 75.0) <= 1.0, buf, elapsed(t0));
}

void c10_determinism(const Scenario& sc, const RunArtifacts& first) {
    const auto t0 = clk::now();
    const RunArtifacts second = run_closed_loop(sc);
    const std::string a = report_json(first.report).dump(2);
    const std::string b = report_json(second.report).dump(2);
    report(10, "determinism", a == b, a == b ? "report.json byte-identical" : "reports differ",
           elapsed(t0));
}

}  // namespace

int main() {
    std::printf("acceptance: closed-loop ICD / tissue simulator\n");
    const fs::path out = "acceptance_tmp";
    fs::remove_all(out);
    fs::create_directories(out);

    c1_detector_oracle();
    c2_prescription_table();
    c3_atp_arithmetic();
    c7_rollback();

    // normal sinus rhythm, run twice (rate + determinism)
    Scenario nsr = parse_scenario(
        nlohmann::json{{"patient", 0}, {"seed", 7}, {"duration_ms", 12000}});
    const RunArtifacts nsr_run = run_closed_loop(nsr);
    c9_nsr_rate(nsr_run.report);
    c10_determinism(nsr, nsr_run);

    // short-lived focal bursts
    Scenario focal = parse_scenario(nlohmann::json{
        {"patient", 1}, {"seed", 3}, {"duration_ms", 30000}, {"episode", {{"type", "focal"}}}});
    const RunArtifacts focal_run = run_closed_loop(focal);
    c4_non_sustained(focal, focal_run.report);

    // persistent re-entrant scenario: prepare once, reuse for the default
    // episode, the physics cycle check and the sweep
    Scenario vt = parse_scenario(nlohmann::json{
        {"patient", 2}, {"seed", 1}, {"duration_ms", 40000}, {"episode", {{"type", "reentrant"}}}});
    PreparedScenario prepared = prepare_scenario(vt);

    const RunArtifacts default_run = run_closed_loop(prepared);
    write_artifacts(default_run, prepared.sc, (out / "default_cell").string());
    c5_therapy_progression(default_run.report, (out / "default_cell" / "events.jsonl").string());

    double reentry_jitter = -1;
    c8_physics(&prepared, &reentry_jitter);

    std::vector<SweepRow> rows;
    rows.push_back({81.0, 8, default_run.report});  // the default cell, verbatim
    for (int np = 8; np <= 15; ++np) {
        PreparedScenario cell = prepared;
        for (ZoneId z : {ZoneId::VT1, ZoneId::VT}) {
            AtpZoneParams& a = cell.sc.icd.atp.for_zone(z);
            a.coupling_interval_pct = 88.0;
            a.pulse_interval_pct = 88.0;
            a.n_pulses = np;
        }
        const RunArtifacts art = run_closed_loop(cell);
        rows.push_back({88.0, np, art.report});
        std::printf("  sweep cell pct=88 n=%d: %s (%d therapies)\n", np,
                    outcome_label(art.report.outcome, art.report.therapies_delivered).c_str(),
                    art.report.therapies_delivered);
        std::fflush(stdout);
    }
    c6_sweep_effect(rows, (out / "sweep_summary.csv").string());

    std::printf("acceptance: %d of 10 criteria failed\n", g_failures);
    return g_failures == 0 ? 1 : 0;
}
