#include "simicd/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <utility>

#include "simicd/errors.hpp"
#include "simicd/svg_plot.hpp"

namespace simicd {

namespace {

// One object drives sensing + morphology + device logic for both the
// closed loop and open-loop replay, so the two cannot disagree on a beat.
//
// Markers are finalized 120 ms late, once the far-field window that the
// morphology score needs is fully inside the trace. A therapy order rolls
// the physics back behind its decision beat; every marker later than that
// beat is still pending here and gets dropped, so nothing the device acted
// on is ever invalidated.
class DeviceHarness {
  public:
    DeviceHarness(const IcdParams& p, const NsrTemplate& tpl) : tpl_(tpl), sensor_(p.sensing), icd_(p) {
        if (tpl_.window_mV.size() != NsrTemplate::expected_length(1.0))
            throw ConfigError("DeviceHarness: template window is not 1 ms cadence");
    }

    // Feed one committed 1 ms sample. ff/ff_t0 describe the committed
    // far-field channel so windows can be cut around late-finalized markers.
    std::optional<TherapyOrder> feed(double t_ms, double nf_mV, const std::vector<double>& ff,
                                     double ff_t0, EventLog& log) {
        if (t_ms < blank_until_) return std::nullopt;
        if (!live_) {  // first sample after blanking: the amplifier restarts cold
            sensor_.reset();
            pending_.clear();
            live_ = true;
        }
        if (auto m = sensor_.push(t_ms, nf_mV)) pending_.push_back(*m);

        while (!pending_.empty() && pending_.front() + NsrTemplate::kPostMs <= t_ms) {
            const double m = pending_.front();
            pending_.pop_front();
            const long i0 = std::lround(m - ff_t0);
            const long lo = i0 - static_cast<long>(NsrTemplate::kPreMs);
            const long hi = i0 + static_cast<long>(NsrTemplate::kPostMs);
            if (lo < 0 || hi >= static_cast<long>(ff.size())) continue;  // clipped window
            std::vector<double> win(ff.begin() + lo, ff.begin() + hi + 1);
            const double vtc = vtc_score(win, tpl_);
            log.push_back({m, "sense", {{"vtc", vtc}}});
            beats_.push_back(m);
            if (auto order = icd_.on_beat(m, vtc, log)) {
                blank_until_ = order->resume_t_ms;
                live_ = false;
                pending_.clear();
                return order;
            }
        }
        return std::nullopt;
    }

    IcdLogic& icd() { return icd_; }
    const IcdLogic& icd() const { return icd_; }
    const std::vector<double>& beats() const { return beats_; }

  private:
    const NsrTemplate& tpl_;
    BeatSensor sensor_;
    IcdLogic icd_;
    std::deque<double> pending_;
    std::vector<double> beats_;
    double blank_until_ = -1e300;
    bool live_ = true;
};

std::string classify_final_rhythm(const std::vector<double>& beats, double duration_ms,
                                  const DetectionParams& det) {
    if (beats.size() < 2 || beats.back() < duration_ms - 3000.0) return "quiescent";
    const std::size_t n = std::min<std::size_t>(beats.size(), 6);
    double sum = 0;
    for (std::size_t i = beats.size() - n + 1; i < beats.size(); ++i) sum += beats[i] - beats[i - 1];
    const double mean = sum / static_cast<double>(n - 1);
    return mean < det.th(ZoneId::VT1) ? "tachycardia" : "sinus";
}

double mean_rate_bpm(const std::vector<double>& beats) {
    if (beats.size() < 2) return 0.0;
    const double span = beats.back() - beats.front();
    if (!(span > 0.0)) return 0.0;
    return 60000.0 * static_cast<double>(beats.size() - 1) / span;
}

std::vector<TherapyRecord> collect_therapies(const EventLog& log) {
    std::vector<TherapyRecord> out;
    for (const auto& e : events_of_type(log, "therapy")) {
        const std::string kind = e.data.at("kind").get<std::string>();
        if (kind == "Inhibit") continue;
        TherapyRecord r;
        r.t_ms = e.t_ms;
        r.zone = e.data.at("zone").get<std::string>();
        r.kind = kind;
        if (e.data.contains("scheme")) r.scheme = e.data.at("scheme").get<std::string>();
        if (e.data.contains("n_pulses")) r.n_pulses = e.data.at("n_pulses").get<int>();
        if (e.data.contains("avg_vperiod_ms"))
            r.avg_vperiod_ms = e.data.at("avg_vperiod_ms").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

EpisodeReport assemble_report(Outcome outcome, const DeviceHarness& dev, EventLog log,
                              double duration_ms, const DetectionParams& det) {
    EpisodeReport rep;
    rep.outcome = outcome;
    const IcdLogic& icd = dev.icd();
    rep.therapies_delivered = icd.therapies_delivered();
    rep.shocks_delivered = icd.shocks_delivered();
    rep.inhibited = icd.inhibit_seen();
    rep.terminated_t_ms = icd.terminated() ? icd.terminated_t_ms() : -1.0;
    rep.sensed_beats = static_cast<int>(dev.beats().size());
    rep.mean_bpm = mean_rate_bpm(dev.beats());
    rep.zone_entries = static_cast<int>(events_of_type(log, "zone_entry").size());
    rep.duration_ms = duration_ms;
    rep.final_rhythm = classify_final_rhythm(dev.beats(), duration_ms, det);
    rep.therapies = collect_therapies(log);
    rep.events = std::move(log);
    validate_report(rep);
    return rep;
}

Outcome resolve_outcome(const IcdLogic& icd, bool allow_unresolved) {
    if (icd.terminated()) return Outcome::Terminated;
    if (icd.exhausted()) return Outcome::TherapyExhausted;
    if (icd.therapies_delivered() > 0) {
        if (allow_unresolved) return Outcome::Unresolved;
        throw SimulationError("episode unresolved at the extension cap; raise duration_ms");
    }
    if (icd.inhibit_seen()) return Outcome::Inhibited;
    return Outcome::NoTherapyNeeded;
}

}  // namespace

std::string outcome_label(Outcome o, int therapies) {
    switch (o) {
        case Outcome::NoTherapyNeeded: return "no_therapy_needed";
        case Outcome::Inhibited: return "inhibited";
        case Outcome::Terminated: return "terminated";
        case Outcome::TherapyExhausted: return "therapy_exhausted";
        case Outcome::Unresolved: return therapies > 0 ? "unresolved" : "no_therapy_needed";
    }
    return "?";
}

nlohmann::json report_json(const EpisodeReport& r) {
    nlohmann::json therapies = nlohmann::json::array();
    for (const auto& t : r.therapies) {
        nlohmann::json jt{{"t_ms", t.t_ms}, {"zone", t.zone}, {"kind", t.kind}};
        if (!t.scheme.empty()) {
            jt["scheme"] = t.scheme;
            jt["n_pulses"] = t.n_pulses;
            jt["avg_vperiod_ms"] = t.avg_vperiod_ms;
        }
        therapies.push_back(std::move(jt));
    }
    return nlohmann::json{{"outcome", outcome_label(r.outcome, r.therapies_delivered)},
                          {"therapies_delivered", r.therapies_delivered},
                          {"shocks_delivered", r.shocks_delivered},
                          {"inhibited", r.inhibited},
                          {"terminated_t_ms", r.terminated_t_ms},
                          {"therapies", std::move(therapies)},
                          {"sensed_beats", r.sensed_beats},
                          {"mean_bpm", r.mean_bpm},
                          {"zone_entries", r.zone_entries},
                          {"duration_ms", r.duration_ms},
                          {"final_rhythm", r.final_rhythm}};
}

void validate_report(const EpisodeReport& r) {
    int delivered = 0, shocks = 0, inhibits = 0;
    for (const auto& e : events_of_type(r.events, "therapy")) {
        const std::string kind = e.data.at("kind").get<std::string>();
        if (kind == "Inhibit") ++inhibits;
        else ++delivered;
        if (kind == "Shock") ++shocks;
    }
    if (delivered != r.therapies_delivered)
        throw SimulationError("report: therapy events disagree with therapies_delivered");
    if (shocks != r.shocks_delivered)
        throw SimulationError("report: shock events disagree with shocks_delivered");
    if (static_cast<int>(r.therapies.size()) != r.therapies_delivered)
        throw SimulationError("report: therapy records disagree with therapies_delivered");
    if (r.inhibited != (inhibits > 0))
        throw SimulationError("report: inhibited flag disagrees with the event log");
    const bool term_event = !events_of_type(r.events, "termination").empty();
    if ((r.outcome == Outcome::Terminated) != term_event)
        throw SimulationError("report: terminated outcome disagrees with the event log");
    if ((r.outcome == Outcome::TherapyExhausted) !=
        !events_of_type(r.events, "exhausted").empty())
        throw SimulationError("report: exhausted outcome disagrees with the event log");
    if (r.zone_entries != static_cast<int>(events_of_type(r.events, "zone_entry").size()))
        throw SimulationError("report: zone_entries disagrees with the event log");
}

EventLog device_events(const EventLog& log) {
    static const std::set<std::string> kinds{"sense",   "zone_entry",  "zone_exit",
                                            "sustained", "therapy",    "termination",
                                            "exhausted"};
    EventLog out;
    for (const auto& e : log)
        if (kinds.count(e.type)) out.push_back(e);
    return out;
}

PreparedScenario prepare_scenario(const Scenario& sc) {
    TissueGrid grid = build_grid(sc);
    ProbeKernels probes(grid, sc.leads);

    // Template phase: quiet sinus pacing on the patient's own sheet.
    Tissue tissue(grid, sc.phys.ion, sc.phys.dt_ms);
    auto [v0, h0] = init_limit_cycle(sc.phys.ion, sc.phys.dt_ms);
    tissue.seed_uniform(v0, h0);
    EgmSamples samples;
    tissue.run(sinus_schedule(sc, grid, sc.phys.template_ms), sc.phys.template_ms, &probes,
               &samples);
    EgmTrace template_trace = synth_egm(samples, sc.leads);
    NsrTemplate tpl = build_nsr_template(template_trace, sc.icd.sensing);

    std::optional<InductionResult> induction;
    if (sc.kind == EpisodeKind::Reentrant)
        induction = induce_reentry(grid, sc.phys.ion, sc.phys.dt_ms, reentry_protocol(sc, grid),
                                   scenario_hash(sc));

    return PreparedScenario{sc,
                            std::move(grid),
                            std::move(probes),
                            std::move(template_trace),
                            std::move(tpl),
                            std::move(induction)};
}

RunArtifacts run_closed_loop(const PreparedScenario& ps) {
    const Scenario& sc = ps.sc;
    const std::uint64_t hash = scenario_hash(sc);
    const double hard_cap = sc.duration_ms + 90000.0;

    Tissue tissue(ps.grid, sc.phys.ion, sc.phys.dt_ms);
    EventLog log;
    int sinus_node = -1;
    if (ps.induction) {
        restore_checkpoint(tissue, ps.induction->checkpoint, hash);
        log.push_back({0.0, "induced",
                       {{"cycle_length_ms", ps.induction->cycle_length_ms},
                        {"cycle_jitter_ms", ps.induction->cycle_jitter_ms},
                        {"cycles_observed", ps.induction->cycles_observed}}});
        // Escape pacemaker: during the tachycardia the circuit's wavefronts
        // keep re-exciting the sinus site, so the node stays overdrive-
        // suppressed; once the circuit is gone it fires after one quiet
        // cycle and sinus rhythm resumes on its own.
        if (!ps.grid.sinus_site.empty())
            sinus_node = ps.grid.sinus_site[ps.grid.sinus_site.size() / 2];
    } else {
        auto [v0, h0] = init_limit_cycle(sc.phys.ion, sc.phys.dt_ms);
        tissue.seed_uniform(v0, h0);
    }

    StimulusSchedule base, escape, therapy;
    if (!ps.induction) {
        base = sinus_schedule(sc, ps.grid, hard_cap + sc.phys.sinus_cl_ms);
        for (auto& s : focal_schedule(sc, ps.grid)) base.push_back(s);
    }

    EgmSamples committed;
    std::vector<double> nf, ff;
    DeviceHarness dev(sc.icd, ps.nsr_template);

    // Rollback must restore the pacemaker's suppression clock along with
    // the fields, or a rolled-back run could fire an escape beat the
    // uninterrupted run would not.
    double sinus_last_active = 0.0;
    struct Snap {
        Checkpoint ck;
        double sinus_last_active;
    };
    std::vector<Snap> snaps;
    snaps.push_back({make_checkpoint(tissue, hash), sinus_last_active});
    log.push_back({0.0, "checkpoint", {{"t_ms", 0.0}}});
    std::set<double> extra_cks;  // pre-therapy snapshots, floor(first stimulus)
    double t_end = sc.duration_ms;

    StimulusSchedule active;
    while (true) {
        const double t_now = tissue.state().t_ms;
        if (t_now >= t_end) {
            // Run on past the nominal duration while therapy is in flight;
            // an episode that refuses to resolve fails loudly at the cap.
            if (dev.icd().therapies_delivered() > 0 && !dev.icd().done() && t_end < hard_cap) {
                t_end = std::min(t_end + 1000.0, hard_cap);
                continue;
            }
            break;
        }

        if (sinus_node >= 0 && t_now - sinus_last_active >= sc.phys.sinus_cl_ms &&
            (escape.empty() || t_now - escape.back().onset_ms >= 10.0)) {
            escape.push_back({ps.grid.sinus_site, t_now, sc.phys.stim_duration_ms,
                              sc.phys.stim_amplitude});
            log.push_back({t_now, "sinus_escape", {}});
        }

        active.clear();
        const double nb = t_now + 1.0;
        for (const auto* sched : {&base, &escape, &therapy})
            for (const auto& s : *sched)
                if (s.onset_ms < nb && s.onset_ms + s.duration_ms > t_now) active.push_back(s);

        const std::size_t k = committed.t_ms.size();
        tissue.run(active, 1.0, &ps.probes, &committed);
        nf.push_back(sc.leads.gain * (committed.phi_tip[k] - committed.phi_ring[k]));
        ff.push_back(sc.leads.gain * (committed.phi_coil[k] - committed.phi_can[k]));

        if (sinus_node >= 0 && tissue.state().vm[sinus_node] >= sc.phys.ion.v_gate)
            sinus_last_active = tissue.state().t_ms;

        if (auto order = dev.feed(committed.t_ms[k], nf[k], ff, 0.0, log)) {
            double first_stim;
            if (order->decision.kind == TherapyKind::Shock) {
                therapy.push_back({all_active_nodes(ps.grid), order->shock.onset_ms,
                                   order->shock.duration_ms, order->shock.amplitude});
                first_stim = order->shock.onset_ms;
            } else {
                for (double pt : order->pulses.pulse_times_ms)
                    therapy.push_back({ps.grid.tip_footprint, pt, order->pulses.pulse_duration_ms,
                                       order->pulses.amplitude});
                first_stim = order->pulses.pulse_times_ms.front();
            }

            const double anchor = dev.beats().back();  // the decision beat
            while (snaps.size() > 1 && snaps.back().ck.t_ms > anchor) snaps.pop_back();
            const Snap& snap = snaps.back();
            log.push_back({anchor, "rollback",
                           {{"restored_to_ms", snap.ck.t_ms},
                            {"first_stimulus_ms", first_stim},
                            {"resume_t_ms", order->resume_t_ms}}});
            restore_checkpoint(tissue, snap.ck, hash);
            sinus_last_active = snap.sinus_last_active;
            // escape beats and bookkeeping events past the restore point
            // belong to the abandoned timeline; the rerun re-derives them
            std::erase_if(escape,
                          [&](const Stimulus& s) { return s.onset_ms >= snap.ck.t_ms; });
            std::erase_if(log, [&](const Event& e) {
                return e.t_ms > snap.ck.t_ms &&
                       (e.type == "checkpoint" || e.type == "sinus_escape");
            });
            committed.truncate_from(snap.ck.t_ms);
            nf.resize(committed.t_ms.size());
            ff.resize(committed.t_ms.size());

            const double pre = std::floor(first_stim);
            if (pre > snap.ck.t_ms && pre < hard_cap) extra_cks.insert(pre);
            continue;
        }

        const bool cadence = std::fmod(nb, sc.phys.checkpoint_every_ms) == 0.0;
        if (cadence || extra_cks.count(nb)) {
            snaps.push_back({make_checkpoint(tissue, hash), sinus_last_active});
            log.push_back({nb, "checkpoint", {{"t_ms", nb}}});
            extra_cks.erase(nb);
        }
    }

    const double final_t = tissue.state().t_ms;
    const Outcome outcome = resolve_outcome(dev.icd(), /*allow_unresolved=*/false);
    std::sort(log.begin(), log.end(),
              [](const Event& a, const Event& b) { return a.t_ms < b.t_ms; });

    RunArtifacts art{synth_egm(committed, sc.leads),
                     assemble_report(outcome, dev, std::move(log), final_t, sc.icd.detection),
                     ps.template_trace, ps.nsr_template, ps.induction};
    return art;
}

RunArtifacts run_closed_loop(const Scenario& sc) { return run_closed_loop(prepare_scenario(sc)); }

EpisodeReport replay_open_loop(const EgmTrace& trace, const IcdParams& icd,
                               const NsrTemplate& tpl) {
    trace.validate();
    if (trace.dt_ms != 1.0) throw ConfigError("replay: trace must be sampled at 1 ms");

    DeviceHarness dev(icd, tpl);
    EventLog log;
    for (std::size_t k = 0; k < trace.size(); ++k)
        dev.feed(trace.time_at(k), trace.nf_mV[k], trace.ff_mV, trace.t0_ms, log);

    const double end_t = trace.size() ? trace.time_at(trace.size() - 1) + trace.dt_ms : 0.0;
    const Outcome outcome = resolve_outcome(dev.icd(), /*allow_unresolved=*/true);
    return assemble_report(outcome, dev, std::move(log), end_t, icd.detection);
}

void write_artifacts(const RunArtifacts& art, const Scenario& sc, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    write_egm_csv(art.trace, (dir / "egm.csv").string());
    write_event_log(art.report.events, (dir / "events.jsonl").string());
    {
        std::ofstream f(dir / "report.json");
        if (!f) throw SimulationError("cannot write " + (dir / "report.json").string());
        f << report_json(art.report).dump(2) << "\n";
    }
    write_template_csv(art.nsr_template, (dir / "template.csv").string());
    write_egm_csv(art.template_trace, (dir / "template_egm.csv").string());
    if (art.induction) {
        std::ofstream f(dir / "induction.json");
        f << nlohmann::json{{"cycle_length_ms", art.induction->cycle_length_ms},
                            {"cycle_jitter_ms", art.induction->cycle_jitter_ms},
                            {"cycles_observed", art.induction->cycles_observed},
                            {"witness_times_ms", art.induction->witness_times_ms}}
                 .dump(2)
          << "\n";
    }
    if (sc.plots) {
        write_text_file((dir / "egm.svg").string(), plot_egm_svg(art.trace, art.report.events));
        write_text_file((dir / "periods.svg").string(),
                        plot_periods_svg(art.report.events, sc.icd.detection));
    }
}

}  // namespace simicd
