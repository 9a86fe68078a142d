#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "simicd/errors.hpp"
#include "simicd/orchestrator.hpp"
#include "simicd/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace simicd;

namespace {

void apply_thread_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("SIMICD_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

void print_summary(const EpisodeReport& r) {
    std::printf("outcome: %s\n", outcome_label(r.outcome, r.therapies_delivered).c_str());
    std::printf("therapies: %d (shocks %d)  beats: %d  mean rate: %.1f bpm\n",
                r.therapies_delivered, r.shocks_delivered, r.sensed_beats, r.mean_bpm);
    for (const auto& t : r.therapies)
        std::printf("  %8.1f ms  %-4s %-6s %s\n", t.t_ms, t.zone.c_str(), t.kind.c_str(),
                    t.scheme.c_str());
    if (r.terminated_t_ms >= 0) std::printf("terminated at %.1f ms\n", r.terminated_t_ms);
    std::printf("final rhythm: %s\n", r.final_rhythm.c_str());
}

int cmd_run(const std::string& config, const std::string& out, bool plots) {
    Scenario sc = load_scenario(config);
    if (plots) sc.plots = true;
    RunArtifacts art = run_closed_loop(sc);
    write_artifacts(art, sc, out);
    print_summary(art.report);
    std::printf("artifacts in %s\n", out.c_str());
    return 0;
}

int cmd_replay(const std::string& egm_path, const std::string& tpl_path,
               const std::string& config, const std::string& out) {
    Scenario sc = load_scenario(config);
    EgmTrace trace;
    NsrTemplate tpl;
    try {
        trace = read_egm_csv(egm_path);
        tpl = read_template_csv(tpl_path);
    } catch (const std::exception& e) {
        // bad input files are a configuration problem, not a simulation one
        throw ConfigError(e.what());
    }
    EpisodeReport rep = replay_open_loop(trace, sc.icd, tpl);

    fs::create_directories(out);
    write_event_log(rep.events, (fs::path(out) / "events.jsonl").string());
    std::ofstream f(fs::path(out) / "report.json");
    f << report_json(rep).dump(2) << "\n";
    print_summary(rep);
    return 0;
}

int cmd_induce(const std::string& config, const std::string& out) {
    Scenario sc = load_scenario(config);
    if (sc.kind != EpisodeKind::Reentrant)
        throw ConfigError("induce needs a reentrant episode config");
    TissueGrid grid = build_grid(sc);
    fs::create_directories(out);
    try {
        InductionResult res = induce_reentry(grid, sc.phys.ion, sc.phys.dt_ms,
                                             reentry_protocol(sc, grid), scenario_hash(sc));
        save_checkpoint(res.checkpoint, (fs::path(out) / "checkpoint.bin").string());
        std::ofstream f(fs::path(out) / "induction.json");
        f << nlohmann::json{{"cycle_length_ms", res.cycle_length_ms},
                            {"cycle_jitter_ms", res.cycle_jitter_ms},
                            {"cycles_observed", res.cycles_observed},
                            {"witness_times_ms", res.witness_times_ms}}
                 .dump(2)
          << "\n";
        std::printf("induced: cycle length %.1f ms (jitter %.2f ms over %d cycles)\n",
                    res.cycle_length_ms, res.cycle_jitter_ms, res.cycles_observed);
        return 0;
    } catch (const InductionFailure& e) {
        const std::string csv = (fs::path(out) / "activation_map.csv").string();
        write_activation_map_csv(e.activation, grid, csv);
        write_text_file((fs::path(out) / "activation_map.svg").string(),
                        plot_activation_svg(e.activation, grid));
        std::fprintf(stderr, "induction failed: %s\nactivation map: %s\n", e.what(), csv.c_str());
        return 1;
    }
}

struct SweepGrid {
    std::vector<double> pct;
    std::vector<int> n_pulses;
};

SweepGrid parse_sweep_grid(const nlohmann::json& raw) {
    if (!raw.contains("sweep")) throw ConfigError("sweep: config has no 'sweep' block");
    const auto& sw = raw.at("sweep");
    for (auto it = sw.begin(); it != sw.end(); ++it)
        if (it.key() != "pct" && it.key() != "n_pulses")
            throw ConfigError("sweep: unknown key '" + it.key() + "'");
    SweepGrid g;
    for (const auto& v : sw.value("pct", nlohmann::json::array())) g.pct.push_back(v.get<double>());
    for (const auto& v : sw.value("n_pulses", nlohmann::json::array()))
        g.n_pulses.push_back(v.get<int>());
    if (g.pct.empty() || g.n_pulses.empty())
        throw ConfigError("sweep: 'pct' and 'n_pulses' must both be non-empty arrays");
    return g;
}

int cmd_sweep(const std::string& config, const std::string& out) {
    Scenario sc = load_scenario(config);
    SweepGrid grid = parse_sweep_grid(sc.raw);

    // the tissue, template and induced circuit are shared by every cell:
    // only the device programming varies
    PreparedScenario ps = prepare_scenario(sc);

    fs::create_directories(out);
    std::ofstream summary(fs::path(out) / "summary.csv");
    summary << "pct,n_pulses,outcome,therapies,shocks,terminated_t_ms\n";

    for (double pct : grid.pct) {
        for (int np : grid.n_pulses) {
            PreparedScenario cell = ps;
            for (ZoneId z : {ZoneId::VT1, ZoneId::VT}) {
                AtpZoneParams& a = cell.sc.icd.atp.for_zone(z);
                a.coupling_interval_pct = pct;
                a.pulse_interval_pct = pct;
                a.n_pulses = np;
            }
            char name[48];
            std::snprintf(name, sizeof name, "pct%g_p%d", pct, np);
            RunArtifacts art = run_closed_loop(cell);
            write_artifacts(art, cell.sc, (fs::path(out) / name).string());
            const EpisodeReport& r = art.report;
            summary << pct << ',' << np << ','
                    << outcome_label(r.outcome, r.therapies_delivered) << ','
                    << r.therapies_delivered << ',' << r.shocks_delivered << ','
                    << r.terminated_t_ms << "\n";
            std::printf("%-12s %s (%d therapies)\n", name,
                        outcome_label(r.outcome, r.therapies_delivered).c_str(),
                        r.therapies_delivered);
        }
    }
    std::printf("summary: %s\n", (fs::path(out) / "summary.csv").string().c_str());
    return 0;
}

int cmd_plot(const std::string& egm_path, const std::string& events_path,
             const std::string& out) {
    EgmTrace trace;
    EventLog events;
    try {
        trace = read_egm_csv(egm_path);
        if (!events_path.empty()) events = read_event_log(events_path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    fs::create_directories(out);
    write_text_file((fs::path(out) / "egm.svg").string(), plot_egm_svg(trace, events));
    if (!events.empty()) {
        DetectionParams det;  // stock zone guides
        write_text_file((fs::path(out) / "periods.svg").string(),
                        plot_periods_svg(events, det));
    }
    std::printf("plots in %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();

    CLI::App app{"closed-loop ICD / cardiac tissue simulator"};
    app.require_subcommand(1);

    std::string config, out = "out", egm, events, tpl;
    bool plots = false;

    auto* run = app.add_subcommand("run", "closed-loop episode simulation");
    run->add_option("-c,--config", config, "scenario JSON")->required();
    run->add_option("-o,--out", out, "output directory");
    run->add_flag("--plots", plots, "emit SVG plots");

    auto* replay = app.add_subcommand("replay", "device decisions over a recorded EGM");
    replay->add_option("--egm", egm, "EGM CSV")->required();
    replay->add_option("--template", tpl, "NSR template CSV")->required();
    replay->add_option("-c,--config", config, "scenario JSON (device programming)")->required();
    replay->add_option("-o,--out", out, "output directory");

    auto* induce = app.add_subcommand("induce", "re-entry induction only");
    induce->add_option("-c,--config", config, "scenario JSON")->required();
    induce->add_option("-o,--out", out, "output directory");

    auto* sweep = app.add_subcommand("sweep", "ATP parameter sweep");
    sweep->add_option("-c,--config", config, "scenario JSON with a sweep block")->required();
    sweep->add_option("-o,--out", out, "output directory");

    auto* plot = app.add_subcommand("plot", "SVG plots from recorded artifacts");
    plot->add_option("--egm", egm, "EGM CSV")->required();
    plot->add_option("--events", events, "event log JSONL");
    plot->add_option("-o,--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad invocation is a config error
    }

    try {
        if (run->parsed()) return cmd_run(config, out, plots);
        if (replay->parsed()) return cmd_replay(egm, tpl, config, out);
        if (induce->parsed()) return cmd_induce(config, out);
        if (sweep->parsed()) return cmd_sweep(config, out);
        if (plot->parsed()) return cmd_plot(egm, events, out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
