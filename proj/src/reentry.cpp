#include "simicd/reentry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace simicd {

namespace {

struct IsthmusGeometry {
    std::vector<int> nodes;
    int y_min = 0, y_max = 0;
    int midpoint = -1;
};

IsthmusGeometry isthmus_geometry(const TissueGrid& grid) {
    IsthmusGeometry geo;
    for (int i = 0; i < grid.n_nodes(); ++i)
        if (grid.isthmus[i] && grid.active(i)) geo.nodes.push_back(i);
    if (geo.nodes.empty()) throw ConfigError("grid has no isthmus to induce around");
    geo.y_min = grid.ny;
    geo.y_max = 0;
    double cx = 0;
    for (int i : geo.nodes) {
        geo.y_min = std::min(geo.y_min, i / grid.nx);
        geo.y_max = std::max(geo.y_max, i / grid.nx);
        cx += i % grid.nx;
    }
    cx /= static_cast<double>(geo.nodes.size());
    const double cy = 0.5 * (geo.y_min + geo.y_max);
    double best = 1e300;
    for (int i : geo.nodes) {
        const double dx = i % grid.nx - cx, dy = i / grid.nx - cy;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
            best = d2;
            geo.midpoint = i;
        }
    }
    return geo;
}

std::vector<int> end_rows(const IsthmusGeometry& geo, const TissueGrid& grid, bool top,
                          int depth = 2) {
    std::vector<int> nodes;
    for (int i : geo.nodes) {
        const int y = i / grid.nx;
        if (top ? y > geo.y_max - depth : y < geo.y_min + depth) nodes.push_back(i);
    }
    return nodes;
}

/// Tracks first activation per node; sampled every millisecond.
struct ActivationTracker {
    ActivationMap map;
    double v_gate;
    explicit ActivationTracker(int n, double gate) : map(n, -1.0), v_gate(gate) {}
    void observe(const TissueState& s) {
        for (size_t i = 0; i < s.vm.size(); ++i)
            if (map[i] < 0 && s.vm[i] > v_gate) map[i] = s.t_ms;
    }
};

/// Upward v_gate crossings at one node with a refractory deadtime.
struct WitnessTracker {
    int node;
    double v_gate, deadtime_ms;
    double prev_vm = 0;
    std::vector<double> times;
    bool observe(const TissueState& s) {
        const double v = s.vm[node];
        const bool crossed = prev_vm < v_gate && v >= v_gate &&
                             (times.empty() || s.t_ms - times.back() > deadtime_ms);
        prev_vm = v;
        if (crossed) times.push_back(s.t_ms);
        return crossed;
    }
};

CycleMeasurement cycle_stats(const std::vector<double>& times, size_t skip_diffs) {
    CycleMeasurement m;
    if (times.size() < 2) return m;
    std::vector<double> diffs;
    for (size_t k = 1; k < times.size(); ++k) diffs.push_back(times[k] - times[k - 1]);
    if (diffs.size() > skip_diffs && skip_diffs > 0) diffs.erase(diffs.begin(), diffs.begin() + skip_diffs);
    m.cycles = static_cast<int>(diffs.size());
    for (double d : diffs) m.mean_cl_ms += d;
    m.mean_cl_ms /= diffs.size();
    for (double d : diffs) m.max_jitter_ms = std::max(m.max_jitter_ms, std::abs(d - m.mean_cl_ms));
    return m;
}

}  // namespace

InductionResult induce_reentry(const TissueGrid& grid, const IonicParams& ion, double dt_ms,
                               const ReentryProtocol& proto, std::uint64_t config_hash) {
    Tissue tissue(grid, ion, dt_ms);
    const auto geo = isthmus_geometry(tissue.grid());
    const auto blocked = end_rows(geo, tissue.grid(), proto.block_top);
    if (blocked.empty()) throw ConfigError("isthmus end has no nodes to block");

    auto [vm0, h0] = init_limit_cycle(ion, dt_ms);
    tissue.seed_uniform(vm0, h0);
    tissue.apply_conduction_block(blocked);

    std::vector<int> s1 = proto.s1_site.empty() ? tissue.grid().sinus_site : proto.s1_site;
    if (s1.empty()) throw ConfigError("no S1 site available for induction");
    StimulusSchedule stim{{s1, proto.s1_time_ms, proto.s1_duration_ms, proto.s1_amplitude}};

    ActivationTracker activation(tissue.grid().n_nodes(), ion.v_gate);
    WitnessTracker witness{geo.midpoint, ion.v_gate, 100.0};
    const long steps_per_ms = std::lround(1.0 / dt_ms);

    bool block_released = false;
    const double t_deadline = proto.s1_time_ms + proto.block_window_ms;
    const double t_end = proto.s1_time_ms + proto.observe_ms;

    while (tissue.state().t_ms < t_end) {
        tissue.step(stim);
        const auto& st = tissue.state();
        if (st.step_count % steps_per_ms == 0) activation.observe(st);
        witness.observe(st);
        if (!block_released && !witness.times.empty()) {
            // the wavefront has entered the isthmus: restore conduction
            tissue.release_conduction_block();
            block_released = true;
        }
        if (!block_released && st.t_ms > t_deadline)
            throw InductionFailure("induction failed: wavefront never entered the isthmus within " +
                                       std::to_string(proto.block_window_ms) + " ms",
                                   std::move(activation.map));
        if (static_cast<int>(witness.times.size()) >= proto.settle_cycles + 1) break;
    }

    const int cycles = static_cast<int>(witness.times.size()) - 1;
    if (cycles < proto.min_cycles)
        throw InductionFailure("induction failed: circuit died after " +
                                   std::to_string(std::max(cycles, 0)) + " cycle(s)",
                               std::move(activation.map));

    InductionResult res;
    res.checkpoint = make_checkpoint(tissue, config_hash);
    res.checkpoint.t_ms = 0.0;  // episode clock starts at the established circuit
    res.checkpoint.step_count = 0;
    const auto stats = cycle_stats(witness.times, 1);
    res.cycle_length_ms = stats.mean_cl_ms;
    res.cycle_jitter_ms = stats.max_jitter_ms;
    res.cycles_observed = cycles;
    res.witness_times_ms = witness.times;
    return res;
}

CycleMeasurement measure_cycles(const TissueGrid& grid, const IonicParams& ion, double dt_ms,
                                const Checkpoint& cp, std::uint64_t config_hash, int n_cycles,
                                double max_wait_ms) {
    Tissue tissue(grid, ion, dt_ms);
    restore_checkpoint(tissue, cp, config_hash);
    const auto geo = isthmus_geometry(tissue.grid());
    WitnessTracker witness{geo.midpoint, ion.v_gate, 100.0};
    witness.prev_vm = tissue.state().vm[geo.midpoint];
    const double t_end = tissue.state().t_ms + max_wait_ms;
    while (tissue.state().t_ms < t_end &&
           static_cast<int>(witness.times.size()) < n_cycles + 1) {
        tissue.step({});
        witness.observe(tissue.state());
    }
    return cycle_stats(witness.times, 0);
}

void write_activation_map_csv(const ActivationMap& map, const TissueGrid& grid,
                              const std::string& path) {
    std::ofstream f(path);
    if (!f) throw SimulationError("cannot write activation map: " + path);
    f << "x_mm,y_mm,t_activate_ms\n";
    for (int i = 0; i < grid.n_nodes(); ++i)
        f << grid.pos_x_mm(i) << ',' << grid.pos_y_mm(i) << ',' << map[i] << '\n';
}

}  // namespace simicd
