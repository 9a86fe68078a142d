#include "simicd/electrodes.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "simicd/errors.hpp"
#include "simicd/kernel_detail.hpp"

namespace simicd {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void check_clearance(const Electrode& e, const TissueGrid& grid) {
    const double min_dist = 0.25 * grid.dx_mm;
    for (const auto& p : e.points) {
        // nearest lattice node: clamp the rounded index per axis
        const double gx = clamp(std::round(p.x_mm / grid.dx_mm), 0, grid.nx - 1) * grid.dx_mm;
        const double gy = clamp(std::round(p.y_mm / grid.dx_mm), 0, grid.ny - 1) * grid.dx_mm;
        const double d2 = (p.x_mm - gx) * (p.x_mm - gx) + (p.y_mm - gy) * (p.y_mm - gy) +
                          p.z_mm * p.z_mm;
        if (d2 < min_dist * min_dist)
            throw ConfigError("electrode '" + e.name + "' is closer than 0.25*dx to a tissue node");
    }
}

std::vector<double> build_kernel(const Electrode& e, const TissueGrid& grid) {
    if (e.points.empty()) throw ConfigError("electrode '" + e.name + "' has no sample points");
    check_clearance(e, grid);
    std::vector<double> k(grid.n_nodes(), 0.0);
    for (const auto& p : e.points) {
        for (int i = 0; i < grid.n_nodes(); ++i) {
            const double dx = grid.pos_x_mm(i) - p.x_mm;
            const double dy = grid.pos_y_mm(i) - p.y_mm;
            const double r = std::sqrt(dx * dx + dy * dy + p.z_mm * p.z_mm);
            k[i] += 1.0 / r;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(e.points.size());
    for (double& v : k) v *= inv_n;
    return k;
}

// -div(w grad vm) at node i; row-partial accumulation happens in callers
inline double source_at(const TissueGrid& g, const double* vm, int i, int x, int y) {
    return -detail::diffuse_node(vm, g.wE.data(), g.wN.data(), i, x, y, g.nx, g.ny);
}

}  // namespace

Electrode point_electrode(std::string name, Vec3 p) { return {std::move(name), {p}}; }

Electrode segment_electrode(std::string name, Vec3 a, Vec3 b, int n_points) {
    if (n_points < 5) throw ConfigError("segment electrode needs at least 5 sample points");
    Electrode e{std::move(name), {}};
    e.points.reserve(n_points);
    for (int k = 0; k < n_points; ++k) {
        const double f = static_cast<double>(k) / (n_points - 1);
        e.points.push_back({a.x_mm + f * (b.x_mm - a.x_mm), a.y_mm + f * (b.y_mm - a.y_mm),
                            a.z_mm + f * (b.z_mm - a.z_mm)});
    }
    return e;
}

LeadConfig LeadConfig::defaults() {
    LeadConfig lc;
    lc.tip = point_electrode("tip", {40, 10, 1});
    lc.ring = point_electrode("ring", {40, 13, 1});
    lc.coil = segment_electrode("coil", {33, 10, 2}, {47, 10, 2}, 8);
    lc.can = point_electrode("can", {-100, 60, 40});
    lc.gain = 35.0;  // ~5 mV near-field R waves in sinus rhythm at this geometry
    return lc;
}

double phi_e(const TissueState& state, const TissueGrid& grid, const Electrode& e) {
    const auto k = build_kernel(e, grid);
    const double* vm = state.vm.data();
    double total = 0.0;
    for (int y = 0; y < grid.ny; ++y) {
        double row = 0.0;
        for (int x = 0; x < grid.nx; ++x) {
            const int i = y * grid.nx + x;
            row += source_at(grid, vm, i, x, y) * k[i];
        }
        total += row;
    }
    return total;
}

void EgmSamples::append(const EgmSamples& tail) {
    t_ms.insert(t_ms.end(), tail.t_ms.begin(), tail.t_ms.end());
    phi_tip.insert(phi_tip.end(), tail.phi_tip.begin(), tail.phi_tip.end());
    phi_ring.insert(phi_ring.end(), tail.phi_ring.begin(), tail.phi_ring.end());
    phi_coil.insert(phi_coil.end(), tail.phi_coil.begin(), tail.phi_coil.end());
    phi_can.insert(phi_can.end(), tail.phi_can.begin(), tail.phi_can.end());
}

void EgmSamples::truncate_from(double t_ms_cut) {
    size_t n = t_ms.size();
    while (n > 0 && t_ms[n - 1] >= t_ms_cut) --n;
    t_ms.resize(n);
    phi_tip.resize(n);
    phi_ring.resize(n);
    phi_coil.resize(n);
    phi_can.resize(n);
}

ProbeKernels::ProbeKernels(const TissueGrid& grid, const LeadConfig& leads)
    : leads_(leads),
      k_tip_(build_kernel(leads.tip, grid)),
      k_ring_(build_kernel(leads.ring, grid)),
      k_coil_(build_kernel(leads.coil, grid)),
      k_can_(build_kernel(leads.can, grid)) {}

void ProbeKernels::sample(const TissueState& state, const TissueGrid& grid,
                          EgmSamples& out) const {
    const int ny = grid.ny, nx = grid.nx;
    const double* vm = state.vm.data();
    std::vector<double> row_tip(ny), row_ring(ny), row_coil(ny), row_can(ny);

#pragma omp parallel for schedule(static)
    for (int y = 0; y < ny; ++y) {
        double pt = 0, pr = 0, pc = 0, pn = 0;
        for (int x = 0; x < nx; ++x) {
            const int i = y * nx + x;
            const double s = source_at(grid, vm, i, x, y);
            pt += s * k_tip_[i];
            pr += s * k_ring_[i];
            pc += s * k_coil_[i];
            pn += s * k_can_[i];
        }
        row_tip[y] = pt;
        row_ring[y] = pr;
        row_coil[y] = pc;
        row_can[y] = pn;
    }

    double t = 0, r = 0, c = 0, n = 0;
    for (int y = 0; y < ny; ++y) {
        t += row_tip[y];
        r += row_ring[y];
        c += row_coil[y];
        n += row_can[y];
    }
    out.t_ms.push_back(state.t_ms);
    out.phi_tip.push_back(t);
    out.phi_ring.push_back(r);
    out.phi_coil.push_back(c);
    out.phi_can.push_back(n);
}

EgmTrace synth_egm(const EgmSamples& samples, const LeadConfig& leads) {
    if (samples.t_ms.empty()) throw SimulationError("no probe samples to synthesize");
    EgmTrace trace;
    trace.t0_ms = samples.t_ms.front();
    trace.dt_ms = 1.0;
    const size_t n = samples.t_ms.size();
    trace.nf_mV.resize(n);
    trace.ff_mV.resize(n);
    for (size_t k = 0; k < n; ++k) {
        if (k > 0 && std::abs(samples.t_ms[k] - samples.t_ms[k - 1] - 1.0) > 1e-6)
            throw SimulationError("probe sample cadence gap at t=" +
                                  std::to_string(samples.t_ms[k]) + " ms");
        trace.nf_mV[k] = leads.gain * (samples.phi_tip[k] - samples.phi_ring[k]);
        trace.ff_mV[k] = leads.gain * (samples.phi_coil[k] - samples.phi_can[k]);
    }
    return trace;
}

}  // namespace simicd
