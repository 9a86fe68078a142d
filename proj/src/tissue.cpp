#include "simicd/tissue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "simicd/errors.hpp"

namespace simicd {

void IonicParams::validate() const {
    if (tau_in_ms <= 0 || tau_out_ms <= 0 || tau_open_ms <= 0 || tau_close_ms <= 0)
        throw ConfigError("ionic time constants must be positive");
    if (!(v_gate > 0 && v_gate < 1)) throw ConfigError("v_gate must lie in (0,1)");
    if (tau_in_ms >= tau_out_ms)
        throw ConfigError("tau_in must be well below tau_out for an action potential to form");
}

double TissueGrid::max_diffusivity() const {
    double d = 0;
    for (double v : diffusivity) d = std::max(d, v);
    return d;
}

void TissueGrid::rebuild_weights() {
    const int n = n_nodes();
    wE.assign(n, 0.0);
    wN.assign(n, 0.0);
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const int i = idx(x, y);
            if (x + 1 < nx) {
                const double a = diffusivity[i], b = diffusivity[i + 1];
                if (a > 0 && b > 0) wE[i] = 2.0 * a * b / (a + b);
            }
            if (y + 1 < ny) {
                const double a = diffusivity[i], b = diffusivity[i + nx];
                if (a > 0 && b > 0) wN[i] = 2.0 * a * b / (a + b);
            }
        }
    }
}

std::pair<double, double> ionic_step(double vm, double h, const IonicParams& p, double dt_ms) {
    const double dv = h * vm * vm * (1.0 - vm) / p.tau_in_ms - vm / p.tau_out_ms;
    const double dh = vm < p.v_gate ? (1.0 - h) / p.tau_open_ms : -h / p.tau_close_ms;
    double vm_next = vm + dt_ms * dv;
    if (vm_next < 1e-30 && vm_next > -1e-30) vm_next = 0.0;  // keep out of denormal range
    return {vm_next, h + dt_ms * dh};
}

std::pair<double, double> init_limit_cycle(const IonicParams& p, double dt_ms) {
    p.validate();
    const double cycle_ms = 800.0;
    const double stim_dur = 4.0, stim_amp = 450.0;
    double vm = 0.0, h = 1.0;
    const auto steps_per_cycle = static_cast<long>(std::llround(cycle_ms / dt_ms));
    const auto stim_steps = static_cast<long>(std::llround(stim_dur / dt_ms));
    for (int cycle = 0; cycle < 100; ++cycle) {
        for (long s = 0; s < steps_per_cycle; ++s) {
            auto [v2, h2] = ionic_step(vm, h, p, dt_ms);
            if (s < stim_steps) v2 += dt_ms * stim_amp * kStimulusUnit;
            vm = v2;
            h = h2;
        }
    }
    return {vm, h};
}

TissueGrid make_sheet(int nx, int ny, double dx_mm, double diffusivity) {
    if (nx < 1 || ny < 1) throw ConfigError("grid dimensions must be positive");
    if (dx_mm <= 0) throw ConfigError("dx must be positive");
    if (diffusivity < 0) throw ConfigError("diffusivity must be non-negative");
    TissueGrid g;
    g.nx = nx;
    g.ny = ny;
    g.dx_mm = dx_mm;
    g.diffusivity.assign(static_cast<size_t>(nx) * ny, diffusivity);
    g.tau_close_scale.assign(static_cast<size_t>(nx) * ny, 1.0);
    g.tau_open_scale.assign(static_cast<size_t>(nx) * ny, 1.0);
    g.scar.assign(static_cast<size_t>(nx) * ny, 0);
    g.isthmus.assign(static_cast<size_t>(nx) * ny, 0);
    g.rebuild_weights();
    return g;
}

void apply_scar(TissueGrid& grid, const ScarSpec& spec) {
    if (spec.rx_mm <= 0 || spec.ry_mm <= 0) throw ConfigError("scar semi-axes must be positive");
    if (spec.isthmus_factor < 0 || spec.isthmus_factor > 1)
        throw ConfigError("isthmus_factor must lie in [0,1]");
    if (spec.tau_close_factor <= 0 || spec.tau_open_factor <= 0)
        throw ConfigError("gate time-constant factors must be positive");
    if (grid.tau_close_scale.size() != static_cast<size_t>(grid.n_nodes()))
        grid.tau_close_scale.assign(grid.n_nodes(), 1.0);
    if (grid.tau_open_scale.size() != static_cast<size_t>(grid.n_nodes()))
        grid.tau_open_scale.assign(grid.n_nodes(), 1.0);
    for (int i = 0; i < grid.n_nodes(); ++i) {
        const double ex = (grid.pos_x_mm(i) - spec.cx_mm) / spec.rx_mm;
        const double ey = (grid.pos_y_mm(i) - spec.cy_mm) / spec.ry_mm;
        if (ex * ex + ey * ey > 1.0) continue;
        if (std::abs(grid.pos_x_mm(i) - spec.cx_mm) <= spec.isthmus_halfwidth_mm) {
            grid.isthmus[i] = 1;
            grid.diffusivity[i] *= spec.isthmus_factor;
            grid.tau_close_scale[i] = spec.tau_close_factor;
            grid.tau_open_scale[i] = spec.tau_open_factor;
            if (spec.isthmus_factor == 0.0) grid.scar[i] = 1;
        } else {
            grid.scar[i] = 1;
            grid.diffusivity[i] = 0.0;
        }
    }
    grid.rebuild_weights();
}

std::vector<int> block_site(const TissueGrid& grid, double cx_mm, double cy_mm, int half_extent) {
    const int cx = static_cast<int>(std::lround(cx_mm / grid.dx_mm));
    const int cy = static_cast<int>(std::lround(cy_mm / grid.dx_mm));
    std::vector<int> site;
    for (int y = cy - half_extent; y <= cy + half_extent; ++y) {
        for (int x = cx - half_extent; x <= cx + half_extent; ++x) {
            if (x < 0 || x >= grid.nx || y < 0 || y >= grid.ny) continue;
            const int i = grid.idx(x, y);
            if (grid.active(i)) site.push_back(i);
        }
    }
    if (site.empty()) throw ConfigError("stimulus site contains no active nodes");
    return site;
}

std::vector<int> all_active_nodes(const TissueGrid& grid) {
    std::vector<int> site;
    site.reserve(grid.n_nodes());
    for (int i = 0; i < grid.n_nodes(); ++i)
        if (grid.active(i)) site.push_back(i);
    return site;
}

}  // namespace simicd
