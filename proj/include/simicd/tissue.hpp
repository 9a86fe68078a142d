#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace simicd {

/// Stimulus amplitudes are given in the same units as the sinus pacing
/// default (450); one unit adds this much dvm/dt to the normalized potential.
constexpr double kStimulusUnit = 0.001;  // 1/ms per amplitude unit

/// Two-variable phenomenological ionic model (fast inward mass h, normalized
/// potential vm in [0,1]): dvm/dt = h vm^2 (1-vm)/tau_in - vm/tau_out,
/// dh/dt = (1-h)/tau_open below the gate voltage, -h/tau_close above.
struct IonicParams {
    double tau_in_ms = 0.3;
    double tau_out_ms = 6.0;
    double tau_open_ms = 120.0;
    double tau_close_ms = 150.0;
    double v_gate = 0.13;
    double vm_rest_mV = -80.0;  // physical mapping, EGM synthesis only
    double vm_amp_mV = 100.0;

    void validate() const;
};

/// 2D tissue sheet. Scar nodes are excluded from the domain (zero
/// diffusivity on every incident edge, no state evolution); the isthmus is
/// the slow-conducting strip through the scar.
struct TissueGrid {
    int nx = 0, ny = 0;
    double dx_mm = 0.5;
    std::vector<double> diffusivity;  // per-node D (mm^2/ms), 0 on scar
    // regional remodeling: per-node multipliers on the gate time constants
    std::vector<double> tau_close_scale;
    std::vector<double> tau_open_scale;
    std::vector<std::uint8_t> scar;
    std::vector<std::uint8_t> isthmus;
    std::vector<int> sinus_site;
    std::vector<int> ectopic_site;
    std::vector<int> tip_footprint;  // 5x5 node block of the pacing tip

    // per-edge conduction weights, harmonic mean of the node diffusivities;
    // wE[i] couples i and i+1, wN[i] couples i and i+nx
    std::vector<double> wE, wN;

    int n_nodes() const { return nx * ny; }
    int idx(int x, int y) const { return y * nx + x; }
    bool active(int i) const { return scar[i] == 0; }
    double pos_x_mm(int i) const { return (i % nx) * dx_mm; }
    double pos_y_mm(int i) const { return (i / nx) * dx_mm; }
    double max_diffusivity() const;

    /// Recompute wE/wN from the diffusivity field. Must be called after any
    /// conductivity change (isthmus scaling, induction block).
    void rebuild_weights();
};

struct TissueState {
    double t_ms = 0.0;
    std::int64_t step_count = 0;
    std::vector<double> vm;
    std::vector<double> h;
};

struct Stimulus {
    std::vector<int> site;
    double onset_ms = 0.0;
    double duration_ms = 4.0;
    double amplitude = 450.0;

    bool active_at(double t_ms) const { return t_ms >= onset_ms && t_ms < onset_ms + duration_ms; }
};

using StimulusSchedule = std::vector<Stimulus>;

/// Forward-Euler update of a single cell; the gate update reads the
/// pre-update potential. dt must be <= 0.1 ms.
std::pair<double, double> ionic_step(double vm, double h, const IonicParams& p, double dt_ms);

/// Single cell paced for 100 cycles at 800 ms; returns the end-diastolic
/// state used to initialize every tissue node.
std::pair<double, double> init_limit_cycle(const IonicParams& p, double dt_ms = 0.05);

// --- grid construction ---------------------------------------------------

TissueGrid make_sheet(int nx, int ny, double dx_mm, double diffusivity);

struct ScarSpec {
    double cx_mm = 0, cy_mm = 0;     // ellipse centre
    double rx_mm = 0, ry_mm = 0;     // semi-axes
    double isthmus_halfwidth_mm = 1.5;
    double isthmus_factor = 0.2;     // conduction scaling inside the strip
    double tau_close_factor = 1.0;   // tau_close scaling inside the strip (>1 = longer refractory)
    double tau_open_factor = 1.0;    // tau_open scaling inside the strip (<1 = steeper recovery)
};

/// Carve an elliptical unexcitable region with a vertical slow-conducting
/// strip through its centre.
void apply_scar(TissueGrid& grid, const ScarSpec& spec);

std::vector<int> block_site(const TissueGrid& grid, double cx_mm, double cy_mm, int half_extent);
std::vector<int> all_active_nodes(const TissueGrid& grid);

}  // namespace simicd
