#pragma once

#include <string>
#include <vector>

#include "simicd/egm.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

struct Vec3 {
    double x_mm = 0, y_mm = 0, z_mm = 0;
};

/// Sensing electrode; the recorded potential is the mean over its sample
/// points (one point for tip/ring/can, >=5 along the coil).
struct Electrode {
    std::string name;
    std::vector<Vec3> points;
};

Electrode point_electrode(std::string name, Vec3 p);
Electrode segment_electrode(std::string name, Vec3 a, Vec3 b, int n_points);

struct LeadConfig {
    Electrode tip, ring, coil, can;
    double gain = 1.0;  // maps raw infinite-volume potentials to mV

    /// RV-lead style default placement for a 50x50 mm sheet: tip/ring pair
    /// over the lower-centre tissue, coil along the tip row, can far away.
    static LeadConfig defaults();
};

/// Extracellular potential at one electrode for the current tissue state:
/// infinite volume conductor, phi ~ sum of -div(sigma grad vm) / r over
/// nodes. Every electrode point must keep >= 0.25 dx clearance from the
/// nearest grid node.
double phi_e(const TissueState& state, const TissueGrid& grid, const Electrode& e);

/// Per-millisecond raw potentials of all four electrodes.
struct EgmSamples {
    std::vector<double> t_ms;
    std::vector<double> phi_tip, phi_ring, phi_coil, phi_can;

    void append(const EgmSamples& tail);
    void truncate_from(double t_ms_cut);  // drop samples with t >= cut
};

/// Precomputed 1/r projection kernels for the four electrodes of a lead.
class ProbeKernels {
  public:
    ProbeKernels(const TissueGrid& grid, const LeadConfig& leads);

    /// Append one sample for the given state. The node sum is accumulated as
    /// per-row partials combined in row order, so the result does not depend
    /// on how rows were distributed across threads.
    void sample(const TissueState& state, const TissueGrid& grid, EgmSamples& out) const;

    const LeadConfig& leads() const { return leads_; }

  private:
    LeadConfig leads_;
    std::vector<double> k_tip_, k_ring_, k_coil_, k_can_;
};

/// Difference the electrode records into the two device channels:
/// near field = tip - ring, far field = coil - can, both scaled by gain.
/// Samples must sit on an uninterrupted 1 ms cadence.
EgmTrace synth_egm(const EgmSamples& samples, const LeadConfig& leads);

}  // namespace simicd
