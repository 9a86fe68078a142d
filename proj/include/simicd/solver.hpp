#pragma once

#include <optional>
#include <vector>

#include "simicd/electrodes.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

enum class Backend { Serial, OpenMP };

/// Explicit monodomain stepper: per step one diffusion + reaction update
/// (dt default 0.05 ms), stimulus currents added afterwards. Probe samples
/// are taken at whole-millisecond step boundaries, before the step runs.
class Tissue {
  public:
    Tissue(TissueGrid grid, IonicParams ion, double dt_ms = 0.05);

    const TissueGrid& grid() const { return grid_; }
    const IonicParams& ionic() const { return ion_; }
    const TissueState& state() const { return state_; }
    double dt_ms() const { return dt_ms_; }
    Backend backend() const { return backend_; }
    void set_backend(Backend b) { backend_ = b; }

    void set_state(TissueState s);
    void seed_uniform(double vm, double h);

    /// Zero the diffusivity on a node set (induction block); the previous
    /// values are restored by release_conduction_block.
    void apply_conduction_block(const std::vector<int>& nodes);
    void release_conduction_block();

    /// Rescale diffusivity on the isthmus strip relative to its current
    /// values (ATP-response studies vary this between runs).
    void scale_isthmus(double factor);

    void step(const StimulusSchedule& stimuli);
    void run(const StimulusSchedule& stimuli, double duration_ms,
             const ProbeKernels* probes = nullptr, EgmSamples* out = nullptr);

    /// dt <= dx^2 / (4 max D) or ConfigError.
    void validate_stability() const;

  private:
    TissueGrid grid_;
    IonicParams ion_;
    double dt_ms_;
    long steps_per_ms_;
    TissueState state_;
    std::vector<double> inv_tau_open_, inv_tau_close_;  // per-node, grid scales folded in
    std::vector<double> vm_next_, h_next_, vm_scratch_;
    std::vector<std::pair<int, double>> blocked_;  // node -> saved diffusivity
    Backend backend_ = Backend::OpenMP;
};

/// Planar conduction velocity on a 1D calibration strip (mm/ms), measured
/// between 30 mm and 70 mm; nullopt if the wave fails to propagate.
std::optional<double> measure_strip_cv(double diffusivity, const IonicParams& ion, double dx_mm,
                                       double dt_ms);

/// Bisect the diffusivity until the strip CV hits the target within 0.5%.
/// SimulationError when the target is outside the reachable range.
double tune_conductivity(double cv_target_mm_per_ms, const IonicParams& ion, double dx_mm,
                         double dt_ms);

}  // namespace simicd
