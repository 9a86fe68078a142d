#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simicd/checkpoint.hpp"
#include "simicd/errors.hpp"
#include "simicd/solver.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

/// Figure-of-eight induction: one isthmus end is blocked (conductivity 0),
/// a single S1 is delivered, and the block is released once the wavefront
/// has entered the isthmus (vm > v_gate at its midpoint). The unidirectional
/// transit re-enters the recovered far side and the circuit closes.
struct ReentryProtocol {
    bool block_top = true;        // direction "up": block the top end, S1 below
    double s1_time_ms = 20.0;
    double s1_duration_ms = 4.0;
    double s1_amplitude = 450.0;
    std::vector<int> s1_site;     // defaults to the grid sinus site
    double block_window_ms = 600.0;   // midpoint must activate within this after S1
    double observe_ms = 6000.0;       // time allowed to establish + measure the circuit
    int min_cycles = 3;               // circuit dying earlier -> induction failed
    int settle_cycles = 5;            // cycles completed before the checkpoint is taken
};

struct InductionResult {
    Checkpoint checkpoint;   // established circuit, clock re-based to zero
    double cycle_length_ms = 0;
    double cycle_jitter_ms = 0;   // max |cl_i - mean|
    int cycles_observed = 0;
    std::vector<double> witness_times_ms;  // isthmus-midpoint activations
};

/// First-activation time per node since the S1 (-1 = never activated);
/// diagnostic payload of a failed induction.
using ActivationMap = std::vector<double>;

InductionResult induce_reentry(const TissueGrid& grid, const IonicParams& ion, double dt_ms,
                               const ReentryProtocol& proto, std::uint64_t config_hash);

void write_activation_map_csv(const ActivationMap& map, const TissueGrid& grid,
                              const std::string& path);

/// Continue a checkpointed circuit and measure witness-point cycle lengths.
struct CycleMeasurement {
    int cycles = 0;
    double mean_cl_ms = 0;
    double max_jitter_ms = 0;  // max |cl_i - mean|
};
CycleMeasurement measure_cycles(const TissueGrid& grid, const IonicParams& ion, double dt_ms,
                                const Checkpoint& cp, std::uint64_t config_hash, int n_cycles,
                                double max_wait_ms);

/// Induction failure carries the activation map for diagnostics.
struct InductionFailure : SimulationError {
    InductionFailure(const std::string& msg, ActivationMap map)
        : SimulationError(msg), activation(std::move(map)) {}
    ActivationMap activation;
};

}  // namespace simicd
