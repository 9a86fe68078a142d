#pragma once

#include <string>
#include <vector>

namespace simicd {

/// Two-channel intracardiac electrogram sampled at a fixed rate.
/// nf = near-field (tip-ring), ff = far-field (coil-can) channel, in mV.
struct EgmTrace {
    double t0_ms = 0.0;
    double dt_ms = 1.0;
    std::vector<double> nf_mV;
    std::vector<double> ff_mV;

    std::size_t size() const { return nf_mV.size(); }
    double time_at(std::size_t i) const { return t0_ms + static_cast<double>(i) * dt_ms; }

    /// Throws if channel lengths differ, dt <= 0, or any sample is non-finite.
    void validate() const;
};

/// CSV layout: header "t_ms,nf_mV,ff_mV", one row per sample, fixed step.
void write_egm_csv(const EgmTrace& trace, const std::string& path);

/// Parse errors carry the 1-based line number.
EgmTrace read_egm_csv(const std::string& path);

}  // namespace simicd
