#include "simicd/solver.hpp"

#include <cmath>
#include <string>

#include "simicd/errors.hpp"
#include "simicd/kernel_detail.hpp"

namespace simicd {

Tissue::Tissue(TissueGrid grid, IonicParams ion, double dt_ms)
    : grid_(std::move(grid)), ion_(ion), dt_ms_(dt_ms) {
    ion_.validate();
    if (dt_ms_ <= 0 || dt_ms_ > 0.1) throw ConfigError("dt must lie in (0, 0.1] ms");
    steps_per_ms_ = std::lround(1.0 / dt_ms_);
    if (std::abs(steps_per_ms_ * dt_ms_ - 1.0) > 1e-12)
        throw ConfigError("dt must divide 1 ms evenly for probe sampling");
    if (grid_.wE.size() != static_cast<size_t>(grid_.n_nodes())) grid_.rebuild_weights();
    validate_stability();
    const size_t n = grid_.n_nodes();
    state_.vm.assign(n, 0.0);
    state_.h.assign(n, 1.0);
    vm_next_.assign(n, 0.0);
    h_next_.assign(n, 0.0);
    vm_scratch_.assign(n, 0.0);
    const auto fold = [n](std::vector<double>& out, double tau, const std::vector<double>& scale) {
        const double base = 1.0 / tau;
        out.assign(n, base);
        if (scale.size() != n) return;
        for (size_t i = 0; i < n; ++i) {
            if (scale[i] <= 0) throw ConfigError("gate time-constant scales must be positive");
            out[i] = base / scale[i];
        }
    };
    fold(inv_tau_open_, ion_.tau_open_ms, grid_.tau_open_scale);
    fold(inv_tau_close_, ion_.tau_close_ms, grid_.tau_close_scale);
}

void Tissue::validate_stability() const {
    const double dmax = grid_.max_diffusivity();
    const double limit = grid_.dx_mm * grid_.dx_mm / (4.0 * dmax);
    if (dmax > 0 && dt_ms_ > limit)
        throw ConfigError("unstable configuration: dt=" + std::to_string(dt_ms_) +
                          " ms exceeds dx^2/(4 D_max)=" + std::to_string(limit) + " ms");
}

void Tissue::set_state(TissueState s) {
    if (s.vm.size() != static_cast<size_t>(grid_.n_nodes()) || s.h.size() != s.vm.size())
        throw ConfigError("state dimensions do not match the grid");
    state_ = std::move(s);
}

void Tissue::seed_uniform(double vm, double h) {
    for (int i = 0; i < grid_.n_nodes(); ++i) {
        const bool act = grid_.active(i);
        state_.vm[i] = act ? vm : 0.0;
        state_.h[i] = act ? h : 1.0;
    }
}

void Tissue::apply_conduction_block(const std::vector<int>& nodes) {
    if (!blocked_.empty()) throw SimulationError("conduction block already active");
    for (int i : nodes) {
        blocked_.emplace_back(i, grid_.diffusivity[i]);
        grid_.diffusivity[i] = 0.0;
    }
    grid_.rebuild_weights();
}

void Tissue::release_conduction_block() {
    if (blocked_.empty()) throw SimulationError("no conduction block to release");
    for (const auto& [i, d] : blocked_) grid_.diffusivity[i] = d;
    blocked_.clear();
    grid_.rebuild_weights();
    validate_stability();
}

void Tissue::scale_isthmus(double factor) {
    if (factor < 0) throw ConfigError("isthmus scale must be non-negative");
    for (int i = 0; i < grid_.n_nodes(); ++i)
        if (grid_.isthmus[i]) grid_.diffusivity[i] *= factor;
    grid_.rebuild_weights();
    validate_stability();
}

void Tissue::step(const StimulusSchedule& stimuli) {
    const auto rc = detail::ReactConsts::from(ion_);
    const double diff_coeff = dt_ms_ / (grid_.dx_mm * grid_.dx_mm);
    if (backend_ == Backend::Serial)
        detail::step_serial(grid_, rc, inv_tau_open_.data(), inv_tau_close_.data(), dt_ms_,
                            diff_coeff, state_.vm.data(), state_.h.data(), vm_next_.data(),
                            h_next_.data(), vm_scratch_.data());
    else
        detail::step_omp(grid_, rc, inv_tau_open_.data(), inv_tau_close_.data(), dt_ms_,
                         diff_coeff, state_.vm.data(), state_.h.data(), vm_next_.data(),
                         h_next_.data());

    for (const auto& stim : stimuli) {
        if (!stim.active_at(state_.t_ms)) continue;
        const double dv = dt_ms_ * stim.amplitude * kStimulusUnit;
        for (int i : stim.site)
            if (grid_.active(i)) vm_next_[i] += dv;
    }

    state_.vm.swap(vm_next_);
    state_.h.swap(h_next_);
    state_.step_count += 1;
    // the clock is derived, not accumulated: summing dt drifts off the whole-
    // millisecond boundaries the segment scheduler compares against
    state_.t_ms = static_cast<double>(state_.step_count) / static_cast<double>(steps_per_ms_);
}

void Tissue::run(const StimulusSchedule& stimuli, double duration_ms, const ProbeKernels* probes,
                 EgmSamples* out) {
    const auto n_steps = static_cast<long>(std::llround(duration_ms / dt_ms_));
    if (std::abs(n_steps * dt_ms_ - duration_ms) > 1e-6)
        throw ConfigError("segment duration must be a multiple of dt");
    for (long s = 0; s < n_steps; ++s) {
        if (probes && out && state_.step_count % steps_per_ms_ == 0)
            probes->sample(state_, grid_, *out);
        step(stimuli);
    }
}

std::optional<double> measure_strip_cv(double diffusivity, const IonicParams& ion, double dx_mm,
                                       double dt_ms) {
    const int nx = static_cast<int>(std::lround(100.0 / dx_mm)) + 1;
    TissueGrid strip = make_sheet(nx, 1, dx_mm, diffusivity);
    Tissue tissue(std::move(strip), ion, dt_ms);
    tissue.set_backend(Backend::Serial);
    auto [vm0, h0] = init_limit_cycle(ion, dt_ms);
    tissue.seed_uniform(vm0, h0);

    StimulusSchedule stim{{{0, 1, 2}, 0.0, 4.0, 450.0}};
    const int a = static_cast<int>(std::lround(30.0 / dx_mm));
    const int b = static_cast<int>(std::lround(70.0 / dx_mm));
    double t_a = -1, t_b = -1;
    while (tissue.state().t_ms < 400.0) {
        tissue.step(stim);
        const auto& st = tissue.state();
        if (t_a < 0 && st.vm[a] >= ion.v_gate) t_a = st.t_ms;
        if (t_b < 0 && st.vm[b] >= ion.v_gate) t_b = st.t_ms;
        if (t_b >= 0) break;
    }
    if (t_a < 0 || t_b < 0 || t_b <= t_a) return std::nullopt;
    return (b - a) * dx_mm / (t_b - t_a);
}

double tune_conductivity(double cv_target_mm_per_ms, const IonicParams& ion, double dx_mm,
                         double dt_ms) {
    if (cv_target_mm_per_ms <= 0) throw ConfigError("CV target must be positive");
    double lo = 0.002;
    double hi = 0.95 * dx_mm * dx_mm / (4.0 * dt_ms);

    const auto cv_hi = measure_strip_cv(hi, ion, dx_mm, dt_ms);
    if (!cv_hi || *cv_hi < cv_target_mm_per_ms)
        throw SimulationError("CV target " + std::to_string(cv_target_mm_per_ms) +
                              " mm/ms unreachable: at D=" + std::to_string(hi) + " strip CV is " +
                              (cv_hi ? std::to_string(*cv_hi) : std::string("no propagation")));
    const auto cv_lo = measure_strip_cv(lo, ion, dx_mm, dt_ms);
    if (cv_lo && *cv_lo > cv_target_mm_per_ms)
        throw SimulationError("CV target " + std::to_string(cv_target_mm_per_ms) +
                              " mm/ms unreachable: already " + std::to_string(*cv_lo) +
                              " at D=" + std::to_string(lo));

    double best = hi;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto cv = measure_strip_cv(mid, ion, dx_mm, dt_ms);
        if (cv && *cv >= cv_target_mm_per_ms) {
            best = mid;
            hi = mid;
            if (*cv / cv_target_mm_per_ms < 1.005) break;
        } else {
            lo = mid;
        }
    }
    return best;
}

}  // namespace simicd
