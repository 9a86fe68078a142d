#pragma once

#include "simicd/tissue.hpp"

namespace simicd::detail {

/// Reaction constants with pre-inverted time constants. Both stepping
/// backends and the scalar ionic_step build these the same way so their
/// per-node arithmetic is bit-identical.
struct ReactConsts {
    double inv_tau_in, inv_tau_out, inv_tau_open, inv_tau_close, v_gate;

    static ReactConsts from(const IonicParams& p) {
        return {1.0 / p.tau_in_ms, 1.0 / p.tau_out_ms, 1.0 / p.tau_open_ms,
                1.0 / p.tau_close_ms, p.v_gate};
    }
};

/// Weighted 5-point Laplacian accumulated in fixed order E, W, N, S.
inline double diffuse_node(const double* vm, const double* wE, const double* wN, int i, int x,
                           int y, int nx, int ny) {
    double acc = 0.0;
    if (x + 1 < nx) acc += wE[i] * (vm[i + 1] - vm[i]);
    if (x > 0) acc += wE[i - 1] * (vm[i - 1] - vm[i]);
    if (y + 1 < ny) acc += wN[i] * (vm[i + nx] - vm[i]);
    if (y > 0) acc += wN[i - nx] * (vm[i - nx] - vm[i]);
    return acc;
}

inline void react_node(double& vm, double& h, const ReactConsts& rc, double inv_tau_open,
                       double inv_tau_close, double dt_ms) {
    const double dv = h * vm * vm * (1.0 - vm) * rc.inv_tau_in - vm * rc.inv_tau_out;
    const double dh = vm < rc.v_gate ? (1.0 - h) * inv_tau_open : -h * inv_tau_close;
    vm += dt_ms * dv;
    h += dt_ms * dh;
    // quiescent tissue decays exponentially toward 0; flush before the tail
    // reaches denormal range, where every FP op stalls 100x
    if (vm < 1e-30 && vm > -1e-30) vm = 0.0;
}

// ito/itc: per-node 1/tau_open and 1/tau_close with regional remodeling folded in
void step_serial(const TissueGrid& g, const ReactConsts& rc, const double* ito, const double* itc,
                 double dt_ms, double diff_coeff, const double* vm, const double* h, double* vm_out,
                 double* h_out, double* vm_scratch);

void step_omp(const TissueGrid& g, const ReactConsts& rc, const double* ito, const double* itc,
              double dt_ms, double diff_coeff, const double* vm, const double* h, double* vm_out,
              double* h_out);

}  // namespace simicd::detail
