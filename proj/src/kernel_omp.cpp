#include "simicd/kernel_detail.hpp"

namespace simicd::detail {

// Fused production kernel: one parallel sweep doing diffusion + reaction per
// node. Reads only the previous-step arrays, writes disjoint rows, so the
// result is independent of the thread count. The per-node arithmetic is the
// exact sequence used by step_serial (the intermediate post-diffusion value
// merely lives in a register instead of the scratch array); together with
// -ffp-contract=off this keeps both backends bit-identical.
void step_omp(const TissueGrid& g, const ReactConsts& rc, const double* ito, const double* itc,
              double dt_ms, double diff_coeff, const double* vm, const double* h, double* vm_out,
              double* h_out) {
    const int nx = g.nx, ny = g.ny;
    const double* wE = g.wE.data();
    const double* wN = g.wN.data();

#pragma omp parallel for schedule(static)
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const int i = y * nx + x;
            double v = vm[i] + diff_coeff * diffuse_node(vm, wE, wN, i, x, y, nx, ny);
            double hh = h[i];
            react_node(v, hh, rc, ito[i], itc[i], dt_ms);
            vm_out[i] = v;
            h_out[i] = hh;
        }
    }
}

}  // namespace simicd::detail
