#include "simicd/kernel_detail.hpp"

namespace simicd::detail {

// Reference implementation: explicit operator split as two full sweeps
// (diffusion into scratch, then reaction). Kept deliberately simple; the
// fused OpenMP kernel must reproduce it bit-for-bit.
void step_serial(const TissueGrid& g, const ReactConsts& rc, const double* ito, const double* itc,
                 double dt_ms, double diff_coeff, const double* vm, const double* h, double* vm_out,
                 double* h_out, double* vm_scratch) {
    const int nx = g.nx, ny = g.ny;
    const double* wE = g.wE.data();
    const double* wN = g.wN.data();

    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const int i = y * nx + x;
            vm_scratch[i] = vm[i] + diff_coeff * diffuse_node(vm, wE, wN, i, x, y, nx, ny);
        }

    for (int i = 0; i < nx * ny; ++i) {
        double v = vm_scratch[i], hh = h[i];
        react_node(v, hh, rc, ito[i], itc[i], dt_ms);
        vm_out[i] = v;
        h_out[i] = hh;
    }
}

}  // namespace simicd::detail
