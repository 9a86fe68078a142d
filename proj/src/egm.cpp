#include "simicd/egm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace simicd {

void EgmTrace::validate() const {
    if (nf_mV.size() != ff_mV.size())
        throw std::invalid_argument("EgmTrace: channel lengths differ");
    if (!(dt_ms > 0.0))
        throw std::invalid_argument("EgmTrace: dt_ms must be > 0");
    for (std::size_t i = 0; i < nf_mV.size(); ++i) {
        if (!std::isfinite(nf_mV[i]) || !std::isfinite(ff_mV[i]))
            throw std::invalid_argument("EgmTrace: non-finite sample at index " + std::to_string(i));
    }
}

void write_egm_csv(const EgmTrace& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("t_ms,nf_mV,ff_mV\n", f);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        // full round-trip precision: replay must reproduce the closed-loop
        // device decisions from the file alone
        std::fprintf(f, "%.3f,%.17g,%.17g\n", trace.time_at(i), trace.nf_mV[i], trace.ff_mV[i]);
    }
    std::fclose(f);
}

EgmTrace read_egm_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty file");
    ++lineno;
    // tolerate trailing \r from foreign line endings
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_ms,nf_mV,ff_mV")
        throw std::runtime_error(path + ":1: expected header t_ms,nf_mV,ff_mV");

    EgmTrace trace;
    bool have_first = false, have_second = false;
    double prev_t = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double t, nf, ff;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &nf, &ff) != 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        if (!std::isfinite(t) || !std::isfinite(nf) || !std::isfinite(ff))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-finite value");
        if (!have_first) {
            trace.t0_ms = t;
            have_first = true;
        } else if (!have_second) {
            trace.dt_ms = t - prev_t;
            if (!(trace.dt_ms > 0.0))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-increasing t_ms");
            have_second = true;
        } else {
            double expect = prev_t + trace.dt_ms;
            if (std::abs(t - expect) > 1e-6 * std::max(1.0, std::abs(expect)) + 1e-6)
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": t_ms not at fixed step");
        }
        prev_t = t;
        trace.nf_mV.push_back(nf);
        trace.ff_mV.push_back(ff);
    }
    return trace;
}

}  // namespace simicd
