#include "simicd/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "simicd/errors.hpp"

namespace simicd {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Axis {
    double lo = 0, hi = 1, px0 = 0, px1 = 1;
    double operator()(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

void channel_range(const std::vector<double>& v, double& lo, double& hi) {
    lo = 1e300;
    hi = -1e300;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

void polyline(std::string& s, const EgmTrace& tr, const std::vector<double>& ch, const Axis& ax,
              const Axis& ay, const char* color) {
    // cap the point count so long runs stay viewable
    const std::size_t stride = std::max<std::size_t>(1, tr.size() / 6000);
    s += "<polyline fill='none' stroke='";
    s += color;
    s += "' stroke-width='0.8' points='";
    for (std::size_t i = 0; i < tr.size(); i += stride) {
        s += num(ax(tr.time_at(i)));
        s += ',';
        s += num(ay(ch[i]));
        s += ' ';
    }
    s += "'/>\n";
}

void vline(std::string& s, double x, double y0, double y1, const char* color, const char* dash,
           const std::string& label) {
    s += "<line x1='" + num(x) + "' x2='" + num(x) + "' y1='" + num(y0) + "' y2='" + num(y1) +
         "' stroke='" + color + "' stroke-width='1'" +
         (dash && *dash ? std::string(" stroke-dasharray='") + dash + "'" : "") + "/>\n";
    if (!label.empty())
        s += "<text x='" + num(x + 3) + "' y='" + num(y0 + 12) +
             "' font-size='10' fill='" + color + "'>" + label + "</text>\n";
}

std::string svg_open(double w, double h) {
    return "<svg xmlns='http://www.w3.org/2000/svg' width='" + num(w) + "' height='" + num(h) +
           "' viewBox='0 0 " + num(w) + " " + num(h) +
           "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
}

void time_ticks(std::string& s, const Axis& ax, double y) {
    const double span = ax.hi - ax.lo;
    double step = 1000.0;
    while (span / step > 12) step *= 2;
    for (double t = std::ceil(ax.lo / step) * step; t <= ax.hi; t += step) {
        s += "<line x1='" + num(ax(t)) + "' x2='" + num(ax(t)) + "' y1='" + num(y) + "' y2='" +
             num(y + 4) + "' stroke='black'/>\n";
        s += "<text x='" + num(ax(t)) + "' y='" + num(y + 15) +
             "' font-size='9' text-anchor='middle'>" + num(t / 1000.0) + " s</text>\n";
    }
}

}  // namespace

std::string plot_egm_svg(const EgmTrace& trace, const EventLog& events) {
    const double W = 1000, H = 420, M = 45;
    const double panel_h = (H - 3 * M) / 2;
    Axis ax{trace.t0_ms, trace.size() ? trace.time_at(trace.size() - 1) : trace.t0_ms + 1.0, M,
            W - 15};

    std::string s = svg_open(W, H);
    const char* names[2] = {"near field (mV)", "far field (mV)"};
    const std::vector<double>* chans[2] = {&trace.nf_mV, &trace.ff_mV};
    for (int p = 0; p < 2; ++p) {
        const double top = M + p * (panel_h + M);
        double lo, hi;
        channel_range(*chans[p], lo, hi);
        Axis ay{lo, hi, top + panel_h, top};  // y grows downward
        s += "<rect x='" + num(M) + "' y='" + num(top) + "' width='" + num(W - 15 - M) +
             "' height='" + num(panel_h) + "' fill='none' stroke='#ccc'/>\n";
        s += "<text x='" + num(M) + "' y='" + num(top - 6) + "' font-size='11'>" + names[p] +
             "</text>\n";
        polyline(s, trace, *chans[p], ax, ay, p == 0 ? "#0057b8" : "#9437a0");
        for (const auto& e : events) {
            if (e.t_ms < ax.lo || e.t_ms > ax.hi) continue;
            if (e.type == "therapy") {
                const std::string kind = e.data.value("kind", "");
                if (kind == "Inhibit") continue;
                vline(s, ax(e.t_ms), top, top + panel_h, "#d62728", "4,3",
                      p == 0 ? kind : std::string());
            } else if (e.type == "zone_entry" && p == 0) {
                vline(s, ax(e.t_ms), top, top + panel_h, "#888", "1,3",
                      e.data.value("zone", ""));
            } else if (e.type == "termination" && p == 0) {
                vline(s, ax(e.t_ms), top, top + panel_h, "#2ca02c", "", "terminated");
            }
        }
        if (p == 1) time_ticks(s, ax, top + panel_h);
    }
    s += "</svg>\n";
    return s;
}

std::string plot_periods_svg(const EventLog& events, const DetectionParams& det) {
    std::vector<double> t, period;
    double prev = -1;
    for (const auto& e : events) {
        if (e.type != "sense") continue;
        if (prev >= 0 && e.t_ms > prev) {
            t.push_back(e.t_ms);
            period.push_back(e.t_ms - prev);
        }
        prev = e.t_ms;
    }

    const double W = 1000, H = 340, M = 50;
    double t_hi = t.empty() ? 1000.0 : t.back();
    double p_hi = 0;
    for (double v : period) p_hi = std::max(p_hi, v);
    p_hi = std::max(p_hi * 1.1, det.th(ZoneId::VT1) * 1.25);
    Axis ax{0, t_hi, M, W - 15}, ay{0, p_hi, H - M, 20};

    std::string s = svg_open(W, H);
    s += "<rect x='" + num(M) + "' y='20' width='" + num(W - 15 - M) + "' height='" +
         num(H - M - 20) + "' fill='none' stroke='#ccc'/>\n";
    s += "<text x='" + num(M) + "' y='14' font-size='11'>beat-to-beat interval (ms)</text>\n";
    for (int z = 0; z < kNumZones; ++z) {
        const double th = det.th_ms[z];
        s += "<line x1='" + num(ax.px0) + "' x2='" + num(ax.px1) + "' y1='" + num(ay(th)) +
             "' y2='" + num(ay(th)) + "' stroke='#d08000' stroke-dasharray='5,4'/>\n";
        s += "<text x='" + num(ax.px1 - 32) + "' y='" + num(ay(th) - 3) +
             "' font-size='9' fill='#d08000'>" + zone_name(static_cast<ZoneId>(z)) + "</text>\n";
    }
    for (std::size_t i = 0; i < t.size(); ++i)
        s += "<circle cx='" + num(ax(t[i])) + "' cy='" + num(ay(period[i])) +
             "' r='2' fill='#0057b8'/>\n";
    for (const auto& e : events) {
        if (e.type == "therapy" && e.data.value("kind", "") != "Inhibit")
            vline(s, ax(e.t_ms), 20, H - M, "#d62728", "4,3", e.data.value("kind", ""));
        else if (e.type == "termination")
            vline(s, ax(e.t_ms), 20, H - M, "#2ca02c", "", "terminated");
    }
    time_ticks(s, ax, H - M);
    s += "</svg>\n";
    return s;
}

std::string plot_activation_svg(const ActivationMap& map, const TissueGrid& grid) {
    if (static_cast<int>(map.size()) != grid.nx * grid.ny)
        throw ConfigError("plot_activation_svg: map size does not match the grid");
    double t_hi = 0;
    for (double v : map) t_hi = std::max(t_hi, v);
    if (!(t_hi > 0)) t_hi = 1;

    const double cell = std::max(2.0, 600.0 / std::max(grid.nx, grid.ny));
    const double W = grid.nx * cell + 20, H = grid.ny * cell + 40;
    std::string s = svg_open(W, H);
    s += "<text x='10' y='16' font-size='11'>first activation (early=blue, late=red)</text>\n";
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int n = grid.idx(i, j);
            std::string fill;
            if (!grid.active(n)) {
                fill = "#c8c8c8";
            } else if (map[n] < 0) {
                fill = "#101010";
            } else {
                const double u = map[n] / t_hi;  // blue -> red
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x10%02x", static_cast<int>(255 * u),
                              static_cast<int>(255 * (1 - u)));
                fill = buf;
            }
            // row 0 drawn at the bottom so the picture matches tissue coordinates
            s += "<rect x='" + num(10 + i * cell) + "' y='" +
                 num(25 + (grid.ny - 1 - j) * cell) + "' width='" + num(cell) + "' height='" +
                 num(cell) + "' fill='" + fill + "'/>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimulationError("cannot write " + path);
    f << content;
    if (!f) throw SimulationError("write failed: " + path);
}

}  // namespace simicd
