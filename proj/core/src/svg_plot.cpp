#include "uqr/svg_plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "uqr/errors.hpp"

namespace uqr {

namespace {

constexpr double kPanelW = 300.0;
constexpr double kPanelH = 240.0;
constexpr double kMargin = 45.0;
constexpr double kGap = 30.0;

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Panel {
    double x0, y0;  // top-left of the plotting area
    double qmax, vmax;

    double px(double q) const { return x0 + (q / qmax) * kPanelW; }
    double py(double v) const { return y0 + kPanelH - (v / vmax) * kPanelH; }
};

void draw_panel(std::string& svg, const Panel& p, const std::string& title) {
    svg += "<rect x='" + num(p.x0) + "' y='" + num(p.y0) + "' width='" + num(kPanelW) +
           "' height='" + num(kPanelH) + "' fill='none' stroke='#444'/>\n";
    svg += "<text x='" + num(p.x0 + kPanelW / 2) + "' y='" + num(p.y0 - 10) +
           "' text-anchor='middle' font-size='14'>" + title + "</text>\n";
    svg += "<text x='" + num(p.x0 + kPanelW / 2) + "' y='" + num(p.y0 + kPanelH + 30) +
           "' text-anchor='middle' font-size='11'>rejection fraction q</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double q = p.qmax * i / 4.0;
        const double v = p.vmax * i / 4.0;
        svg += "<text x='" + num(p.px(q)) + "' y='" + num(p.y0 + kPanelH + 14) +
               "' text-anchor='middle' font-size='10'>" + num(q) + "</text>\n";
        svg += "<text x='" + num(p.x0 - 6) + "' y='" + num(p.py(v) + 3) +
               "' text-anchor='end' font-size='10'>" + num(v) + "</text>\n";
    }
}

}  // namespace

std::string render_curve_svg(const std::vector<std::pair<std::string, RejectionCurve>>& curves) {
    double qmax = 0.95;
    double rqmax = 1.0;
    for (const auto& [name, curve] : curves) {
        for (const auto& pt : curve.points) {
            qmax = std::max(qmax, pt.fraction);
            if (pt.rq_defined && !pt.rq_infinite) rqmax = std::max(rqmax, pt.rq);
        }
    }

    const double width = kMargin * 2 + kPanelW * 3 + kGap * 2;
    const double height = kMargin * 2 + kPanelH + 20.0 * static_cast<double>(curves.size());
    std::string svg = "<?xml version='1.0' encoding='UTF-8'?>\n<svg xmlns='http://www.w3.org/2000/svg' width='" +
                      num(width) + "' height='" + num(height) + "'>\n";

    Panel panels[3] = {
        {kMargin, kMargin, qmax, 1.0},
        {kMargin + kPanelW + kGap, kMargin, qmax, 1.0},
        {kMargin + 2 * (kPanelW + kGap), kMargin, qmax, rqmax},
    };
    draw_panel(svg, panels[0], "NRA");
    draw_panel(svg, panels[1], "CQ");
    draw_panel(svg, panels[2], "RQ");

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& curve = curves[c].second;
        const char* color = kColors[c % 6];
        for (int metric = 0; metric < 3; ++metric) {
            std::string pts;
            for (const auto& pt : curve.points) {
                double v = 0.0;
                if (metric == 0) v = pt.nra;
                else if (metric == 1) v = pt.cq;
                else {
                    if (!pt.rq_defined || pt.rq_infinite) {
                        if (!pts.empty()) {
                            svg += "<polyline fill='none' stroke='" + std::string(color) +
                                   "' stroke-width='1.5' points='" + pts + "'/>\n";
                            pts.clear();
                        }
                        continue;
                    }
                    v = pt.rq;
                }
                pts += num(panels[metric].px(pt.fraction)) + "," + num(panels[metric].py(v)) + " ";
            }
            if (!pts.empty()) {
                svg += "<polyline fill='none' stroke='" + std::string(color) +
                       "' stroke-width='1.5' points='" + pts + "'/>\n";
            }
        }
        const double ly = kMargin + kPanelH + 50.0 + 16.0 * static_cast<double>(c);
        svg += "<line x1='" + num(kMargin) + "' y1='" + num(ly - 4) + "' x2='" + num(kMargin + 24) +
               "' y2='" + num(ly - 4) + "' stroke='" + color + "' stroke-width='2'/>\n";
        svg += "<text x='" + num(kMargin + 30) + "' y='" + num(ly) + "' font-size='11'>" +
               curves[c].first + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_curve_svg(const std::string& path,
                     const std::vector<std::pair<std::string, RejectionCurve>>& curves) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << render_curve_svg(curves);
}

}  // namespace uqr
