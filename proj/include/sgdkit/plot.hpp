#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "sgdkit/core.hpp"

namespace sgdkit {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

enum class PlotStyle { loss_vs_epoch, lr_and_gradnorm_vs_iter };

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

struct Panel {
    std::vector<std::size_t> series;
    bool log_y = false;
    std::string y_label;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
                                    "#bcbd22", "#e377c2"};

struct Ticks {
    std::vector<double> at;
};

inline Ticks linear_ticks(double lo, double hi) {
    Ticks t;
    const double range = hi - lo;
    if (range <= 0.0) {
        t.at.push_back(lo);
        return t;
    }
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    if (raw / mag > 5.0)
        step = 10.0 * mag;
    else if (raw / mag > 2.0)
        step = 5.0 * mag;
    else if (raw / mag > 1.0)
        step = 2.0 * mag;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * range; v += step)
        t.at.push_back(v);
    return t;
}

inline Ticks decade_ticks(double lo, double hi) {
    Ticks t;
    const int a = static_cast<int>(std::ceil(std::log10(lo) - 1e-12));
    const int b = static_cast<int>(std::floor(std::log10(hi) + 1e-12));
    int step = 1;
    if (b - a > 8) step = (b - a + 7) / 8;
    for (int e = a; e <= b; e += step) t.at.push_back(std::pow(10.0, e));
    if (t.at.empty()) t.at.push_back(lo);
    return t;
}

}  // namespace detail

// Renders one SVG: a single loss-vs-epoch panel, or stacked gradient-norm
// (log y) and learning-rate panels. Output bytes are a pure function of the
// input. Every data series becomes exactly one polyline.
inline std::size_t emit_plot(const std::vector<PlotSeries>& series, PlotStyle style,
                             std::ostream& out) {
    if (series.empty()) throw ConfigError("plot: at least one series is required");
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw ConfigError("plot: series '" + s.name + "' is empty or ragged");
        for (std::size_t i = 1; i < s.x.size(); ++i)
            if (!(s.x[i] > s.x[i - 1]))
                throw ConfigError("plot: series '" + s.name + "' x values must be strictly increasing");
    }

    std::vector<detail::Panel> panels;
    if (style == PlotStyle::lr_and_gradnorm_vs_iter) {
        detail::Panel top{{}, true, "gradient norm"};
        detail::Panel bottom{{}, false, "learning rate"};
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (series[i].name.find("grad") != std::string::npos)
                top.series.push_back(i);
            else
                bottom.series.push_back(i);
        }
        if (!top.series.empty()) panels.push_back(top);
        if (!bottom.series.empty()) panels.push_back(bottom);
    } else {
        detail::Panel only{{}, false, "training loss"};
        for (std::size_t i = 0; i < series.size(); ++i) only.series.push_back(i);
        panels.push_back(only);
    }
    const std::string x_label = style == PlotStyle::loss_vs_epoch ? "epoch" : "iteration";

    constexpr double kWidth = 960.0, kPanelH = 400.0;
    constexpr double kLeft = 76.0, kRight = 18.0, kTop = 34.0, kBottom = 52.0;
    const double height = kPanelH * static_cast<double>(panels.size());

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"" +
           detail::fmt("%.0f", height) + "\" viewBox=\"0 0 960 " + detail::fmt("%.0f", height) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const detail::Panel& panel = panels[p];
        const double oy = kPanelH * static_cast<double>(p);
        const double px0 = kLeft, px1 = kWidth - kRight;
        const double py0 = oy + kTop, py1 = oy + kPanelH - kBottom;

        double xmin = series[panel.series[0]].x.front(), xmax = xmin;
        double ymin = 0.0, ymax = 0.0;
        bool first = true;
        bool log_ok = panel.log_y;
        for (std::size_t si : panel.series) {
            xmin = std::min(xmin, series[si].x.front());
            xmax = std::max(xmax, series[si].x.back());
            for (double v : series[si].y) {
                if (panel.log_y && v <= 0.0) log_ok = false;
                if (first) {
                    ymin = ymax = v;
                    first = false;
                } else {
                    ymin = std::min(ymin, v);
                    ymax = std::max(ymax, v);
                }
            }
        }
        const bool log_y = panel.log_y && log_ok && ymin > 0.0;
        if (xmax == xmin) {
            xmin -= 1.0;
            xmax += 1.0;
        }
        double tlo = log_y ? std::log10(ymin) : ymin;
        double thi = log_y ? std::log10(ymax) : ymax;
        if (thi == tlo) {
            tlo -= 1.0;
            thi += 1.0;
        }
        const double pad = 0.05 * (thi - tlo);
        tlo -= pad;
        thi += pad;

        auto to_px = [&](double v) { return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0); };
        auto to_py = [&](double v) {
            const double tv = log_y ? std::log10(v) : v;
            return py1 - (tv - tlo) / (thi - tlo) * (py1 - py0);
        };

        // frame
        svg += "<rect x=\"" + detail::fmt("%.2f", px0) + "\" y=\"" + detail::fmt("%.2f", py0) +
               "\" width=\"" + detail::fmt("%.2f", px1 - px0) + "\" height=\"" +
               detail::fmt("%.2f", py1 - py0) + "\" fill=\"none\" stroke=\"#333333\"/>\n";

        const detail::Ticks xt = detail::linear_ticks(xmin, xmax);
        for (double v : xt.at) {
            const double X = to_px(v);
            svg += "<line x1=\"" + detail::fmt("%.2f", X) + "\" y1=\"" + detail::fmt("%.2f", py1) +
                   "\" x2=\"" + detail::fmt("%.2f", X) + "\" y2=\"" +
                   detail::fmt("%.2f", py1 + 5) + "\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + detail::fmt("%.2f", X) + "\" y=\"" +
                   detail::fmt("%.2f", py1 + 18) +
                   "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
                   detail::fmt("%.6g", v) + "</text>\n";
        }
        const detail::Ticks yt = log_y ? detail::decade_ticks(std::pow(10.0, tlo), std::pow(10.0, thi))
                                       : detail::linear_ticks(tlo, thi);
        for (double v : yt.at) {
            const double Y = to_py(v);
            if (Y < py0 - 0.5 || Y > py1 + 0.5) continue;
            svg += "<line x1=\"" + detail::fmt("%.2f", px0 - 5) + "\" y1=\"" +
                   detail::fmt("%.2f", Y) + "\" x2=\"" + detail::fmt("%.2f", px0) + "\" y2=\"" +
                   detail::fmt("%.2f", Y) + "\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + detail::fmt("%.2f", px0 - 8) + "\" y=\"" +
                   detail::fmt("%.2f", Y + 4) +
                   "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
                   detail::fmt("%.6g", v) + "</text>\n";
        }

        // axis labels
        svg += "<text x=\"" + detail::fmt("%.2f", (px0 + px1) / 2) + "\" y=\"" +
               detail::fmt("%.2f", py1 + 38) +
               "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" + x_label +
               "</text>\n";
        svg += "<text x=\"" + detail::fmt("%.2f", px0) + "\" y=\"" + detail::fmt("%.2f", py0 - 10) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + panel.y_label +
               (log_y ? " (log scale)" : "") + "</text>\n";

        // data
        for (std::size_t si : panel.series) {
            const char* color = detail::kPalette[si % (sizeof detail::kPalette / sizeof *detail::kPalette)];
            svg += "<polyline fill=\"none\" stroke=\"";
            svg += color;
            svg += "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < series[si].x.size(); ++i) {
                svg += detail::fmt("%.2f", to_px(series[si].x[i]));
                svg += ",";
                svg += detail::fmt("%.2f", to_py(series[si].y[i]));
                if (i + 1 < series[si].x.size()) svg += " ";
            }
            svg += "\"/>\n";
        }

        // legend
        double ly = py0 + 14.0;
        for (std::size_t si : panel.series) {
            const char* color = detail::kPalette[si % (sizeof detail::kPalette / sizeof *detail::kPalette)];
            svg += "<line x1=\"" + detail::fmt("%.2f", px1 - 150) + "\" y1=\"" +
                   detail::fmt("%.2f", ly - 4) + "\" x2=\"" + detail::fmt("%.2f", px1 - 128) +
                   "\" y2=\"" + detail::fmt("%.2f", ly - 4) + "\" stroke=\"";
            svg += color;
            svg += "\" stroke-width=\"2\"/>\n";
            svg += "<text x=\"" + detail::fmt("%.2f", px1 - 122) + "\" y=\"" +
                   detail::fmt("%.2f", ly) +
                   "\" font-family=\"sans-serif\" font-size=\"11\">" + series[si].name +
                   "</text>\n";
            ly += 16.0;
        }
    }
    svg += "</svg>\n";

    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) throw DataError("plot: sink write failure");
    return svg.size();
}

}  // namespace sgdkit
