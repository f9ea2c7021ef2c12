#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oee/errors.hpp"

namespace oee {

// Standalone line-plot SVGs with axes, tick labels, a legend, and optional
// shaded error bands. Output bytes are a deterministic function of the
// FigureSpec.
struct FigureSeries {
    std::string name;
    std::string color_role;  // oee | true | simulated | is | mle | oracle | analytic | estimate...
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> band_lo;  // optional, same length as x
    std::vector<double> band_hi;
};

struct FigureSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<FigureSeries> series;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string svg_tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline std::string series_color(const std::string& role, std::size_t index) {
    // Color roles follow the evaluation figures: ours green, true value
    // black, simulator/MLE red, importance sampling blue.
    if (role == "oee" || role == "estimate") return "#2ca02c";
    if (role == "true" || role == "analytic") return "#000000";
    if (role == "simulated" || role == "mle" || role == "oracle") return "#d62728";
    if (role == "is") return "#1f77b4";
    static const char* fallback[] = {"#8c564b", "#9467bd", "#e377c2", "#7f7f7f", "#bcbd22"};
    return fallback[index % 5];
}

}  // namespace detail

inline std::string render_svg_lineplot(const FigureSpec& fig) {
    if (fig.series.empty()) throw ArgumentError("svg: no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : fig.series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw ArgumentError("svg: series '" + s.name + "' empty or ragged");
        if (!s.band_lo.empty() &&
            (s.band_lo.size() != s.x.size() || s.band_hi.size() != s.x.size()))
            throw ArgumentError("svg: series '" + s.name + "' band size mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                throw ArgumentError("svg: non-finite point in series '" + s.name + "'");
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            double lo = s.band_lo.empty() ? s.y[i] : s.band_lo[i];
            double hi = s.band_hi.empty() ? s.y[i] : s.band_hi[i];
            ymin = std::min(ymin, std::min(lo, s.y[i]));
            ymax = std::max(ymax, std::max(hi, s.y[i]));
        }
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.04 * (xmax - xmin), ypad = 0.07 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    const double w = 640, h = 420;
    const double ml = 72, mr = 18, mt = fig.title.empty() ? 18 : 40, mb = 52;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    if (!fig.title.empty())
        os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
              "font-family=\"sans-serif\">" << fig.title << "</text>\n";

    // Axes and ticks.
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / nticks;
        const double fy = ymin + (ymax - ymin) * i / nticks;
        os << "<line x1=\"" << detail::svg_num(px(fx)) << "\" y1=\"" << mt + ph << "\" x2=\""
           << detail::svg_num(px(fx)) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << detail::svg_num(px(fx)) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << detail::svg_tick_label(fx) << "</text>\n";
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::svg_num(py(fy)) << "\" x2=\"" << ml
           << "\" y2=\"" << detail::svg_num(py(fy)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(py(fy) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
           << detail::svg_tick_label(fy) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 12
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << fig.xlabel
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << fig.ylabel << "</text>\n";

    // Bands first so lines draw on top.
    for (std::size_t si = 0; si < fig.series.size(); ++si) {
        const auto& s = fig.series[si];
        if (s.band_lo.empty()) continue;
        const std::string color = detail::series_color(s.color_role, si);
        os << "<polygon fill=\"" << color << "\" opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.band_hi[i])) << " ";
        for (std::size_t i = s.x.size(); i-- > 0;)
            os << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.band_lo[i])) << " ";
        os << "\"/>\n";
    }
    for (std::size_t si = 0; si < fig.series.size(); ++si) {
        const auto& s = fig.series[si];
        const std::string color = detail::series_color(s.color_role, si);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i]))
               << (i + 1 == s.x.size() ? "" : " ");
        os << "\"/>\n";
    }

    // Legend.
    const double lx = ml + 10, ly = mt + 10;
    for (std::size_t si = 0; si < fig.series.size(); ++si) {
        const auto& s = fig.series[si];
        const double y = ly + 16.0 * static_cast<double>(si);
        os << "<line x1=\"" << lx << "\" y1=\"" << y << "\" x2=\"" << lx + 22 << "\" y2=\"" << y
           << "\" stroke=\"" << detail::series_color(s.color_role, si)
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << lx + 28 << "\" y=\"" << y + 4
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void emit_svg_lineplot(const FigureSpec& fig, const std::string& path) {
    const std::string body = render_svg_lineplot(fig);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << body;
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace oee
