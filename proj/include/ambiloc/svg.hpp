#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "ambiloc/types.hpp"

// Small deterministic SVG line-chart emitter for the report figures. Output
// depends only on the chart contents (fixed canvas, fixed formatting), so
// repeated runs produce byte-identical files.

namespace ambiloc {

struct plot_series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;  // optional, same length as y when present
};

struct line_chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<plot_series> series;
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// 1-2-5 tick spacing covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    return ticks;
}

inline std::vector<double> decade_ticks(double lo, double hi) {
    std::vector<double> ticks;
    for (int e = static_cast<int>(std::floor(std::log10(lo))); std::pow(10.0, e) <= hi * (1 + 1e-9);
         ++e) {
        const double t = std::pow(10.0, e);
        if (t >= lo * (1 - 1e-9)) ticks.push_back(t);
    }
    if (ticks.empty()) ticks = {lo, hi};
    return ticks;
}

inline const char* series_color(std::size_t i) {
    static const char* palette[] = {"#1f6fb2", "#d1495b", "#2e8b57", "#8e6bbf",
                                    "#c9820e", "#4a4a4a", "#17a2b8", "#a0522d"};
    return palette[i % (sizeof palette / sizeof palette[0])];
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string render_svg(const line_chart& chart) {
    constexpr double W = 720, H = 480;
    constexpr double ml = 72, mr = 24, mt = 44, mb = 56;
    const double pw = W - ml - mr, ph = H - mt - mb;

    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool any = false;
    for (const auto& s : chart.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double err = i < s.yerr.size() ? s.yerr[i] : 0.0;
            double ylo_i = s.y[i] - err, yhi_i = s.y[i] + err;
            if (chart.log_y) {
                if (!(s.y[i] > 0.0)) continue;
                ylo_i = std::max(ylo_i, s.y[i] * 0.1);
            }
            if (!any) {
                x_lo = x_hi = s.x[i];
                y_lo = ylo_i;
                y_hi = yhi_i;
                any = true;
            } else {
                x_lo = std::min(x_lo, s.x[i]);
                x_hi = std::max(x_hi, s.x[i]);
                y_lo = std::min(y_lo, ylo_i);
                y_hi = std::max(y_hi, yhi_i);
            }
        }
    }
    if (!any) {
        x_lo = y_lo = 0;
        x_hi = y_hi = 1;
    }
    if (x_hi - x_lo <= 0) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (chart.log_y) {
        if (!(y_lo > 0)) y_lo = 1e-6;
        if (!(y_hi > y_lo)) y_hi = y_lo * 10;
        y_lo = std::pow(10.0, std::floor(std::log10(y_lo)));
        y_hi = std::pow(10.0, std::ceil(std::log10(y_hi)));
    } else {
        const double pad = (y_hi - y_lo > 0 ? y_hi - y_lo : 1.0) * 0.06;
        y_lo -= pad;
        y_hi += pad;
    }

    auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) {
        const double t = chart.log_y ? (std::log10(y) - std::log10(y_lo)) /
                                           (std::log10(y_hi) - std::log10(y_lo))
                                     : (y - y_lo) / (y_hi - y_lo);
        return mt + (1.0 - t) * ph;
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"16\">" << detail::xml_escape(chart.title) << "</text>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";

    for (double t : detail::linear_ticks(x_lo, x_hi)) {
        const double px = sx(t);
        os << "<line x1=\"" << detail::svg_num(px) << "\" y1=\"" << mt + ph << "\" x2=\""
           << detail::svg_num(px) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << detail::svg_num(px) << "\" y=\"" << mt + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::tick_label(t) << "</text>\n";
    }
    const auto yticks =
        chart.log_y ? detail::decade_ticks(y_lo, y_hi) : detail::linear_ticks(y_lo, y_hi);
    for (double t : yticks) {
        const double py = sy(t);
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::svg_num(py) << "\" x2=\"" << ml
           << "\" y2=\"" << detail::svg_num(py) << "\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << ml << "\" y1=\"" << detail::svg_num(py) << "\" x2=\"" << ml + pw
           << "\" y2=\"" << detail::svg_num(py) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(py + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::tick_label(t) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << detail::xml_escape(chart.x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
       << " transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">"
       << detail::xml_escape(chart.y_label) << "</text>\n";

    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const auto& s = chart.series[si];
        const char* color = detail::series_color(si);
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (chart.log_y && !(s.y[i] > 0.0)) continue;
            if (!pts.empty()) pts += ' ';
            pts += detail::svg_num(sx(s.x[i])) + "," + detail::svg_num(sy(s.y[i]));
        }
        os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (chart.log_y && !(s.y[i] > 0.0)) continue;
            const double px = sx(s.x[i]), py = sy(s.y[i]);
            os << "<circle cx=\"" << detail::svg_num(px) << "\" cy=\"" << detail::svg_num(py)
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            if (i < s.yerr.size() && s.yerr[i] > 0.0) {
                double lo = s.y[i] - s.yerr[i], hi = s.y[i] + s.yerr[i];
                if (chart.log_y) lo = std::max(lo, y_lo);
                const double plo = sy(lo), phi = sy(hi);
                os << "<line x1=\"" << detail::svg_num(px) << "\" y1=\"" << detail::svg_num(plo)
                   << "\" x2=\"" << detail::svg_num(px) << "\" y2=\"" << detail::svg_num(phi)
                   << "\" stroke=\"" << color << "\"/>\n";
                for (double e : {plo, phi})
                    os << "<line x1=\"" << detail::svg_num(px - 3) << "\" y1=\""
                       << detail::svg_num(e) << "\" x2=\"" << detail::svg_num(px + 3)
                       << "\" y2=\"" << detail::svg_num(e) << "\" stroke=\"" << color << "\"/>\n";
            }
        }
        // legend row
        const double ly = mt + 14 + 16 * static_cast<double>(si);
        os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << detail::svg_num(ly - 4) << "\" x2=\""
           << ml + pw - 130 << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        os << "<text x=\"" << ml + pw - 124 << "\" y=\"" << detail::svg_num(ly)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace ambiloc
