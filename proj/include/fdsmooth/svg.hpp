#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace fdsmooth {

// One polyline in a plot; NaN points split the line and are not drawn.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<std::string> comments;  // emitted as XML comments (config hash etc.)
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace detail

// Emits a fixed-size standalone SVG line chart. Output depends only on the
// inputs, so identical runs produce byte-identical plot files.
inline void write_svg_plot(std::ostream& os, const PlotSpec& spec,
                           const std::vector<PlotSeries>& series) {
    const double width = 720, height = 480;
    const double ml = 80, mr = 160, mt = 50, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;

    auto tx = [&spec](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&spec](double v) { return spec.log_y ? std::log10(v) : v; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isnan(s.y[i]) || std::isnan(s.x[i])) continue;
            if (spec.log_x && !(s.x[i] > 0)) continue;
            if (spec.log_y && !(s.y[i] > 0)) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
    }
    if (ymin > ymax) {
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

    static const char* palette[] = {"#1b6ca8", "#c23b22", "#2e8540", "#7b4ea3",
                                    "#b8860b", "#4a4a4a"};
    const std::size_t ncolors = sizeof(palette) / sizeof(palette[0]);

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& c : spec.comments) os << "<!-- " << c << " -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\""
       << " text-anchor=\"middle\">" << spec.title << "</text>\n";

    // Axes box.
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Ticks: at the union of series x positions (phase plots have few), else 5 even ticks.
    std::vector<double> xticks;
    for (const auto& s : series)
        for (double v : s.x) {
            if (spec.log_x && !(v > 0)) continue;
            bool seen = false;
            for (double t : xticks)
                if (t == v) seen = true;
            if (!seen) xticks.push_back(v);
        }
    std::sort(xticks.begin(), xticks.end());
    if (xticks.size() > 12 || xticks.empty()) {
        xticks.clear();
        for (int i = 0; i <= 5; ++i) {
            const double t = xmin + (xmax - xmin) * i / 5.0;
            xticks.push_back(spec.log_x ? std::pow(10.0, t) : t);
        }
    }
    for (double v : xticks) {
        const double x = px(v);
        os << "<line x1=\"" << detail::svg_num(x) << "\" y1=\"" << mt + ph << "\" x2=\""
           << detail::svg_num(x) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << detail::svg_num(x) << "\" y=\"" << mt + ph + 20
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
           << detail::tick_label(v) << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double t = ymin + (ymax - ymin) * i / 5.0;
        const double v = spec.log_y ? std::pow(10.0, t) : t;
        const double y = mt + ph - ph * i / 5.0;
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::svg_num(y) << "\" x2=\"" << ml
           << "\" y2=\"" << detail::svg_num(y) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << detail::svg_num(y + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
           << detail::tick_label(v) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 15
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << spec.x_label
       << "</text>\n";
    os << "<text x=\"20\" y=\"" << mt + ph / 2
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\""
       << " transform=\"rotate(-90 20 " << mt + ph / 2 << ")\">" << spec.y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const PlotSeries& s = series[si];
        const char* color = palette[si % ncolors];
        std::string points;
        auto flush = [&]() {
            if (!points.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << color
                   << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
                points.clear();
            }
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const bool bad = std::isnan(s.y[i]) || std::isnan(s.x[i]) ||
                             (spec.log_x && !(s.x[i] > 0)) || (spec.log_y && !(s.y[i] > 0));
            if (bad) {
                flush();
                continue;
            }
            if (!points.empty()) points += " ";
            points += detail::svg_num(px(s.x[i])) + "," + detail::svg_num(py(s.y[i]));
            os << "<circle cx=\"" << detail::svg_num(px(s.x[i])) << "\" cy=\""
               << detail::svg_num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        flush();
        const double ly = mt + 16 + 18 * static_cast<double>(si);
        os << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << detail::svg_num(ly - 4) << "\" x2=\""
           << ml + pw + 34 << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"1.5\"/>\n";
        os << "<text x=\"" << ml + pw + 40 << "\" y=\"" << detail::svg_num(ly)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace fdsmooth
