#pragma once

// Minimal static SVG charts: lines, bands, scatter points, shaded spans.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace abm::plot {

struct Line {
    std::vector<double> x, y;
    std::string colour = "#1f77b4";
    bool dashed = false;
    bool dotted = false;
    bool points = false;  // draw markers instead of a polyline
    std::string label;
};

struct Band {
    std::vector<double> x, lo, hi;
    std::string colour = "#1f77b4";
};

struct Figure {
    std::string title, xlabel, ylabel;
    bool logx = false, logy = false;
    std::vector<Line> lines;
    std::vector<Band> bands;
    std::vector<std::pair<double, double>> spans;  // shaded x-intervals
    double width = 640, height = 400;
};

namespace detail {

inline std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        default: o += c;
        }
    }
    return o;
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace detail

inline std::string render_svg(const Figure& f) {
    const double L = 70, R = 20, T = 36, B = 50;
    const double pw = f.width - L - R, ph = f.height - T - B;
    auto tx = [&](double v) { return f.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return f.logy ? std::log10(v) : v; };
    auto ok = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!f.logx || x > 0) && (!f.logy || y > 0);
    };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto grow = [&](double x, double y) {
        if (!ok(x, y)) return;
        x0 = std::min(x0, tx(x));
        x1 = std::max(x1, tx(x));
        y0 = std::min(y0, ty(y));
        y1 = std::max(y1, ty(y));
    };
    for (const auto& l : f.lines)
        for (std::size_t k = 0; k < std::min(l.x.size(), l.y.size()); ++k) grow(l.x[k], l.y[k]);
    for (const auto& b : f.bands)
        for (std::size_t k = 0; k < b.x.size(); ++k) {
            grow(b.x[k], b.lo[k]);
            grow(b.x[k], b.hi[k]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& [a, b] : f.spans) {
        const double xa = std::clamp(px(a), L, L + pw), xb = std::clamp(px(b), L, L + pw);
        s << "<rect x=\"" << xa << "\" y=\"" << T << "\" width=\"" << std::max(xb - xa, 0.5) << "\" height=\"" << ph
          << "\" fill=\"#bbbbbb\" fill-opacity=\"0.5\"/>\n";
    }
    for (const auto& b : f.bands) {
        s << "<polygon fill=\"" << b.colour << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < b.x.size(); ++k)
            if (ok(b.x[k], b.hi[k])) s << px(b.x[k]) << ',' << py(b.hi[k]) << ' ';
        for (std::size_t k = b.x.size(); k-- > 0;)
            if (ok(b.x[k], b.lo[k])) s << px(b.x[k]) << ',' << py(b.lo[k]) << ' ';
        s << "\"/>\n";
    }
    for (const auto& l : f.lines) {
        const std::size_t n = std::min(l.x.size(), l.y.size());
        if (l.points) {
            for (std::size_t k = 0; k < n; ++k)
                if (ok(l.x[k], l.y[k]))
                    s << "<circle cx=\"" << px(l.x[k]) << "\" cy=\"" << py(l.y[k]) << "\" r=\"1.6\" fill=\"" << l.colour
                      << "\" fill-opacity=\"0.6\"/>\n";
            continue;
        }
        s << "<polyline fill=\"none\" stroke=\"" << l.colour << "\" stroke-width=\"1.4\"";
        if (l.dashed) s << " stroke-dasharray=\"6,4\"";
        if (l.dotted) s << " stroke-dasharray=\"2,3\"";
        s << " points=\"";
        for (std::size_t k = 0; k < n; ++k)
            if (ok(l.x[k], l.y[k])) s << px(l.x[k]) << ',' << py(l.y[k]) << ' ';
        s << "\"/>\n";
    }
    // axes and ticks
    s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
        const double X = L + pw * k / 4.0, Y = T + ph * (1.0 - k / 4.0);
        s << "<text x=\"" << X << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
          << detail::num(f.logx ? std::pow(10.0, fx) : fx) << "</text>\n";
        s << "<text x=\"" << L - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">"
          << detail::num(f.logy ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    s << "<text x=\"" << L + pw / 2 << "\" y=\"" << T - 14 << "\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::esc(f.title) << "</text>\n";
    s << "<text x=\"" << L + pw / 2 << "\" y=\"" << f.height - 10 << "\" text-anchor=\"middle\">"
      << detail::esc(f.xlabel) << "</text>\n";
    s << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::esc(f.ylabel) << "</text>\n";
    double ly = T + 14;
    for (const auto& l : f.lines) {
        if (l.label.empty()) continue;
        s << "<text x=\"" << L + pw - 8 << "\" y=\"" << ly << "\" text-anchor=\"end\" fill=\"" << l.colour << "\">"
          << detail::esc(l.label) << "</text>\n";
        ly += 15;
    }
    s << "</svg>\n";
    return s.str();
}

inline void save_svg(const std::string& path, const Figure& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << render_svg(f);
}

}  // namespace abm::plot
