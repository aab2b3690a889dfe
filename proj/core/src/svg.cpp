// SPDX-License-Identifier: Apache-2.0
#include "kdnas/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "kdnas/errors.hpp"

namespace kdnas::svg {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

struct Scale {
    double lo = 0.0, hi = 1.0, out_lo = 0.0, out_hi = 1.0;

    double operator()(double v) const {
        const double t = (v - lo) / (hi - lo);
        return out_lo + t * (out_hi - out_lo);
    }
};

void pad_bounds(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void write_frame(std::ofstream& out, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const Scale& sx, const Scale& sy) {
    out << "<rect x='" << kMarginLeft << "' y='" << kMarginTop << "' width='"
        << (kWidth - kMarginLeft - kMarginRight) << "' height='"
        << (kHeight - kMarginTop - kMarginBottom)
        << "' fill='none' stroke='#333' stroke-width='1'/>\n";
    out << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<text x='" << kWidth / 2 << "' y='" << kHeight - 12
        << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n";
    out << "<text x='18' y='" << kHeight / 2 << "' text-anchor='middle' font-size='13' "
        << "transform='rotate(-90 18 " << kHeight / 2 << ")'>" << y_label << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = sx.lo + (sx.hi - sx.lo) * i / 4.0;
        const double yv = sy.lo + (sy.hi - sy.lo) * i / 4.0;
        out << "<text x='" << sx(xv) << "' y='" << kHeight - kMarginBottom + 18
            << "' text-anchor='middle' font-size='11'>" << fmt(xv) << "</text>\n";
        out << "<text x='" << kMarginLeft - 8 << "' y='" << sy(yv) + 4
            << "' text-anchor='end' font-size='11'>" << fmt(yv) << "</text>\n";
    }
}

}  // namespace

void write_scatter(const std::string& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::vector<Series>& series) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            xlo = std::min(xlo, p[0]);
            xhi = std::max(xhi, p[0]);
            ylo = std::min(ylo, p[1]);
            yhi = std::max(yhi, p[1]);
        }
    }
    pad_bounds(xlo, xhi);
    pad_bounds(ylo, yhi);
    const Scale sx{xlo, xhi, kMarginLeft, kWidth - kMarginRight};
    const Scale sy{ylo, yhi, kHeight - kMarginBottom, kMarginTop};

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StorageError("cannot open plot file " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' font-family='sans-serif'>\n";
    write_frame(out, title, x_label, y_label, sx, sy);
    double legend_y = kMarginTop + 16.0;
    for (const auto& s : series) {
        if (s.connect && s.points.size() > 1) {
            out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
            for (const auto& p : s.points) out << sx(p[0]) << ',' << sy(p[1]) << ' ';
            out << "'/>\n";
        }
        for (const auto& p : s.points) {
            out << "<circle cx='" << sx(p[0]) << "' cy='" << sy(p[1]) << "' r='" << s.radius
                << "' fill='" << s.color << "' fill-opacity='0.65'/>\n";
        }
        if (!s.label.empty()) {
            out << "<circle cx='" << kWidth - kMarginRight - 150 << "' cy='" << legend_y - 4
                << "' r='4' fill='" << s.color << "'/>\n";
            out << "<text x='" << kWidth - kMarginRight - 140 << "' y='" << legend_y
                << "' font-size='12'>" << s.label << "</text>\n";
            legend_y += 16.0;
        }
    }
    out << "</svg>\n";
    if (!out) throw StorageError("failed writing plot " + path);
}

void write_bars(const std::string& path, const std::string& title, const std::string& y_label,
                const std::vector<Bar>& bars, const std::string& color) {
    if (bars.empty()) throw ConfigError("write_bars needs at least one bar");
    double ylo = 0.0, yhi = 0.0;
    for (const auto& b : bars) {
        ylo = std::min(ylo, b.value - b.stddev);
        yhi = std::max(yhi, b.value + b.stddev);
    }
    pad_bounds(ylo, yhi);
    const Scale sy{ylo, yhi, kHeight - kMarginBottom, kMarginTop};
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double step = plot_w / static_cast<double>(bars.size());
    const double bar_w = std::max(1.0, step * 0.8);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StorageError("cannot open plot file " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' font-family='sans-serif'>\n";
    const Scale sx{0.0, static_cast<double>(bars.size()), kMarginLeft, kWidth - kMarginRight};
    write_frame(out, title, "bit index (sorted)", y_label, sx, sy);
    const double zero_y = sy(0.0);
    out << "<line x1='" << kMarginLeft << "' y1='" << zero_y << "' x2='" << kWidth - kMarginRight
        << "' y2='" << zero_y << "' stroke='#888' stroke-dasharray='4 3'/>\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x = kMarginLeft + step * static_cast<double>(i) + (step - bar_w) / 2.0;
        const double v = bars[i].value;
        const double y0 = sy(std::max(0.0, v));
        const double h = std::abs(sy(v) - zero_y);
        out << "<rect x='" << x << "' y='" << y0 << "' width='" << bar_w << "' height='" << h
            << "' fill='" << color << "' fill-opacity='0.8'/>\n";
        if (bars[i].stddev > 0.0) {
            const double cx = x + bar_w / 2.0;
            out << "<line x1='" << cx << "' y1='" << sy(v - bars[i].stddev) << "' x2='" << cx
                << "' y2='" << sy(v + bars[i].stddev) << "' stroke='#333' stroke-width='1'/>\n";
        }
    }
    out << "</svg>\n";
    if (!out) throw StorageError("failed writing plot " + path);
}

}  // namespace kdnas::svg
