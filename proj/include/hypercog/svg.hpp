#pragma once

// Minimal static SVG scatter plots.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace hypercog {

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    double color = 0.0;
};

struct ScatterStyle {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string color_label;
    bool diverging = false;  // colour scale symmetric around zero
    double width = 640;
    double height = 480;
    double radius = 2.5;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
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

/// t in [0, 1] -> blue..red ramp.
inline std::string ramp_color(double t) {
    t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
    auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    if (t < 0.5) {
        t *= 2.0;
        return fmt::format("#{:02x}{:02x}{:02x}", lerp(49, 240), lerp(54, 240), lerp(149, 240));
    }
    t = (t - 0.5) * 2.0;
    return fmt::format("#{:02x}{:02x}{:02x}", lerp(240, 165), lerp(240, 0), lerp(240, 38));
}

}  // namespace detail

inline void write_scatter_svg(std::ostream& out, const std::vector<ScatterPoint>& pts, const ScatterStyle& style) {
    const double left = 70, right = 110, top = 40, bottom = 60;
    const double pw = style.width - left - right, ph = style.height - top - bottom;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0, c0 = x0, c1 = -x0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
        c0 = std::min(c0, p.color), c1 = std::max(c1, p.color);
    }
    if (pts.empty()) x0 = y0 = c0 = 0, x1 = y1 = c1 = 1;
    if (x1 <= x0) x0 -= 0.5, x1 += 0.5;
    if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
    if (style.diverging) {
        double m = std::max(std::abs(c0), std::abs(c1));
        c0 = -m, c1 = m;
    }
    if (c1 <= c0) c0 -= 0.5, c1 += 0.5;
    auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto sy = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };
    auto num = [](double v) { return fmt::format("{:.4g}", v); };

    out << fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        style.width, style.height, style.width, style.height);
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", left + pw / 2,
                       detail::xml_escape(style.title));
    out << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left,
                       top, pw, ph);
    for (int i = 0; i <= 4; ++i) {
        double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", sx(fx),
                           top + ph + 18, num(fx));
        out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 6, sy(fy) + 4,
                           num(fy));
    }
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                       style.height - 18, detail::xml_escape(style.x_label));
    out << fmt::format("<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
                       top + ph / 2, top + ph / 2, detail::xml_escape(style.y_label));
    out << "<g stroke=\"none\" fill-opacity=\"0.8\">\n";
    for (const auto& p : pts)
        out << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"/>\n", sx(p.x), sy(p.y),
                           style.radius, detail::ramp_color((p.color - c0) / (c1 - c0)));
    out << "</g>\n";

    const double bx = left + pw + 30, bw = 14;
    for (int i = 0; i < 50; ++i) {
        double t = 1.0 - i / 49.0;
        out << fmt::format("<rect x=\"{}\" y=\"{:.2f}\" width=\"{}\" height=\"{:.2f}\" fill=\"{}\"/>\n", bx,
                           top + ph * i / 50.0, bw, ph / 50.0 + 0.5, detail::ramp_color(t));
    }
    out << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", bx + bw + 4, top + 10, num(c1));
    out << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", bx + bw + 4, top + ph, num(c0));
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", bx + bw / 2, top - 8,
                       detail::xml_escape(style.color_label));
    out << "</svg>\n";
}

}  // namespace hypercog
