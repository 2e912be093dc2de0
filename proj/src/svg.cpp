#include "fcqed/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fcqed/io.hpp"

namespace fcqed {

namespace {

constexpr double panel_w = 420, panel_h = 320;
constexpr double ml = 62, mr = 16, mt = 34, mb = 48;
constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
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

double nice_step(double span, int target) {
    double raw = span / target;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double f = raw / mag;
    double nice = f < 1.5 ? 1 : f < 3 ? 2 : f < 7 ? 5 : 10;
    return nice * mag;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void widen() {
        if (!(lo < hi)) {
            double pad = lo == 0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        }
    }
};

std::string tick_label(double v, double step) {
    if (std::abs(v) < step * 1e-9) v = 0;
    int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step))));
    if (std::abs(v) >= 1e5 || (v != 0 && std::abs(v) < 1e-3)) return fmt::format("{:.2g}", v);
    return fmt::format("{:.{}f}", v, decimals);
}

void render_panel(std::string& out, const Panel& panel, double ox) {
    Range xr, yr;
    for (const auto& s : panel.series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("series x/y length mismatch");
        for (double v : s.x) {
            if (!std::isfinite(v)) throw NonFiniteOutput("non-finite x value in plot series '" + s.label + "'");
            xr.lo = std::min(xr.lo, v);
            xr.hi = std::max(xr.hi, v);
        }
        for (double v : s.y) {
            if (!std::isfinite(v)) throw NonFiniteOutput("non-finite y value in plot series '" + s.label + "'");
            yr.lo = std::min(yr.lo, v);
            yr.hi = std::max(yr.hi, v);
        }
    }
    if (!std::isfinite(xr.lo)) xr = {0, 1};
    if (!std::isfinite(yr.lo)) yr = {0, 1};
    xr.widen();
    yr.widen();
    double ystep = nice_step(yr.hi - yr.lo, 5);
    yr.lo = std::floor(yr.lo / ystep) * ystep;
    yr.hi = std::ceil(yr.hi / ystep) * ystep;
    double xstep = nice_step(xr.hi - xr.lo, 6);

    double x0 = ox + ml, x1 = ox + panel_w - mr, y0 = panel_h - mb, y1 = mt;
    auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333\"/>\n",
                       x0, y1, x1 - x0, y0 - y1);
    for (double t = std::ceil(xr.lo / xstep) * xstep; t <= xr.hi + xstep * 1e-9; t += xstep) {
        double x = px(t);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>\n", x, y0, y1);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x, y0 + 16,
                           tick_label(t, xstep));
    }
    for (double t = yr.lo; t <= yr.hi + ystep * 1e-9; t += ystep) {
        double y = py(t);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n", x0, y, x1);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 5, y + 4,
                           tick_label(t, ystep));
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>\n",
                       (x0 + x1) / 2, mt - 12.0, escape(panel.title));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                       panel_h - 10.0, escape(panel.x_label));
    out += fmt::format("<text transform=\"translate({:.2f},{:.2f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                       ox + 14.0, (y0 + y1) / 2, escape(panel.y_label));

    std::size_t k = 0;
    for (const auto& s : panel.series) {
        const char* color = palette[k % std::size(palette)];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(s.x[i]), py(s.y[i]));
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
        if (!s.label.empty()) {
            double ly = y1 + 14.0 + 14.0 * static_cast<double>(k);
            out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                               x1 - 110, ly - 4, x1 - 92, ly - 4, color);
            out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", x1 - 88, ly, escape(s.label));
        }
        ++k;
    }
}

} // namespace

std::string render_svg(const std::vector<Panel>& panels, const std::string& title) {
    double top = title.empty() ? 0.0 : 24.0;
    double width = panel_w * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        width, panel_h + top);
    if (!title.empty())
        out += fmt::format("<text x=\"{:.2f}\" y=\"17\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", width / 2,
                           escape(title));
    for (std::size_t i = 0; i < panels.size(); ++i) {
        out += fmt::format("<g transform=\"translate(0,{:.0f})\">\n", top);
        render_panel(out, panels[i], panel_w * static_cast<double>(i));
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace fcqed
