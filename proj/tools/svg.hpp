#pragma once

// Minimal static SVG charts. Coordinates are printed with two decimals so
// that identical inputs give identical bytes.

#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ordrisk::cli::svg {

inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline constexpr std::array<const char*, 4> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

class Canvas {
public:
    Canvas(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, std::string_view fill, double opacity = 1.0) {
        body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(std::max(w, 0.0)) +
                 "\" height=\"" + num(std::max(h, 0.0)) + "\" fill=\"" + std::string(fill) + "\"";
        if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
        body_ += "/>\n";
    }
    void line(double x1, double y1, double x2, double y2, std::string_view stroke = "#000", bool dashed = false) {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                 "\" stroke=\"" + std::string(stroke) + "\"";
        if (dashed) body_ += " stroke-dasharray=\"4 3\"";
        body_ += "/>\n";
    }
    void circle(double cx, double cy, double r, std::string_view fill) {
        body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
                 std::string(fill) + "\"/>\n";
    }
    void text(double x, double y, std::string_view s, std::string_view anchor = "start", double size = 11,
              double rotate = 0) {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                 "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\"";
        if (rotate != 0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
        body_ += ">" + escape(s) + "</text>\n";
    }

    std::string str() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
               "\">\n<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" + body_ + "</svg>\n";
    }

private:
    double width_;
    double height_;
    std::string body_;
};

struct Series {
    std::string name;
    std::vector<double> values;
};

/// Overlaid histograms of values in [0, 1], one colour per series.
inline std::string histogram(std::string_view title, std::string_view x_label, const std::vector<Series>& series,
                             std::size_t bins = 25) {
    const double w = 520, h = 360, left = 55, right = 20, top = 60, bottom = 50;
    const double pw = w - left - right, ph = h - top - bottom;
    Canvas c(w, h);
    c.text(w / 2, 22, title, "middle", 14);

    std::vector<std::vector<double>> freq;
    double peak = 0.0;
    for (const auto& s : series) {
        std::vector<double> f(bins, 0.0);
        for (double v : s.values) {
            auto b = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * static_cast<double>(bins));
            f[std::min(b, bins - 1)] += 1.0;
        }
        if (!s.values.empty())
            for (auto& x : f) x /= static_cast<double>(s.values.size());
        for (double x : f) peak = std::max(peak, x);
        freq.push_back(std::move(f));
    }
    if (peak <= 0.0) peak = 1.0;

    const double bw = pw / static_cast<double>(bins);
    for (std::size_t i = 0; i < series.size(); ++i)
        for (std::size_t b = 0; b < bins; ++b) {
            const double bh = freq[i][b] / peak * ph;
            c.rect(left + static_cast<double>(b) * bw, top + ph - bh, bw, bh, palette[i % palette.size()], 0.5);
        }

    c.line(left, top + ph, left + pw, top + ph);
    c.line(left, top, left, top + ph);
    for (int t = 0; t <= 5; ++t) {
        const double x = left + pw * t / 5.0;
        c.line(x, top + ph, x, top + ph + 4);
        c.text(x, top + ph + 16, num(t / 5.0), "middle", 10);
    }
    c.text(left - 8, top + 4, num(peak), "end", 10);
    c.text(left - 8, top + ph, "0", "end", 10);
    c.text(left + pw / 2, h - 12, x_label, "middle", 11);
    c.text(16, top + ph / 2, "relative frequency", "middle", 11, -90);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double x = left + 160 * static_cast<double>(i);
        c.rect(x, 32, 10, 10, palette[i % palette.size()], 0.5);
        c.text(x + 15, 41, series[i].name + " (n=" + std::to_string(series[i].values.size()) + ")");
    }
    return c.str();
}

struct DotGroup {
    std::string name;
    std::vector<std::string> labels;
    /// values[series][label]
    std::vector<std::vector<double>> values;
};

/// Rates in [0, 1] per labelled item, items grouped along the x axis.
inline std::string dot_plot(std::string_view title, const std::vector<std::string>& series_names,
                            const std::vector<DotGroup>& groups, double reference) {
    std::size_t items = 0;
    for (const auto& g : groups) items += g.labels.size();
    const double step = 22, gap = 18, left = 55, right = 130, top = 40, bottom = 80, ph = 240;
    const double pw = step * static_cast<double>(items) + gap * static_cast<double>(groups.size());
    const double w = left + pw + right, h = top + ph + bottom;
    Canvas c(w, h);
    c.text(w / 2, 22, title, "middle", 14);
    c.line(left, top + ph, left + pw, top + ph);
    c.line(left, top, left, top + ph);
    for (int t = 0; t <= 4; ++t) {
        const double y = top + ph - ph * t / 4.0;
        c.line(left - 4, y, left, y);
        c.text(left - 7, y + 4, num(t / 4.0), "end", 10);
    }
    c.line(left, top + ph * (1 - reference), left + pw, top + ph * (1 - reference), "#888", true);
    c.text(16, top + ph / 2, "correct rate", "middle", 11, -90);

    double x = left + gap / 2;
    for (const auto& g : groups) {
        const double start = x;
        for (std::size_t k = 0; k < g.labels.size(); ++k) {
            const double cx = x + step / 2;
            for (std::size_t s = 0; s < g.values.size(); ++s)
                c.circle(cx + (static_cast<double>(s) - 0.5 * static_cast<double>(g.values.size() - 1)) * 5,
                         top + ph * (1 - g.values[s][k]), 3.5, palette[s % palette.size()]);
            c.text(cx + 3, top + ph + 10, g.labels[k], "end", 9, -60);
            x += step;
        }
        c.text((start + x) / 2, h - 14, g.name, "middle", 11);
        x += gap;
    }
    for (std::size_t s = 0; s < series_names.size(); ++s) {
        const double y = top + 10 + 16 * static_cast<double>(s);
        c.circle(left + pw + 20, y - 4, 4, palette[s % palette.size()]);
        c.text(left + pw + 30, y, series_names[s]);
    }
    return c.str();
}

struct BarPanel {
    std::string title;
    std::vector<std::string> categories;
    /// values[series][category]; a missing value is drawn as no bar
    std::vector<std::vector<std::optional<double>>> values;
};

/// Panels of grouped vertical bars on a [0, 1] scale.
inline std::string grouped_bars(std::string_view title, const std::vector<std::string>& series_names,
                                const std::vector<BarPanel>& panels) {
    const double pw = 260, ph = 200, left = 45, top = 50, gap = 40, bottom = 60;
    const double w = left + (pw + gap) * static_cast<double>(panels.size()) + 20;
    const double h = top + ph + bottom;
    Canvas c(w, h);
    c.text(w / 2, 20, title, "middle", 14);
    for (std::size_t s = 0; s < series_names.size(); ++s) {
        c.rect(left + 120 * static_cast<double>(s), 28, 10, 10, palette[s % palette.size()]);
        c.text(left + 15 + 120 * static_cast<double>(s), 37, series_names[s]);
    }
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double x0 = left + (pw + gap) * static_cast<double>(p);
        c.line(x0, top + ph, x0 + pw, top + ph);
        c.line(x0, top, x0, top + ph);
        for (int t = 0; t <= 4; ++t) {
            const double y = top + ph - ph * t / 4.0;
            c.line(x0 - 3, y, x0, y);
            c.text(x0 - 5, y + 3, num(t / 4.0), "end", 9);
        }
        c.text(x0 + pw / 2, h - 10, panel.title, "middle", 11);
        const double cw = pw / static_cast<double>(std::max<std::size_t>(panel.categories.size(), 1));
        const double bw = cw * 0.8 / static_cast<double>(std::max<std::size_t>(panel.values.size(), 1));
        for (std::size_t k = 0; k < panel.categories.size(); ++k) {
            const double cx = x0 + cw * static_cast<double>(k) + cw * 0.1;
            for (std::size_t s = 0; s < panel.values.size(); ++s) {
                const auto& v = panel.values[s][k];
                if (!v) continue;
                const double bh = std::clamp(*v, 0.0, 1.0) * ph;
                c.rect(cx + bw * static_cast<double>(s), top + ph - bh, bw, bh, palette[s % palette.size()]);
            }
            c.text(x0 + cw * (static_cast<double>(k) + 0.5), top + ph + 14, panel.categories[k], "middle", 9);
        }
    }
    return c.str();
}

/// Horizontal bars, drawn top to bottom in the given order.
inline std::string horizontal_bars(std::string_view title, std::string_view x_label,
                                   const std::vector<std::string>& labels, const std::vector<double>& values) {
    const double row = 24, left = 150, right = 60, top = 40, bottom = 45, pw = 360;
    const double ph = row * static_cast<double>(labels.size());
    const double w = left + pw + right, h = top + ph + bottom;
    double lo = 0.0, hi = 1.0;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    auto xpos = [&](double v) { return left + (v - lo) / (hi - lo) * pw; };
    Canvas c(w, h);
    c.text(w / 2, 22, title, "middle", 14);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = top + row * static_cast<double>(i);
        const double a = xpos(std::min(0.0, values[i])), b = xpos(std::max(0.0, values[i]));
        c.rect(a, y + 4, b - a, row - 8, palette[0]);
        c.text(left - 6, y + row / 2 + 4, labels[i], "end", 11);
        c.text(b + 4, y + row / 2 + 4, num(values[i]), "start", 10);
    }
    c.line(xpos(0.0), top, xpos(0.0), top + ph);
    c.line(left, top + ph, left + pw, top + ph);
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        c.line(xpos(v), top + ph, xpos(v), top + ph + 4);
        c.text(xpos(v), top + ph + 16, num(v), "middle", 10);
    }
    c.text(left + pw / 2, h - 8, x_label, "middle", 11);
    return c.str();
}

} // namespace ordrisk::cli::svg
