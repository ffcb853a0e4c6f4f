#include "facemimic/harness/plot.hpp"

#include "facemimic/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace facemimic {

namespace {

// 3x5 glyphs, one string of 15 cells per character, row-major.
const std::map<char, const char*>& glyphs() {
    static const std::map<char, const char*> g{
        {'0', "###" "#.#" "#.#" "#.#" "###"}, {'1', ".#." "##." ".#." ".#." "###"},
        {'2', "###" "..#" "###" "#.." "###"}, {'3', "###" "..#" ".##" "..#" "###"},
        {'4', "#.#" "#.#" "###" "..#" "..#"}, {'5', "###" "#.." "###" "..#" "###"},
        {'6', "###" "#.." "###" "#.#" "###"}, {'7', "###" "..#" ".#." ".#." ".#."},
        {'8', "###" "#.#" "###" "#.#" "###"}, {'9', "###" "#.#" "###" "..#" "###"},
        {'A', ".#." "#.#" "###" "#.#" "#.#"}, {'B', "##." "#.#" "##." "#.#" "##."},
        {'C', ".##" "#.." "#.." "#.." ".##"}, {'D', "##." "#.#" "#.#" "#.#" "##."},
        {'E', "###" "#.." "##." "#.." "###"}, {'F', "###" "#.." "##." "#.." "#.."},
        {'G', ".##" "#.." "#.#" "#.#" ".##"}, {'H', "#.#" "#.#" "###" "#.#" "#.#"},
        {'I', "###" ".#." ".#." ".#." "###"}, {'J', "..#" "..#" "..#" "#.#" ".#."},
        {'K', "#.#" "#.#" "##." "#.#" "#.#"}, {'L', "#.." "#.." "#.." "#.." "###"},
        {'M', "#.#" "###" "###" "#.#" "#.#"}, {'N', "##." "#.#" "#.#" "#.#" "#.#"},
        {'O', ".#." "#.#" "#.#" "#.#" ".#."}, {'P', "##." "#.#" "##." "#.." "#.."},
        {'Q', ".#." "#.#" "#.#" "##." ".##"}, {'R', "##." "#.#" "##." "#.#" "#.#"},
        {'S', ".##" "#.." ".#." "..#" "##."}, {'T', "###" ".#." ".#." ".#." ".#."},
        {'U', "#.#" "#.#" "#.#" "#.#" "###"}, {'V', "#.#" "#.#" "#.#" "#.#" ".#."},
        {'W', "#.#" "#.#" "###" "###" "#.#"}, {'X', "#.#" "#.#" ".#." "#.#" "#.#"},
        {'Y', "#.#" "#.#" ".#." ".#." ".#."}, {'Z', "###" "..#" ".#." "#.." "###"},
        {'.', "..." "..." "..." "..." ".#."}, {'-', "..." "..." "###" "..." "..."},
        {'_', "..." "..." "..." "..." "###"}, {'/', "..#" "..#" ".#." "#.." "#.."},
        {'+', "..." ".#." "###" ".#." "..."}, {':', "..." ".#." "..." ".#." "..."},
        {'e', "..." "###" "#.#" "##." "###"}, {' ', "..." "..." "..." "..." "..."},
    };
    return g;
}

using Color = std::array<std::uint8_t, 3>;

class Canvas {
public:
    Canvas(int w, int h) : img_{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 255)} {}

    void put(int x, int y, Color c) {
        if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
        const std::size_t i = (static_cast<std::size_t>(y) * img_.width + x) * 3;
        img_.rgb[i] = c[0];
        img_.rgb[i + 1] = c[1];
        img_.rgb[i + 2] = c[2];
    }

    void rect(int x0, int y0, int x1, int y1, Color c) {
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) put(x, y, c);
    }

    // Returns the text width in pixels.
    int text(int x, int y, const std::string& s, int scale, Color c, bool draw = true) {
        int cx = x;
        for (char ch : s) {
            char key = ch;
            if (!glyphs().count(key)) key = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            if (!glyphs().count(key)) key = ' ';
            const char* g = glyphs().at(key);
            if (draw) {
                for (int r = 0; r < 5; ++r)
                    for (int q = 0; q < 3; ++q)
                        if (g[r * 3 + q] == '#') rect(cx + q * scale, y + r * scale, cx + q * scale + scale - 1, y + r * scale + scale - 1, c);
            }
            cx += 4 * scale;
        }
        return cx - x;
    }

    Rgb8Image take() { return std::move(img_); }

private:
    Rgb8Image img_;
};

std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::fabs(v) < 1e-2 || std::fabs(v) >= 1e4)) {
        std::snprintf(buf, sizeof buf, "%.1e", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.3g", v);
    }
    return buf;
}

double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

const Color kPalette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14},
                          {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};

}  // namespace

Rgb8Image render_bar_chart(const BarChart& chart, int width, int height) {
    if (chart.groups.empty() || chart.series.empty()) throw ArgumentError("bar chart needs groups and series");
    double top = 0.0;
    for (const auto& s : chart.series) {
        if (s.values.size() != chart.groups.size()) throw DimensionError("series '" + s.label + "' has wrong length");
        if (!s.errors.empty() && s.errors.size() != s.values.size()) throw DimensionError("error bars have wrong length");
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double v = s.values[i] + (s.errors.empty() ? 0.0 : s.errors[i]);
            if (!std::isfinite(v) || s.values[i] < 0.0) throw ArgumentError("bar values must be finite and >= 0");
            top = std::max(top, v);
        }
    }
    if (top <= 0.0) top = 1.0;
    const double step = nice_step(top);
    const double ymax = std::ceil(top / step) * step;

    Canvas cv(width, height);
    const Color ink{40, 40, 40};
    const Color grid{225, 225, 225};
    const int left = 70, right = width - 20, plot_top = 40, bottom = height - 60;
    cv.text(left, 12, chart.title, 2, ink);

    for (double t = 0.0; t <= ymax + step * 1e-9; t += step) {
        const int y = bottom - static_cast<int>(std::lround((t / ymax) * (bottom - plot_top)));
        cv.rect(left, y, right, y, grid);
        const std::string label = tick_label(t);
        const int w = cv.text(0, 0, label, 1, ink, false);
        cv.text(left - 6 - w, y - 2, label, 1, ink);
    }
    cv.rect(left, plot_top, left, bottom, ink);
    cv.rect(left, bottom, right, bottom, ink);

    const int ng = static_cast<int>(chart.groups.size());
    const int ns = static_cast<int>(chart.series.size());
    const double group_w = static_cast<double>(right - left) / ng;
    const int bar_w = std::max(2, static_cast<int>(group_w * 0.8 / ns));
    for (int g = 0; g < ng; ++g) {
        const int gx = left + static_cast<int>(g * group_w + group_w * 0.1);
        for (int s = 0; s < ns; ++s) {
            const auto& series = chart.series[static_cast<std::size_t>(s)];
            const double v = series.values[static_cast<std::size_t>(g)];
            const int x0 = gx + s * bar_w;
            const int y = bottom - static_cast<int>(std::lround(v / ymax * (bottom - plot_top)));
            cv.rect(x0, y, x0 + bar_w - 2, bottom - 1, series.color);
            if (!series.errors.empty()) {
                const double e = series.errors[static_cast<std::size_t>(g)];
                const int ya = bottom - static_cast<int>(std::lround((v + e) / ymax * (bottom - plot_top)));
                const int yb = bottom - static_cast<int>(std::lround(std::max(0.0, v - e) / ymax * (bottom - plot_top)));
                const int xm = x0 + (bar_w - 2) / 2;
                cv.rect(xm, ya, xm, yb, ink);
                cv.rect(xm - 2, ya, xm + 2, ya, ink);
                cv.rect(xm - 2, yb, xm + 2, yb, ink);
            }
        }
        const std::string& label = chart.groups[static_cast<std::size_t>(g)];
        const int w = cv.text(0, 0, label, 1, ink, false);
        cv.text(left + static_cast<int>(g * group_w + (group_w - w) / 2), bottom + 6, label, 1, ink);
    }

    int lx = left;
    for (const auto& s : chart.series) {
        cv.rect(lx, height - 30, lx + 10, height - 20, s.color);
        lx += 16 + cv.text(lx + 16, height - 29, s.label, 2, ink) + 20;
    }
    return cv.take();
}

BarChart execution_chart(const EvalReport& report) {
    BarChart chart;
    chart.title = "executed landmark distance (px)";
    BarSeries pipeline{"pipeline", kPalette[0], {}, {}};
    BarSeries random{"random", kPalette[1], {}, {}};
    for (int s = 0;; ++s) {
        const std::string label = subject_label(s);
        const ReportRow* p = report.find("pipeline/" + label, "landmark_distance");
        const ReportRow* r = report.find("random/" + label, "landmark_distance");
        if (!p || !r) break;
        chart.groups.push_back("S" + std::to_string(s));
        pipeline.values.push_back(p->mean);
        pipeline.errors.push_back(p->stderr_);
        random.values.push_back(r->mean);
        random.errors.push_back(r->stderr_);
    }
    if (chart.groups.empty()) throw ArgumentError("report '" + report.experiment + "' has no per-subject rows");
    chart.series = {pipeline, random};
    return chart;
}

BarChart metric_chart(const EvalReport& report, const std::string& metric) {
    BarChart chart;
    chart.title = report.experiment + ": " + metric;
    BarSeries series{metric, kPalette[2], {}, {}};
    for (const auto& r : report.rows) {
        if (r.metric != metric) continue;
        chart.groups.push_back(r.method);
        series.values.push_back(r.mean);
        series.errors.push_back(r.stderr_);
    }
    if (chart.groups.empty()) throw ArgumentError("report '" + report.experiment + "' has no rows for " + metric);
    chart.series = {series};
    return chart;
}

void write_bar_chart(const std::filesystem::path& path, const BarChart& chart) {
    const Rgb8Image img = render_bar_chart(chart);
    write_png_rgb8(path, img.width, img.height, img.rgb);
}

}  // namespace facemimic
