#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facemimic/harness/evaluation.hpp"
#include "facemimic/util/png_io.hpp"

namespace facemimic {

struct BarSeries {
    std::string label;
    std::array<std::uint8_t, 3> color{};
    std::vector<double> values;  // one per group
    std::vector<double> errors;  // error bar half-heights, same length or empty
};

struct BarChart {
    std::string title;
    std::vector<std::string> groups;
    std::vector<BarSeries> series;
};

/// Grouped bars with error bars, axis ticks and a legend, in a small bitmap font.
Rgb8Image render_bar_chart(const BarChart& chart, int width = 720, int height = 400);

/// Pipeline vs random executed-landmark distance per subject.
BarChart execution_chart(const EvalReport& report);
/// One bar per method for a single metric.
BarChart metric_chart(const EvalReport& report, const std::string& metric);

void write_bar_chart(const std::filesystem::path& path, const BarChart& chart);

}  // namespace facemimic
