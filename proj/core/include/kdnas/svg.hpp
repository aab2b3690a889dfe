// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

namespace kdnas::svg {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    double radius = 2.5;
    std::vector<std::array<double, 2>> points;
    bool connect = false;  // draw a polyline through the points
};

// Standalone scatter/line chart. Axes are linear with padded data bounds.
void write_scatter(const std::string& path, const std::string& title, const std::string& x_label,
                   const std::string& y_label, const std::vector<Series>& series);

struct Bar {
    double value = 0.0;
    double stddev = 0.0;  // error whisker; 0 disables
};

// Vertical bar chart (values may be negative).
void write_bars(const std::string& path, const std::string& title, const std::string& y_label,
                const std::vector<Bar>& bars, const std::string& color = "#1f77b4");

}  // namespace kdnas::svg
