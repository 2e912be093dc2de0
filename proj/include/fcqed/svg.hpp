// svg.hpp - minimal static line charts; one or more panels side by side.

#pragma once

#include <string>
#include <vector>

namespace fcqed {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

// Throws NonFiniteOutput (io.hpp) on NaN/Inf data.
std::string render_svg(const std::vector<Panel>& panels, const std::string& title = {});

} // namespace fcqed
