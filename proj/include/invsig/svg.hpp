#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace invsig {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 640;
    int height = 400;
};

// Self-contained SVG line chart. Output depends only on the inputs.
std::string render_line_plot(std::span<const PlotSeries> series, const PlotSpec& spec);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace invsig
