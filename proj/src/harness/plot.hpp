#pragma once

#include <string>
#include <vector>

#include "landscape/landscape.hpp"

namespace s2d::harness {

/// Evenly spaced contour levels min + k * (max - min) / (count + 1), k = 1..count; empty for a constant grid.
std::vector<double> contour_levels(const Eigen::MatrixXd& z, int count = 10);

/// Self-contained SVG: one <rect class="cell"> per grid cell, a contour path per level, axes and a title
/// from the metadata. Byte-deterministic for a given grid.
std::string emit_plot(const landscape::LandscapeGrid& grid);
void emit_plot_file(const std::string& csv_path, const std::string& svg_path);

}  // namespace s2d::harness
