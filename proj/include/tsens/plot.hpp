#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tsens/simlab.hpp"

namespace tsens {

// Renders figure rows as a panel grid (one panel per scenario label):
// estimate against parameter with lower/upper whiskers and a dashed line at
// the truth value. Self-contained SVG, deterministic byte-for-byte.
void write_figure_svg(const std::vector<FigureRow>& rows, std::ostream& out);
void write_figure_svg_file(const std::vector<FigureRow>& rows, const std::string& path);

}  // namespace tsens
