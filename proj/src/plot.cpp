#include "tsens/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "tsens/errors.hpp"

namespace tsens {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Panel {
    std::string label;
    std::vector<const FigureRow*> rows;
};

}  // namespace

void write_figure_svg(const std::vector<FigureRow>& rows, std::ostream& out) {
    // Group rows into panels by scenario, first appearance order.
    std::vector<Panel> panels;
    std::map<std::string, std::size_t> index;
    for (const auto& row : rows) {
        auto it = index.find(row.scenario);
        if (it == index.end()) {
            index.emplace(row.scenario, panels.size());
            panels.push_back({row.scenario, {}});
            it = index.find(row.scenario);
        }
        panels[it->second].rows.push_back(&row);
    }

    const int cols = panels.size() >= 3 ? 3 : std::max<int>(1, static_cast<int>(panels.size()));
    const int rows_n = (static_cast<int>(panels.size()) + cols - 1) / cols;
    const double pw = 240, ph = 190, ml = 46, mb = 34, mt = 26, mr = 12;
    const double width = cols * pw, height = rows_n * ph;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double ox = (p % cols) * pw;
        const double oy = (p / cols) * ph;
        const double x0 = ox + ml, y0 = oy + mt;
        const double iw = pw - ml - mr, ih = ph - mt - mb;

        double xmin = panel.rows.front()->parameter, xmax = xmin;
        double ymin = panel.rows.front()->truth, ymax = ymin;
        for (const FigureRow* r : panel.rows) {
            xmin = std::min(xmin, r->parameter);
            xmax = std::max(xmax, r->parameter);
            for (double v : {r->estimate, r->lower, r->upper, r->truth}) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
        }
        if (xmax == xmin) { xmin -= 1; xmax += 1; }
        const double ypad = (ymax - ymin) * 0.08 + 1e-9;
        ymin -= ypad;
        ymax += ypad;
        auto X = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * iw; };
        auto Y = [&](double v) { return y0 + ih - (v - ymin) / (ymax - ymin) * ih; };

        out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(iw)
            << "\" height=\"" << num(ih)
            << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"0.8\"/>\n";
        out << "<text x=\"" << num(ox + pw / 2) << "\" y=\"" << num(oy + 15)
            << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">"
            << panel.label << "</text>\n";
        // Axis extremes.
        out << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(Y(ymin) + 3)
            << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"end\">" << num(ymin)
            << "</text>\n";
        out << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(Y(ymax) + 3)
            << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"end\">" << num(ymax)
            << "</text>\n";
        out << "<text x=\"" << num(X(xmin)) << "\" y=\"" << num(y0 + ih + 12)
            << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">" << num(xmin)
            << "</text>\n";
        out << "<text x=\"" << num(X(xmax)) << "\" y=\"" << num(y0 + ih + 12)
            << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">" << num(xmax)
            << "</text>\n";
        // Truth reference.
        const double truth = panel.rows.front()->truth;
        out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(Y(truth)) << "\" x2=\""
            << num(x0 + iw) << "\" y2=\"" << num(Y(truth))
            << "\" stroke=\"#2060c0\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n";
        // Whiskers and points.
        for (const FigureRow* r : panel.rows) {
            out << "<line x1=\"" << num(X(r->parameter)) << "\" y1=\"" << num(Y(r->lower))
                << "\" x2=\"" << num(X(r->parameter)) << "\" y2=\"" << num(Y(r->upper))
                << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
            out << "<circle cx=\"" << num(X(r->parameter)) << "\" cy=\"" << num(Y(r->estimate))
                << "\" r=\"2.4\" fill=\"#c03020\"/>\n";
        }
    }
    out << "</svg>\n";
}

void write_figure_svg_file(const std::vector<FigureRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_figure_svg(rows, out);
}

}  // namespace tsens
