#include "bvlab/svg.hpp"

#include <algorithm>
#include <cstdio>

#include "bvlab/error.hpp"

namespace bvlab::svg {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo;
    double hi;
};

Range column_range(const Matrix& m, std::size_t c) {
    Range r{m(0, c), m(0, c)};
    for (std::size_t i = 1; i < m.rows(); ++i) {
        r.lo = std::min(r.lo, m(i, c));
        r.hi = std::max(r.hi, m(i, c));
    }
    if (r.hi - r.lo < 1e-12) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    return r;
}

} // namespace

std::string scatter_lattice(const Matrix& rows, const Matrix& cols, const LatticeSpec& spec) {
    if (rows.rows() != cols.rows()) throw ShapeError("scatter_lattice: " + rows.shape_str() + " vs " + cols.shape_str());
    if (spec.row_labels.size() != rows.cols() || spec.col_labels.size() != cols.cols())
        throw ShapeError("scatter_lattice: label count mismatch");
    const std::size_t n = rows.rows();
    const std::size_t stride = std::max<std::size_t>(1, (n + spec.max_points - 1) / std::max<std::size_t>(1, spec.max_points));
    const double p = spec.panel_size;
    const double gap = 10.0, left = 70.0, top = 40.0, bottom = 30.0;
    const double width = left + static_cast<double>(cols.cols()) * (p + gap);
    const double height = top + static_cast<double>(rows.cols()) * (p + gap) + bottom;

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<!-- generator: " + std::string(kGeneratorVersion) + " -->\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(left) + "\" y=\"18\" font-size=\"13\">" + escape(spec.title) + "</text>\n";

    std::vector<Range> cr(cols.cols()), rr(rows.cols());
    for (std::size_t j = 0; j < cols.cols(); ++j) cr[j] = column_range(cols, j);
    for (std::size_t i = 0; i < rows.cols(); ++i) rr[i] = column_range(rows, i);

    for (std::size_t j = 0; j < cols.cols(); ++j) {
        const double x0 = left + static_cast<double>(j) * (p + gap);
        s += "<text x=\"" + num(x0 + p / 2) + "\" y=\"" + num(height - 10) + "\" text-anchor=\"middle\">" +
             escape(spec.col_labels[j]) + "</text>\n";
    }
    for (std::size_t i = 0; i < rows.cols(); ++i) {
        const double y0 = top + static_cast<double>(i) * (p + gap);
        s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y0 + p / 2) + "\" text-anchor=\"end\">" +
             escape(spec.row_labels[i]) + "</text>\n";
        for (std::size_t j = 0; j < cols.cols(); ++j) {
            const double x0 = left + static_cast<double>(j) * (p + gap);
            s += "<g>\n<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(p) + "\" height=\"" + num(p) +
                 "\" fill=\"none\" stroke=\"#888\"/>\n";
            for (std::size_t k = 0; k < n; k += stride) {
                const double px = x0 + 2 + (p - 4) * (cols(k, j) - cr[j].lo) / (cr[j].hi - cr[j].lo);
                const double py = y0 + p - 2 - (p - 4) * (rows(k, i) - rr[i].lo) / (rr[i].hi - rr[i].lo);
                s += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"0.8\" fill=\"#1f77b4\"/>\n";
            }
            s += "</g>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

} // namespace bvlab::svg
