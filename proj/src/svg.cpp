#include "ccp/svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace ccp {

namespace {

constexpr std::array<const char*, 12> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
};

// Fixed two-decimal rendering keeps the output byte-stable.
std::string px(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
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

struct Bounds {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
};

Bounds padded_bounds(const DenseMatrix& coords, double margin_frac) {
    Bounds b;
    b.x_lo = b.y_lo = std::numeric_limits<double>::infinity();
    b.x_hi = b.y_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coords.rows; ++i) {
        b.x_lo = std::min(b.x_lo, coords(i, 0));
        b.x_hi = std::max(b.x_hi, coords(i, 0));
        b.y_lo = std::min(b.y_lo, coords(i, 1));
        b.y_hi = std::max(b.y_hi, coords(i, 1));
    }
    auto pad = [margin_frac](double& lo, double& hi) {
        double range = hi - lo;
        if (range <= 0.0) range = 1.0;
        lo -= range * margin_frac;
        hi += range * margin_frac;
    };
    pad(b.x_lo, b.x_hi);
    pad(b.y_lo, b.y_hi);
    return b;
}

std::unordered_map<std::string, std::size_t> color_indices(const LabelVector& labels) {
    std::unordered_map<std::string, std::size_t> index;
    const auto types = labels.distinct_types();
    for (std::size_t t = 0; t < types.size(); ++t) {
        index.emplace(types[t], t);
    }
    return index;
}

// Circles for one embedding mapped into the pixel rectangle
// [x0, x0+w] x [y0, y0+h]; the data y axis points up, SVG's points down.
void append_points(std::string& out, const Embedding2D& embedding, const LabelVector& labels,
                   const std::unordered_map<std::string, std::size_t>& color_of, double x0,
                   double y0, double w, double h, double radius, double margin_frac) {
    const Bounds b = padded_bounds(embedding.coords, margin_frac);
    const double sx = w / (b.x_hi - b.x_lo);
    const double sy = h / (b.y_hi - b.y_lo);
    for (std::size_t i = 0; i < embedding.coords.rows; ++i) {
        const double cx = x0 + (embedding.coords(i, 0) - b.x_lo) * sx;
        const double cy = y0 + h - (embedding.coords(i, 1) - b.y_lo) * sy;
        const std::size_t color = color_of.at(labels.labels[i]) % kPalette.size();
        out += "<circle cx=\"" + px(cx) + "\" cy=\"" + px(cy) + "\" r=\"" + px(radius) +
               "\" fill=\"" + kPalette[color] + "\" fill-opacity=\"0.85\"/>\n";
    }
}

void append_legend(std::string& out, const std::vector<std::string>& types, double x0, double y0) {
    for (std::size_t t = 0; t < types.size(); ++t) {
        const double y = y0 + static_cast<double>(t) * 20.0;
        out += "<rect x=\"" + px(x0) + "\" y=\"" + px(y) + "\" width=\"12\" height=\"12\" fill=\"" +
               kPalette[t % kPalette.size()] + "\"/>\n";
        out += "<text x=\"" + px(x0 + 18.0) + "\" y=\"" + px(y + 10.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(types[t]) +
               "</text>\n";
    }
}

void check_aligned(const Embedding2D& embedding, const LabelVector& labels) {
    if (embedding.coords.rows != embedding.cell_ids.size() || embedding.coords.cols != 2) {
        throw std::invalid_argument("embedding coordinates must be M x 2 with one cell id per row");
    }
    if (labels.labels.size() != embedding.cell_ids.size()) {
        throw std::invalid_argument("labels must align with the embedding rows");
    }
}

} // namespace

std::string scatter_svg(const Embedding2D& embedding, const LabelVector& labels,
                        const ScatterOptions& options) {
    check_aligned(embedding, labels);
    const auto types = labels.distinct_types();
    const auto color_of = color_indices(labels);

    const double legend_w = 160.0;
    const double title_h = options.title.empty() ? 0.0 : 28.0;
    const double total_w = options.width + legend_w;
    const double total_h = options.height + title_h;
    const double pad = 12.0;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(total_w) + "\" height=\"" +
           px(total_h) + "\" viewBox=\"0 0 " + px(total_w) + " " + px(total_h) + "\">\n";
    out += "<rect width=\"" + px(total_w) + "\" height=\"" + px(total_h) +
           "\" fill=\"#ffffff\"/>\n";
    if (!options.title.empty()) {
        out += "<text x=\"" + px(total_w / 2.0) +
               "\" y=\"19\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
               xml_escape(options.title) + "</text>\n";
    }
    out += "<rect x=\"" + px(pad) + "\" y=\"" + px(title_h + pad) + "\" width=\"" +
           px(options.width - 2.0 * pad) + "\" height=\"" + px(options.height - 2.0 * pad) +
           "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    append_points(out, embedding, labels, color_of, pad, title_h + pad, options.width - 2.0 * pad,
                  options.height - 2.0 * pad, options.point_radius, options.margin_frac);
    append_legend(out, types, options.width + 8.0, title_h + pad);
    out += "</svg>\n";
    return out;
}

std::string panel_svg(const std::vector<PanelCell>& cells, std::size_t n_rows, std::size_t n_cols,
                      const std::vector<std::string>& row_headers,
                      const std::vector<std::string>& col_headers, const LabelVector& labels,
                      const std::string& title) {
    if (n_rows == 0 || n_cols == 0 || cells.size() != n_rows * n_cols) {
        throw std::invalid_argument("panel grid shape does not match the number of cells");
    }
    if (row_headers.size() != n_rows || col_headers.size() != n_cols) {
        throw std::invalid_argument("panel header counts do not match the grid shape");
    }
    for (const auto& cell : cells) {
        if (cell.embedding.has_value()) {
            check_aligned(*cell.embedding, labels);
        }
    }
    const auto types = labels.distinct_types();
    const auto color_of = color_indices(labels);

    const double cell_w = 220.0;
    const double cell_h = 180.0;
    const double gap = 10.0;
    const double header_h = 22.0;
    const double row_header_w = 90.0;
    const double legend_w = 160.0;
    const double title_h = title.empty() ? 0.0 : 30.0;
    const double total_w =
        row_header_w + static_cast<double>(n_cols) * (cell_w + gap) + gap + legend_w;
    const double total_h =
        title_h + header_h + static_cast<double>(n_rows) * (cell_h + gap) + gap;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(total_w) + "\" height=\"" +
           px(total_h) + "\" viewBox=\"0 0 " + px(total_w) + " " + px(total_h) + "\">\n";
    out += "<rect width=\"" + px(total_w) + "\" height=\"" + px(total_h) +
           "\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) {
        out += "<text x=\"" + px(total_w / 2.0) +
               "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
               xml_escape(title) + "</text>\n";
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
        const double x = row_header_w + static_cast<double>(c) * (cell_w + gap) + cell_w / 2.0;
        out += "<text x=\"" + px(x) + "\" y=\"" + px(title_h + 15.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
               xml_escape(col_headers[c]) + "</text>\n";
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double y = title_h + header_h + static_cast<double>(r) * (cell_h + gap) + cell_h / 2.0;
        out += "<text x=\"" + px(row_header_w - 8.0) + "\" y=\"" + px(y + 4.0) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\">" +
               xml_escape(row_headers[r]) + "</text>\n";
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            const double x0 = row_header_w + static_cast<double>(c) * (cell_w + gap);
            const double y0 = title_h + header_h + static_cast<double>(r) * (cell_h + gap);
            out += "<rect x=\"" + px(x0) + "\" y=\"" + px(y0) + "\" width=\"" + px(cell_w) +
                   "\" height=\"" + px(cell_h) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
            const PanelCell& cell = cells[r * n_cols + c];
            if (cell.embedding.has_value()) {
                append_points(out, *cell.embedding, labels, color_of, x0 + 6.0, y0 + 6.0,
                              cell_w - 12.0, cell_h - 12.0, 2.0, 0.05);
            } else {
                out += "<text x=\"" + px(x0 + cell_w / 2.0) + "\" y=\"" + px(y0 + cell_h / 2.0) +
                       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
                       "fill=\"#b00020\">" +
                       xml_escape(cell.note.empty() ? std::string("failed") : cell.note) +
                       "</text>\n";
            }
        }
    }
    append_legend(out, types, total_w - legend_w + 8.0, title_h + header_h);
    out += "</svg>\n";
    return out;
}

} // namespace ccp
