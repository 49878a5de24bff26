#ifndef CCP_SVG_HPP
#define CCP_SVG_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ccp/expression.hpp"
#include "ccp/tsne.hpp"

namespace ccp {

struct ScatterOptions {
    double width = 640.0;
    double height = 480.0;
    double margin_frac = 0.05; // data padding inside the axes
    double point_radius = 3.0;
    std::string title;
};

// 2-D categorical scatter: one <circle> per point, colors from a fixed
// 12-color cycle keyed by sorted label order, legend on the right.
// Byte-identical output for identical input.
std::string scatter_svg(const Embedding2D& embedding, const LabelVector& labels,
                        const ScatterOptions& options = {});

struct PanelCell {
    std::optional<Embedding2D> embedding; // empty -> cell is marked failed
    std::string note;                     // shown when the cell failed
};

// Tiled grid of scatters sharing one legend; row/col headers label the grid
// axes (e.g. variance cutoffs by super-gene counts).
std::string panel_svg(const std::vector<PanelCell>& cells, std::size_t n_rows,
                      std::size_t n_cols, const std::vector<std::string>& row_headers,
                      const std::vector<std::string>& col_headers,
                      const LabelVector& labels, const std::string& title = "");

} // namespace ccp

#endif
