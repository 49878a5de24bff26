#ifndef CCP_EXPRESSION_HPP
#define CCP_EXPRESSION_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ccp/dense_matrix.hpp"

namespace ccp {

// Cells-by-genes expression matrix. `values` is always stored cells-as-rows
// (M x I) regardless of the on-disk orientation; every entry is required to
// be finite and non-negative, and ids must be unique.
struct ExpressionMatrix {
    std::vector<std::string> cell_ids; // length M
    std::vector<std::string> gene_ids; // length I
    DenseMatrix values;                // M x I

    std::size_t n_cells() const { return values.rows; }
    std::size_t n_genes() const { return values.cols; }

    bool operator==(const ExpressionMatrix&) const = default;
};

// Throws std::invalid_argument naming the offending entry/id if any
// ExpressionMatrix invariant is violated.
void validate(const ExpressionMatrix& matrix);

// Per-cell categorical labels, aligned with ExpressionMatrix::cell_ids.
struct LabelVector {
    std::vector<std::string> labels;

    // Sorted unique label values.
    std::vector<std::string> distinct_types() const;

    bool operator==(const LabelVector&) const = default;
};

// Drops every cell whose label occurs fewer than `min_count` times.
// Gene set and relative cell order are unchanged. Throws if no cell survives.
std::pair<ExpressionMatrix, LabelVector>
filter_rare_cell_types(const ExpressionMatrix& matrix, const LabelVector& labels,
                       std::size_t min_count);

// Entry-wise ln(1+x). Throws on negative input naming the entry.
ExpressionMatrix log_transform(ExpressionMatrix matrix);

} // namespace ccp

#endif
