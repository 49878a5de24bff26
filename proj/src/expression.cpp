#include "ccp/expression.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ccp {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (!seen.insert(id).second) {
            throw std::invalid_argument(std::string("duplicate ") + what + " id: '" + id + "'");
        }
    }
}

} // namespace

void validate(const ExpressionMatrix& matrix) {
    const std::size_t m = matrix.n_cells();
    const std::size_t i = matrix.n_genes();
    if (m == 0 || i == 0) {
        throw std::invalid_argument("expression matrix must have at least one cell and one gene");
    }
    if (matrix.cell_ids.size() != m) {
        throw std::invalid_argument("cell id count does not match row count");
    }
    if (matrix.gene_ids.size() != i) {
        throw std::invalid_argument("gene id count does not match column count");
    }
    check_unique(matrix.cell_ids, "cell");
    check_unique(matrix.gene_ids, "gene");
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < i; ++c) {
            const double v = matrix.values(r, c);
            if (!std::isfinite(v)) {
                throw std::invalid_argument("non-finite value at cell '" + matrix.cell_ids[r] +
                                            "' (row " + std::to_string(r) + "), gene '" +
                                            matrix.gene_ids[c] + "' (column " + std::to_string(c) + ")");
            }
            if (v < 0.0) {
                throw std::invalid_argument("negative value at cell '" + matrix.cell_ids[r] +
                                            "' (row " + std::to_string(r) + "), gene '" +
                                            matrix.gene_ids[c] + "' (column " + std::to_string(c) + ")");
            }
        }
    }
}

std::vector<std::string> LabelVector::distinct_types() const {
    std::set<std::string> unique(labels.begin(), labels.end());
    return {unique.begin(), unique.end()};
}

std::pair<ExpressionMatrix, LabelVector>
filter_rare_cell_types(const ExpressionMatrix& matrix, const LabelVector& labels,
                       std::size_t min_count) {
    if (labels.labels.size() != matrix.n_cells()) {
        throw std::invalid_argument("label vector length " + std::to_string(labels.labels.size()) +
                                    " does not match cell count " + std::to_string(matrix.n_cells()));
    }
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& label : labels.labels) {
        ++counts[label];
    }

    std::vector<std::size_t> keep;
    keep.reserve(matrix.n_cells());
    for (std::size_t r = 0; r < matrix.n_cells(); ++r) {
        if (counts[labels.labels[r]] >= min_count) {
            keep.push_back(r);
        }
    }
    if (keep.empty()) {
        throw std::runtime_error("zero cells remain after filtering cell types with fewer than " +
                                 std::to_string(min_count) + " cells");
    }

    ExpressionMatrix out;
    out.gene_ids = matrix.gene_ids;
    out.cell_ids.reserve(keep.size());
    out.values = DenseMatrix(keep.size(), matrix.n_genes());
    LabelVector out_labels;
    out_labels.labels.reserve(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const std::size_t src = keep[r];
        out.cell_ids.push_back(matrix.cell_ids[src]);
        out_labels.labels.push_back(labels.labels[src]);
        std::copy(matrix.values.row(src).begin(), matrix.values.row(src).end(),
                  out.values.row(r).begin());
    }
    return {std::move(out), std::move(out_labels)};
}

ExpressionMatrix log_transform(ExpressionMatrix matrix) {
    for (std::size_t r = 0; r < matrix.n_cells(); ++r) {
        for (std::size_t c = 0; c < matrix.n_genes(); ++c) {
            double& v = matrix.values(r, c);
            if (v < 0.0) {
                throw std::invalid_argument("log transform requires non-negative input; got " +
                                            std::to_string(v) + " at cell '" + matrix.cell_ids[r] +
                                            "', gene '" + matrix.gene_ids[c] + "'");
            }
            v = std::log1p(v);
        }
    }
    return matrix;
}

} // namespace ccp
