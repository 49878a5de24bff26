#ifndef CCP_DENSE_MATRIX_HPP
#define CCP_DENSE_MATRIX_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ccp {

// Row-major dense matrix of doubles. The workhorse container for
// cells-by-genes data, super-gene tables and 2-D embeddings.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const DenseMatrix&) const = default;
};

// A dense matrix with row identifiers and column names, as persisted to CSV.
struct NamedMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_names;
    DenseMatrix values;

    bool operator==(const NamedMatrix&) const = default;
};

} // namespace ccp

#endif
