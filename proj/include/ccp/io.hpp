#ifndef CCP_IO_HPP
#define CCP_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ccp/dense_matrix.hpp"
#include "ccp/expression.hpp"

namespace ccp {

// I/O and parse failures. The CLI maps these to exit code 2; domain errors
// (std::invalid_argument / std::runtime_error) map to exit code 1.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MatrixFormat { dense_csv, dense_tsv, matrix_market };
enum class Orientation { genes_as_rows, cells_as_rows };

MatrixFormat parse_matrix_format(std::string_view name);   // "dense-csv" | "dense-tsv" | "matrix-market"
Orientation parse_orientation(std::string_view name);      // "genes-as-rows" | "cells-as-rows"

// Picks a format from the file extension: .tsv/.tab -> dense-tsv,
// .mtx/.mm -> matrix-market, anything else -> dense-csv.
MatrixFormat sniff_matrix_format(const std::filesystem::path& path);

// Reads an expression matrix and normalizes it to cells-as-rows.
//
// Dense CSV/TSV: first row = column ids, first column = row ids.
// Matrix Market: "%%MatrixMarket matrix coordinate real general" with 1-based
// indices, densified on load; ids come from the sibling files
// `<stem>.genes.txt` and `<stem>.cells.txt` (one id per line).
ExpressionMatrix load_expression_matrix(const std::filesystem::path& path,
                                        MatrixFormat format,
                                        Orientation orientation);

// Writes `matrix` so that load_expression_matrix(path, format, orientation)
// reproduces it exactly (values bit-identical, ids in order).
void write_expression_matrix(const ExpressionMatrix& matrix,
                             const std::filesystem::path& path,
                             MatrixFormat format,
                             Orientation orientation);

// Two-column CSV `cell_id,label`, reordered to match `cell_ids`.
// Throws on labels for unknown cells and on cells without a label.
LabelVector load_labels(const std::filesystem::path& path,
                        const std::vector<std::string>& cell_ids,
                        bool has_header = false);

// Generic named-table persistence. Values are serialized as the shortest
// decimal that round-trips the exact 64-bit value, so read(write(T)) == T.
void write_matrix_csv(const NamedMatrix& table, const std::filesystem::path& path);
NamedMatrix read_matrix_csv(const std::filesystem::path& path);

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double value);
// Strict full-token parse; throws IoError on trailing garbage or empty input.
double parse_double(std::string_view token, std::string_view context);

// Writes via a temp file in the same directory plus an atomic rename, so
// interrupted runs never leave partial files behind.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

} // namespace ccp

#endif
