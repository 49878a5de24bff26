#include "ccp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>

namespace ccp {

namespace fs = std::filesystem;

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw IoError("failed to format double");
    }
    return {buf, ptr};
}

double parse_double(std::string_view token, std::string_view context) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || token.empty()) {
        throw IoError("invalid numeric value '" + std::string(token) + "' " + std::string(context));
    }
    return value;
}

void atomic_write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw IoError("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

MatrixFormat parse_matrix_format(std::string_view name) {
    if (name == "dense-csv") return MatrixFormat::dense_csv;
    if (name == "dense-tsv") return MatrixFormat::dense_tsv;
    if (name == "matrix-market") return MatrixFormat::matrix_market;
    throw IoError("unknown matrix format '" + std::string(name) +
                  "' (expected dense-csv, dense-tsv or matrix-market)");
}

Orientation parse_orientation(std::string_view name) {
    if (name == "genes-as-rows") return Orientation::genes_as_rows;
    if (name == "cells-as-rows") return Orientation::cells_as_rows;
    throw IoError("unknown orientation '" + std::string(name) +
                  "' (expected genes-as-rows or cells-as-rows)");
}

MatrixFormat sniff_matrix_format(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".tsv" || ext == ".tab") return MatrixFormat::dense_tsv;
    if (ext == ".mtx" || ext == ".mm") return MatrixFormat::matrix_market;
    return MatrixFormat::dense_csv;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string chomp(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
        line.pop_back();
    }
    return line;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

// Dense table: first row = column names, first column = row ids.
NamedMatrix read_dense_table(const fs::path& path, char delim) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("'" + path.string() + "' is empty; expected a header row");
    }
    auto header = split_line(chomp(line), delim);
    if (header.size() < 2) {
        throw IoError("malformed header in '" + path.string() +
                      "': expected a corner field plus at least one column name");
    }
    NamedMatrix table;
    table.col_names.assign(header.begin() + 1, header.end());
    const std::size_t n_cols = table.col_names.size();

    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) {
            break; // trailing newline
        }
        auto fields = split_line(line, delim);
        if (fields.size() != n_cols + 1) {
            throw IoError("ragged row at line " + std::to_string(line_no) + " of '" + path.string() +
                          "': expected " + std::to_string(n_cols + 1) + " fields, got " +
                          std::to_string(fields.size()));
        }
        table.row_ids.push_back(fields[0]);
        for (std::size_t c = 0; c < n_cols; ++c) {
            values.push_back(parse_double(fields[c + 1], "at line " + std::to_string(line_no) +
                                                             ", column " + std::to_string(c + 2) +
                                                             " of '" + path.string() + "'"));
        }
    }
    if (table.row_ids.empty()) {
        throw IoError("'" + path.string() + "' contains a header but no data rows");
    }
    table.values = DenseMatrix(table.row_ids.size(), n_cols);
    table.values.data = std::move(values);
    return table;
}

std::vector<std::string> read_id_file(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        line = chomp(line);
        if (!line.empty()) {
            ids.push_back(line);
        }
    }
    if (ids.empty()) {
        throw IoError("id file '" + path.string() + "' is empty");
    }
    return ids;
}

fs::path sibling_id_path(const fs::path& matrix_path, const char* suffix) {
    fs::path p = matrix_path;
    p.replace_extension();
    p += suffix;
    return p;
}

NamedMatrix read_matrix_market_table(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("'" + path.string() + "' is empty");
    }
    line = chomp(line);
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
        (field != "real" && field != "integer") || symmetry != "general") {
        throw IoError("unsupported Matrix Market header in '" + path.string() + "': '" + line +
                      "' (expected '%%MatrixMarket matrix coordinate real general')");
    }

    std::size_t line_no = 1;
    // Skip comments.
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (!line.empty() && line[0] != '%') {
            break;
        }
    }
    std::istringstream dims(line);
    long long n_rows = 0, n_cols = 0, n_entries = 0;
    if (!(dims >> n_rows >> n_cols >> n_entries) || n_rows < 1 || n_cols < 1 || n_entries < 0) {
        throw IoError("malformed size line at line " + std::to_string(line_no) + " of '" +
                      path.string() + "'");
    }

    NamedMatrix table;
    table.values = DenseMatrix(static_cast<std::size_t>(n_rows), static_cast<std::size_t>(n_cols));
    std::vector<bool> seen(table.values.data.size(), false);
    long long parsed = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) {
            continue;
        }
        std::istringstream entry(line);
        long long r = 0, c = 0;
        std::string value_token;
        if (!(entry >> r >> c >> value_token)) {
            throw IoError("malformed entry at line " + std::to_string(line_no) + " of '" +
                          path.string() + "'");
        }
        if (r < 1 || r > n_rows || c < 1 || c > n_cols) {
            throw IoError("index out of range at line " + std::to_string(line_no) + " of '" +
                          path.string() + "': (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        }
        const std::size_t flat = static_cast<std::size_t>(r - 1) * table.values.cols +
                                 static_cast<std::size_t>(c - 1);
        if (seen[flat]) {
            throw IoError("duplicate entry at line " + std::to_string(line_no) + " of '" +
                          path.string() + "': (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        }
        seen[flat] = true;
        table.values.data[flat] =
            parse_double(value_token, "at line " + std::to_string(line_no) + " of '" + path.string() + "'");
        ++parsed;
    }
    if (parsed != n_entries) {
        throw IoError("'" + path.string() + "' declares " + std::to_string(n_entries) +
                      " entries but contains " + std::to_string(parsed));
    }
    return table;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            t(c, r) = m(r, c);
        }
    }
    return t;
}

} // namespace

ExpressionMatrix load_expression_matrix(const fs::path& path, MatrixFormat format,
                                        Orientation orientation) {
    ExpressionMatrix matrix;
    if (format == MatrixFormat::matrix_market) {
        NamedMatrix table = read_matrix_market_table(path);
        auto gene_ids = read_id_file(sibling_id_path(path, ".genes.txt"));
        auto cell_ids = read_id_file(sibling_id_path(path, ".cells.txt"));
        const std::size_t expect_rows =
            orientation == Orientation::genes_as_rows ? gene_ids.size() : cell_ids.size();
        const std::size_t expect_cols =
            orientation == Orientation::genes_as_rows ? cell_ids.size() : gene_ids.size();
        if (table.values.rows != expect_rows || table.values.cols != expect_cols) {
            throw IoError("id count mismatch for '" + path.string() + "': matrix is " +
                          std::to_string(table.values.rows) + "x" + std::to_string(table.values.cols) +
                          " but sibling files name " + std::to_string(gene_ids.size()) + " genes and " +
                          std::to_string(cell_ids.size()) + " cells");
        }
        matrix.gene_ids = std::move(gene_ids);
        matrix.cell_ids = std::move(cell_ids);
        matrix.values = orientation == Orientation::genes_as_rows ? transpose(table.values)
                                                                  : std::move(table.values);
    } else {
        const char delim = format == MatrixFormat::dense_tsv ? '\t' : ',';
        NamedMatrix table = read_dense_table(path, delim);
        if (orientation == Orientation::genes_as_rows) {
            matrix.gene_ids = std::move(table.row_ids);
            matrix.cell_ids = std::move(table.col_names);
            matrix.values = transpose(table.values);
        } else {
            matrix.cell_ids = std::move(table.row_ids);
            matrix.gene_ids = std::move(table.col_names);
            matrix.values = std::move(table.values);
        }
    }
    validate(matrix);
    return matrix;
}

namespace {

void write_dense_table(const NamedMatrix& table, const fs::path& path, char delim,
                       const std::string& corner) {
    std::string out;
    out.reserve(table.values.data.size() * 8);
    out += corner;
    for (const auto& name : table.col_names) {
        out += delim;
        out += name;
    }
    out += '\n';
    for (std::size_t r = 0; r < table.values.rows; ++r) {
        out += table.row_ids[r];
        for (std::size_t c = 0; c < table.values.cols; ++c) {
            out += delim;
            out += format_double(table.values(r, c));
        }
        out += '\n';
    }
    atomic_write_file(path, out);
}

void check_table_writable(const NamedMatrix& table, char delim) {
    if (table.row_ids.empty() || table.col_names.empty()) {
        throw IoError("refusing to write a table with no rows or no columns");
    }
    if (table.row_ids.size() != table.values.rows || table.col_names.size() != table.values.cols) {
        throw IoError("table ids do not match value dimensions");
    }
    const std::string forbidden = std::string(1, delim) + "\r\n";
    auto clean = [&](const std::string& id) {
        return id.find_first_of(forbidden) == std::string::npos;
    };
    for (const auto& id : table.row_ids) {
        if (!clean(id)) throw IoError("row id '" + id + "' contains a delimiter or newline");
    }
    for (const auto& name : table.col_names) {
        if (!clean(name)) throw IoError("column name '" + name + "' contains a delimiter or newline");
    }
}

} // namespace

void write_matrix_csv(const NamedMatrix& table, const fs::path& path) {
    check_table_writable(table, ',');
    write_dense_table(table, path, ',', "id");
}

NamedMatrix read_matrix_csv(const fs::path& path) {
    return read_dense_table(path, ',');
}

void write_expression_matrix(const ExpressionMatrix& matrix, const fs::path& path,
                             MatrixFormat format, Orientation orientation) {
    validate(matrix);
    if (format == MatrixFormat::matrix_market) {
        const bool genes_rows = orientation == Orientation::genes_as_rows;
        const std::size_t n_rows = genes_rows ? matrix.n_genes() : matrix.n_cells();
        const std::size_t n_cols = genes_rows ? matrix.n_cells() : matrix.n_genes();
        std::string body;
        std::size_t n_entries = 0;
        for (std::size_t r = 0; r < n_rows; ++r) {
            for (std::size_t c = 0; c < n_cols; ++c) {
                const double v = genes_rows ? matrix.values(c, r) : matrix.values(r, c);
                if (v != 0.0) {
                    body += std::to_string(r + 1);
                    body += ' ';
                    body += std::to_string(c + 1);
                    body += ' ';
                    body += format_double(v);
                    body += '\n';
                    ++n_entries;
                }
            }
        }
        std::string out = "%%MatrixMarket matrix coordinate real general\n";
        out += std::to_string(n_rows) + " " + std::to_string(n_cols) + " " +
               std::to_string(n_entries) + "\n";
        out += body;
        atomic_write_file(path, out);

        auto write_ids = [](const std::vector<std::string>& ids, const fs::path& p) {
            std::string text;
            for (const auto& id : ids) {
                text += id;
                text += '\n';
            }
            atomic_write_file(p, text);
        };
        write_ids(matrix.gene_ids, sibling_id_path(path, ".genes.txt"));
        write_ids(matrix.cell_ids, sibling_id_path(path, ".cells.txt"));
        return;
    }

    const char delim = format == MatrixFormat::dense_tsv ? '\t' : ',';
    NamedMatrix table;
    if (orientation == Orientation::genes_as_rows) {
        table.row_ids = matrix.gene_ids;
        table.col_names = matrix.cell_ids;
        table.values = transpose(matrix.values);
    } else {
        table.row_ids = matrix.cell_ids;
        table.col_names = matrix.gene_ids;
        table.values = matrix.values;
    }
    check_table_writable(table, delim);
    write_dense_table(table, path, delim, "id");
}

LabelVector load_labels(const fs::path& path, const std::vector<std::string>& cell_ids,
                        bool has_header) {
    std::ifstream in = open_input(path);
    std::unordered_map<std::string, std::string> by_cell;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) {
            continue;
        }
        if (has_header && line_no == 1) {
            continue;
        }
        auto fields = split_line(line, ',');
        if (fields.size() != 2) {
            throw IoError("malformed label row at line " + std::to_string(line_no) + " of '" +
                          path.string() + "': expected 'cell_id,label'");
        }
        if (!by_cell.emplace(fields[0], fields[1]).second) {
            throw IoError("duplicate label for cell '" + fields[0] + "' at line " +
                          std::to_string(line_no) + " of '" + path.string() + "'");
        }
    }

    std::unordered_map<std::string_view, bool> known;
    for (const auto& id : cell_ids) {
        known.emplace(id, true);
    }
    for (const auto& [cell, label] : by_cell) {
        if (!known.count(cell)) {
            throw IoError("label file '" + path.string() + "' names unknown cell '" + cell + "'");
        }
    }

    LabelVector out;
    out.labels.reserve(cell_ids.size());
    for (const auto& id : cell_ids) {
        auto it = by_cell.find(id);
        if (it == by_cell.end()) {
            throw IoError("label file '" + path.string() + "' is missing a label for cell '" + id + "'");
        }
        out.labels.push_back(it->second);
    }
    return out;
}

} // namespace ccp
