#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "ccp/io.hpp"
#include "test_util.hpp"

using namespace ccp;

namespace {

void write_raw(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

bool bit_equal(double a, double b) {
    std::uint64_t ba, bb;
    std::memcpy(&ba, &a, sizeof a);
    std::memcpy(&bb, &b, sizeof b);
    return ba == bb;
}

} // namespace

TEST_CASE("format_double emits shortest round-trip decimals") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
}

TEST_CASE("format_double/parse_double round-trip is bit exact") {
    const double cases[] = {0.0,
                            -0.0,
                            1.0,
                            0.1,
                            1.0 / 3.0,
                            std::sqrt(2.0),
                            1e300,
                            -1e-300,
                            std::numeric_limits<double>::denorm_min(),
                            std::numeric_limits<double>::max(),
                            123456.78901234567};
    for (const double v : cases) {
        CAPTURE(v);
        CHECK(bit_equal(parse_double(format_double(v), "in test"), v));
    }
}

TEST_CASE("parse_double rejects malformed tokens with context") {
    CHECK_THROWS_WITH_AS(parse_double("", "at line 3"), doctest::Contains("at line 3"), IoError);
    CHECK_THROWS_AS(parse_double("1.5x", "ctx"), IoError);
    CHECK_THROWS_AS(parse_double("abc", "ctx"), IoError);
    CHECK_THROWS_AS(parse_double("1.5 ", "ctx"), IoError);
}

TEST_CASE("format parsers accept documented names only") {
    CHECK(parse_matrix_format("dense-csv") == MatrixFormat::dense_csv);
    CHECK(parse_matrix_format("dense-tsv") == MatrixFormat::dense_tsv);
    CHECK(parse_matrix_format("matrix-market") == MatrixFormat::matrix_market);
    CHECK_THROWS_WITH_AS(parse_matrix_format("parquet"), doctest::Contains("parquet"), IoError);

    CHECK(parse_orientation("genes-as-rows") == Orientation::genes_as_rows);
    CHECK(parse_orientation("cells-as-rows") == Orientation::cells_as_rows);
    CHECK_THROWS_AS(parse_orientation("sideways"), IoError);
}

TEST_CASE("sniff_matrix_format keys off the extension") {
    CHECK(sniff_matrix_format("data.tsv") == MatrixFormat::dense_tsv);
    CHECK(sniff_matrix_format("data.tab") == MatrixFormat::dense_tsv);
    CHECK(sniff_matrix_format("data.TSV") == MatrixFormat::dense_tsv);
    CHECK(sniff_matrix_format("data.mtx") == MatrixFormat::matrix_market);
    CHECK(sniff_matrix_format("data.mm") == MatrixFormat::matrix_market);
    CHECK(sniff_matrix_format("data.csv") == MatrixFormat::dense_csv);
    CHECK(sniff_matrix_format("data.txt") == MatrixFormat::dense_csv);
    CHECK(sniff_matrix_format("data") == MatrixFormat::dense_csv);
}

TEST_CASE("dense CSV round trip preserves values and ids in both orientations") {
    TempDir dir;
    const auto m = make_matrix(3, 2, {0.1, 1.0 / 3.0, 0.0, 2.5, 1e-7, 7.0});

    SUBCASE("cells as rows") {
        const auto path = dir.path / "m.csv";
        write_expression_matrix(m, path, MatrixFormat::dense_csv, Orientation::cells_as_rows);
        const auto back = load_expression_matrix(path, MatrixFormat::dense_csv,
                                                 Orientation::cells_as_rows);
        CHECK(back == m);
    }
    SUBCASE("genes as rows") {
        const auto path = dir.path / "m.csv";
        write_expression_matrix(m, path, MatrixFormat::dense_csv, Orientation::genes_as_rows);
        // On disk the table is genes x cells.
        const std::string text = read_raw(path);
        CHECK(text.substr(0, text.find('\n')) == "id,c0,c1,c2");
        const auto back = load_expression_matrix(path, MatrixFormat::dense_csv,
                                                 Orientation::genes_as_rows);
        CHECK(back == m);
    }
}

TEST_CASE("dense TSV round trip") {
    TempDir dir;
    const auto m = make_matrix(2, 2, {1.25, 0.0, 3.5, 4.75});
    const auto path = dir.path / "m.tsv";
    write_expression_matrix(m, path, MatrixFormat::dense_tsv, Orientation::cells_as_rows);
    CHECK(read_raw(path) == "id\tg0\tg1\nc0\t1.25\t0\nc1\t3.5\t4.75\n");
    const auto back = load_expression_matrix(path, MatrixFormat::dense_tsv,
                                             Orientation::cells_as_rows);
    CHECK(back == m);
}

TEST_CASE("matrix market round trip with sibling id files") {
    TempDir dir;
    // Sparse-ish matrix: zero entries are omitted from the coordinate file.
    const auto m = make_matrix(3, 2, {0.0, 1.5, 2.0, 0.0, 0.0, 0.25});
    const auto path = dir.path / "m.mtx";

    SUBCASE("genes as rows") {
        write_expression_matrix(m, path, MatrixFormat::matrix_market, Orientation::genes_as_rows);
        CHECK(std::filesystem::exists(dir.path / "m.genes.txt"));
        CHECK(std::filesystem::exists(dir.path / "m.cells.txt"));
        const auto back = load_expression_matrix(path, MatrixFormat::matrix_market,
                                                 Orientation::genes_as_rows);
        CHECK(back == m);
    }
    SUBCASE("cells as rows") {
        write_expression_matrix(m, path, MatrixFormat::matrix_market, Orientation::cells_as_rows);
        const auto back = load_expression_matrix(path, MatrixFormat::matrix_market,
                                                 Orientation::cells_as_rows);
        CHECK(back == m);
    }
}

TEST_CASE("matrix market accepts the integer field") {
    TempDir dir;
    const auto path = dir.path / "m.mtx";
    write_raw(path, "%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 3\n2 2 4\n");
    write_raw(dir.path / "m.cells.txt", "c0\nc1\n");
    write_raw(dir.path / "m.genes.txt", "g0\ng1\n");
    const auto m = load_expression_matrix(path, MatrixFormat::matrix_market,
                                          Orientation::cells_as_rows);
    CHECK(m.values.data == std::vector<double>{3, 0, 0, 4});
}

TEST_CASE("matrix market parser rejects malformed input") {
    TempDir dir;
    const auto path = dir.path / "m.mtx";
    write_raw(dir.path / "m.cells.txt", "c0\nc1\n");
    write_raw(dir.path / "m.genes.txt", "g0\ng1\n");

    SUBCASE("wrong banner") {
        write_raw(path, "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::matrix_market,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("header"), IoError);
    }
    SUBCASE("duplicate entry") {
        write_raw(path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 3\n1 1 4\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::matrix_market,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("duplicate"), IoError);
    }
    SUBCASE("index out of range") {
        write_raw(path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::matrix_market,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("out of range"), IoError);
    }
    SUBCASE("entry count mismatch") {
        write_raw(path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 5\n");
        CHECK_THROWS_AS(load_expression_matrix(path, MatrixFormat::matrix_market,
                                               Orientation::cells_as_rows),
                        IoError);
    }
    SUBCASE("id count mismatch against sibling files") {
        write_raw(path, "%%MatrixMarket matrix coordinate real general\n3 2 1\n1 1 5\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::matrix_market,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("mismatch"), IoError);
    }
}

TEST_CASE("dense parser errors carry line numbers") {
    TempDir dir;
    const auto path = dir.path / "m.csv";

    SUBCASE("ragged row") {
        write_raw(path, "id,g0,g1\nc0,1,2\nc1,3\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::dense_csv,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("line 3"), IoError);
    }
    SUBCASE("bad numeric field") {
        write_raw(path, "id,g0,g1\nc0,1,oops\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::dense_csv,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("oops"), IoError);
    }
    SUBCASE("empty file") {
        write_raw(path, "");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::dense_csv,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("empty"), IoError);
    }
    SUBCASE("header without data rows") {
        write_raw(path, "id,g0,g1\n");
        CHECK_THROWS_WITH_AS(load_expression_matrix(path, MatrixFormat::dense_csv,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("no data rows"), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(load_expression_matrix(dir.path / "nowhere.csv",
                                                    MatrixFormat::dense_csv,
                                                    Orientation::cells_as_rows),
                             doctest::Contains("cannot open"), IoError);
    }
}

TEST_CASE("files without a trailing newline still parse") {
    TempDir dir;
    const auto path = dir.path / "m.csv";
    write_raw(path, "id,g0\nc0,1\nc1,2");
    const auto m = load_expression_matrix(path, MatrixFormat::dense_csv,
                                          Orientation::cells_as_rows);
    CHECK(m.values.data == std::vector<double>{1, 2});
}

TEST_CASE("CRLF line endings are tolerated") {
    TempDir dir;
    const auto path = dir.path / "m.csv";
    write_raw(path, "id,g0,g1\r\nc0,1,2\r\nc1,3,4\r\n");
    const auto m = load_expression_matrix(path, MatrixFormat::dense_csv,
                                          Orientation::cells_as_rows);
    CHECK(m.gene_ids == std::vector<std::string>{"g0", "g1"});
    CHECK(m.values.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("load_labels reorders rows to the requested cell order") {
    TempDir dir;
    const auto path = dir.path / "labels.csv";
    write_raw(path, "c2,beta\nc0,alpha\nc1,alpha\n");
    const auto labels = load_labels(path, {"c0", "c1", "c2"});
    CHECK(labels.labels == std::vector<std::string>{"alpha", "alpha", "beta"});
}

TEST_CASE("load_labels can skip a header row") {
    TempDir dir;
    const auto path = dir.path / "labels.csv";
    write_raw(path, "cell_id,label\nc0,x\nc1,y\n");
    const auto labels = load_labels(path, {"c0", "c1"}, /*has_header=*/true);
    CHECK(labels.labels == std::vector<std::string>{"x", "y"});
    // Without the flag the header is treated as a label for cell "cell_id".
    CHECK_THROWS_WITH_AS(load_labels(path, {"c0", "c1"}), doctest::Contains("unknown"), IoError);
}

TEST_CASE("load_labels rejects structural problems") {
    TempDir dir;
    const auto path = dir.path / "labels.csv";

    SUBCASE("duplicate cell") {
        write_raw(path, "c0,x\nc0,y\n");
        CHECK_THROWS_WITH_AS(load_labels(path, {"c0"}), doctest::Contains("duplicate"), IoError);
    }
    SUBCASE("unknown cell") {
        write_raw(path, "c0,x\nc9,y\n");
        CHECK_THROWS_WITH_AS(load_labels(path, {"c0"}), doctest::Contains("c9"), IoError);
    }
    SUBCASE("missing label") {
        write_raw(path, "c0,x\n");
        CHECK_THROWS_WITH_AS(load_labels(path, {"c0", "c1"}), doctest::Contains("c1"), IoError);
    }
    SUBCASE("wrong field count") {
        write_raw(path, "c0,x,extra\n");
        CHECK_THROWS_WITH_AS(load_labels(path, {"c0"}), doctest::Contains("line 1"), IoError);
    }
}

TEST_CASE("named table CSV round trip handles negative values") {
    TempDir dir;
    NamedMatrix table;
    table.row_ids = {"r0", "r1"};
    table.col_names = {"x", "y"};
    table.values = DenseMatrix(2, 2);
    table.values.data = {-1.5, 2.25, 0.0, -1e-12};
    const auto path = dir.path / "table.csv";
    write_matrix_csv(table, path);
    CHECK(read_raw(path).substr(0, 7) == "id,x,y\n");
    CHECK(read_matrix_csv(path) == table);
}

TEST_CASE("write_matrix_csv rejects ids that would corrupt the file") {
    TempDir dir;
    NamedMatrix table;
    table.row_ids = {"r,0"};
    table.col_names = {"x"};
    table.values = DenseMatrix(1, 1);
    CHECK_THROWS_WITH_AS(write_matrix_csv(table, dir.path / "t.csv"),
                         doctest::Contains("delimiter"), IoError);
}

TEST_CASE("atomic_write_file creates parents, replaces content and leaves no temp file") {
    TempDir dir;
    const auto path = dir.path / "a" / "b" / "out.txt";
    atomic_write_file(path, "first");
    CHECK(read_raw(path) == "first");
    atomic_write_file(path, "second");
    CHECK(read_raw(path) == "second");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}
