#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ccp/io.hpp"
#include "ccp/tsne.hpp"
#include "test_util.hpp"

using namespace ccp;

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

DenseMatrix random_points(std::size_t m, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DenseMatrix points(m, d);
    for (double& v : points.data) {
        v = uniform01(rng) * 4.0 - 2.0;
    }
    return points;
}

// Straight-line reference for the affinity construction: per-row bandwidth
// bisection against the entropy target, written independently of the library
// and converged much tighter (1e-9) so discrepancies expose the library.
DenseMatrix reference_affinities(const DenseMatrix& points, double perplexity) {
    const std::size_t m = points.rows;
    DenseMatrix d2(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < points.cols; ++t) {
                const double d = points(i, t) - points(j, t);
                acc += d * d;
            }
            d2(i, j) = acc;
        }
    }
    const double target = std::log(perplexity);
    DenseMatrix cond(m, m);
    std::vector<double> p(m);
    for (std::size_t i = 0; i < m; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        for (int step = 0; step < 500; ++step) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                p[j] = j == i ? 0.0 : std::exp(-beta * d2(i, j));
                sum += p[j];
            }
            double entropy = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                p[j] /= sum;
                if (p[j] > 0.0) entropy -= p[j] * std::log(p[j]);
            }
            if (std::abs(entropy - target) < 1e-9) break;
            if (entropy > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        for (std::size_t j = 0; j < m; ++j) cond(i, j) = p[j];
    }
    DenseMatrix joint(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            joint(i, j) = (cond(i, j) + cond(j, i)) / (2.0 * static_cast<double>(m));
        }
    }
    return joint;
}

} // namespace

TEST_CASE("parse_tsne_init") {
    CHECK(parse_tsne_init("pca") == TsneInit::pca);
    CHECK(parse_tsne_init("random") == TsneInit::random);
    CHECK_THROWS_AS(parse_tsne_init("umap"), IoError);
}

TEST_CASE("calibrated_affinities is a symmetric probability distribution") {
    const auto points = random_points(12, 3, 11);
    const auto joint = calibrated_affinities(points, 4.0);
    double total = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(joint(i, i) == 0.0);
        for (std::size_t j = 0; j < 12; ++j) {
            CHECK(joint(i, j) >= 0.0);
            CHECK(joint(i, j) == joint(j, i));
            total += joint(i, j);
        }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("calibrated_affinities matches an independent bisection") {
    const auto points = random_points(10, 3, 202);
    const auto got = calibrated_affinities(points, 5.0);
    const auto want = reference_affinities(points, 5.0);
    double max_diff = 0.0;
    for (std::size_t t = 0; t < got.data.size(); ++t) {
        max_diff = std::max(max_diff, std::abs(got.data[t] - want.data[t]));
    }
    CHECK(max_diff <= 1e-6);
}

TEST_CASE("equidistant points produce uniform affinities") {
    // Vertices of a regular simplex: scaled standard basis of R^5. Every
    // pairwise distance is sqrt(2), so each entry must be 1/(M(M-1)) = 1/20.
    DenseMatrix points(5, 5);
    for (std::size_t i = 0; i < 5; ++i) points(i, i) = 1.0;
    const auto joint = calibrated_affinities(points, 2.0);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            if (i == j) continue;
            CHECK(joint(i, j) == doctest::Approx(0.05).epsilon(1e-12));
        }
    }
}

TEST_CASE("affinity mass concentrates inside tight pairs") {
    DenseMatrix points(6, 2);
    const double xy[6][2] = {{0, 0}, {0.1, 0}, {10, 10}, {10.1, 10}, {20, 0}, {20.1, 0}};
    for (std::size_t i = 0; i < 6; ++i) {
        points(i, 0) = xy[i][0];
        points(i, 1) = xy[i][1];
    }
    const auto joint = calibrated_affinities(points, 1.5);
    CHECK(joint(0, 1) > 10.0 * joint(0, 2));
    CHECK(joint(2, 3) > 10.0 * joint(2, 4));
}

TEST_CASE("calibrated_affinities validates its inputs") {
    const auto tiny = random_points(3, 2, 1);
    CHECK_THROWS_AS(calibrated_affinities(tiny, 1.5), std::invalid_argument);
    const auto points = random_points(8, 2, 1);
    CHECK_THROWS_AS(calibrated_affinities(points, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(calibrated_affinities(points, 7.0), std::invalid_argument);
}

TEST_CASE("pca_init projects a line onto its first component") {
    // Points on y = 2x: rank-1 data, so the second output column is zero and
    // the first is an increasing multiple of t with standard deviation 1e-4.
    DenseMatrix points(5, 2);
    for (int t = -2; t <= 2; ++t) {
        points(static_cast<std::size_t>(t + 2), 0) = t;
        points(static_cast<std::size_t>(t + 2), 1) = 2.0 * t;
    }
    const auto init = pca_init(points, 0);
    CHECK_FALSE(init.fallback);

    double mean = 0.0;
    for (std::size_t r = 0; r < 5; ++r) mean += init.coords(r, 0);
    mean /= 5.0;
    double var = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
        const double d = init.coords(r, 0) - mean;
        var += d * d;
    }
    var /= 5.0;
    CHECK(std::sqrt(var) == doctest::Approx(1e-4).epsilon(1e-9));

    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(std::abs(init.coords(r, 1)) <= 1e-12);
        if (r > 0) CHECK(init.coords(r, 0) > init.coords(r - 1, 0));
    }
}

TEST_CASE("pca_init covariance and Gram paths agree") {
    // Same data twice: once as 5x3 (covariance path, D < M) and once padded
    // with zero columns to 5x10 (Gram path, M < D). Principal directions are
    // identical, so the coordinates must match.
    const double raw[5][3] = {{1.0, 2.0, 0.5},
                              {2.5, 0.5, 1.0},
                              {0.0, 1.5, 2.0},
                              {3.0, 2.5, 0.0},
                              {1.5, 3.5, 2.5}};
    DenseMatrix narrow(5, 3);
    DenseMatrix wide(5, 10);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            narrow(r, c) = raw[r][c];
            wide(r, c) = raw[r][c];
        }
    }
    const auto a = pca_init(narrow, 0);
    const auto b = pca_init(wide, 0);
    REQUIRE_FALSE(a.fallback);
    REQUIRE_FALSE(b.fallback);
    for (std::size_t t = 0; t < a.coords.data.size(); ++t) {
        CHECK(std::abs(a.coords.data[t] - b.coords.data[t]) <=
              1e-9 + 1e-5 * std::abs(a.coords.data[t]));
    }
}

TEST_CASE("pca_init falls back to seeded random coordinates on rank-0 input") {
    DenseMatrix points(6, 3);
    for (double& v : points.data) v = 2.5;
    const auto a = pca_init(points, 42);
    CHECK(a.fallback);
    CHECK(a.coords.rows == 6);
    // Deterministic per seed, different across seeds.
    const auto b = pca_init(points, 42);
    CHECK(a.coords == b.coords);
    const auto c = pca_init(points, 43);
    CHECK(a.coords != c.coords);
    for (double v : a.coords.data) {
        CHECK(std::abs(v) < 1e-2); // small-scale start
    }
}

TEST_CASE("kl_divergence is translation invariant and non-negative") {
    const auto points = random_points(9, 3, 7);
    const auto joint = calibrated_affinities(points, 3.0);
    auto coords = random_points(9, 2, 8);
    const double kl = kl_divergence(joint, coords);
    CHECK(kl >= -1e-12);
    for (std::size_t r = 0; r < coords.rows; ++r) {
        coords(r, 0) += 3.75;
        coords(r, 1) -= 2.125;
    }
    CHECK(kl_divergence(joint, coords) == doctest::Approx(kl).epsilon(1e-12));
}

TEST_CASE("tsne_gradient matches finite differences of the objective") {
    for (const std::uint64_t seed : {21ULL, 22ULL}) {
        const auto points = random_points(10, 3, seed);
        const auto joint = calibrated_affinities(points, 4.0);
        auto coords = random_points(10, 2, seed + 100);
        const auto grad = tsne_gradient(joint, coords);
        const double h = 1e-6;
        for (std::size_t t = 0; t < coords.data.size(); ++t) {
            const double saved = coords.data[t];
            coords.data[t] = saved + h;
            const double up = kl_divergence(joint, coords);
            coords.data[t] = saved - h;
            const double down = kl_divergence(joint, coords);
            coords.data[t] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double g = grad.data[t];
            const double rel = std::abs(g - fd) / std::max({1e-8, std::abs(g), std::abs(fd)});
            CAPTURE(seed);
            CAPTURE(t);
            CHECK(rel <= 1e-4);
        }
    }
}

TEST_CASE("tsne lowers the objective, records the trace and is deterministic") {
    // Three tight blobs of four points each.
    DenseMatrix points(12, 2);
    const double centers[3][2] = {{0, 0}, {5, 5}, {10, 0}};
    const double offsets[4][2] = {{0.1, 0}, {-0.1, 0}, {0, 0.1}, {0, -0.1}};
    std::vector<std::string> ids;
    for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t o = 0; o < 4; ++o) {
            points(b * 4 + o, 0) = centers[b][0] + offsets[o][0];
            points(b * 4 + o, 1) = centers[b][1] + offsets[o][1];
            ids.push_back("p" + std::to_string(b * 4 + o));
        }
    }

    TsneConfig config;
    config.perplexity = 3.0;
    config.n_iter = 1000;
    config.exaggeration_iters = 30;

    const auto result = tsne(points, ids, config);
    CHECK(result.embedding.cell_ids == ids);
    CHECK(result.embedding.coords.rows == 12);
    CHECK(result.embedding.coords.cols == 2);
    CHECK(result.kl_trace.size() == 1001);
    CHECK(result.kl_trace.back() < result.kl_trace.front());
    CHECK_FALSE(result.pca_fallback);

    // Recentered after the final update.
    double mx = 0.0, my = 0.0;
    for (std::size_t r = 0; r < 12; ++r) {
        mx += result.embedding.coords(r, 0);
        my += result.embedding.coords(r, 1);
    }
    CHECK(std::abs(mx / 12.0) <= 1e-9);
    CHECK(std::abs(my / 12.0) <= 1e-9);

    const auto again = tsne(points, ids, config);
    CHECK(again.embedding == result.embedding);
    CHECK(again.kl_trace == result.kl_trace);
}

TEST_CASE("tsne random init honours the seed") {
    const auto points = random_points(10, 4, 5);
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("c" + std::to_string(i));
    TsneConfig config;
    config.perplexity = 3.0;
    config.n_iter = 40;
    config.exaggeration_iters = 10;
    config.init = TsneInit::random;
    config.seed = 9;
    const auto a = tsne(points, ids, config);
    const auto b = tsne(points, ids, config);
    CHECK(a.embedding == b.embedding);
    config.seed = 10;
    const auto c = tsne(points, ids, config);
    CHECK(a.embedding != c.embedding);
    CHECK_FALSE(a.pca_fallback);
}

TEST_CASE("tsne requires one id per point") {
    const auto points = random_points(8, 2, 3);
    CHECK_THROWS_AS(tsne(points, {"only", "two"}, TsneConfig{}), std::invalid_argument);
}

TEST_CASE("coordinate CSV round trip is bit exact") {
    TempDir dir;
    Embedding2D embedding;
    embedding.cell_ids = {"a", "b", "c"};
    embedding.coords = DenseMatrix(3, 2);
    embedding.coords.data = {1.0 / 3.0, -2.5e-7, 0.0, 19.25, -0.125, 3.0};
    const auto path = dir.path / "coords.csv";
    export_coords(embedding, path);
    const auto back = import_coords(path);
    CHECK(back == embedding);
}

TEST_CASE("import_coords reorders rows to the reference ids") {
    TempDir dir;
    Embedding2D embedding;
    embedding.cell_ids = {"a", "b"};
    embedding.coords = DenseMatrix(2, 2);
    embedding.coords.data = {1, 2, 3, 4};
    const auto path = dir.path / "coords.csv";
    export_coords(embedding, path);

    const std::vector<std::string> reversed{"b", "a"};
    const auto back = import_coords(path, &reversed);
    CHECK(back.cell_ids == reversed);
    CHECK(back.coords.data == std::vector<double>{3, 4, 1, 2});
}

TEST_CASE("import_coords rejects malformed files") {
    TempDir dir;
    const auto path = dir.path / "coords.csv";
    auto write = [&](const std::string& text) { atomic_write_file(path, text); };

    SUBCASE("wrong header") {
        write("x,y,cell_id\na,1,2\n");
        CHECK_THROWS_WITH_AS(import_coords(path), doctest::Contains("header"), IoError);
    }
    SUBCASE("empty file") {
        write("");
        CHECK_THROWS_AS(import_coords(path), IoError);
    }
    SUBCASE("header only") {
        write("cell_id,x,y\n");
        CHECK_THROWS_WITH_AS(import_coords(path), doctest::Contains("no coordinate rows"), IoError);
    }
    SUBCASE("wrong field count") {
        write("cell_id,x,y\na,1\n");
        CHECK_THROWS_WITH_AS(import_coords(path), doctest::Contains("line 2"), IoError);
    }
    SUBCASE("unknown cell against reference ids") {
        write("cell_id,x,y\nzz,1,2\n");
        const std::vector<std::string> ref{"a"};
        CHECK_THROWS_WITH_AS(import_coords(path, &ref), doctest::Contains("zz"), IoError);
    }
    SUBCASE("missing cell against reference ids") {
        write("cell_id,x,y\na,1,2\n");
        const std::vector<std::string> ref{"a", "b"};
        CHECK_THROWS_WITH_AS(import_coords(path, &ref), doctest::Contains("b"), IoError);
    }
    SUBCASE("duplicate cell id") {
        write("cell_id,x,y\na,1,2\na,3,4\n");
        const std::vector<std::string> ref{"a"};
        CHECK_THROWS_WITH_AS(import_coords(path, &ref), doctest::Contains("duplicate"), IoError);
    }
}
