#include <doctest.h>

#include <string>

#include "ccp/io.hpp"
#include "ccp/run_config.hpp"
#include "test_util.hpp"

using namespace ccp;

namespace {

RunConfig exotic_config() {
    RunConfig cfg;
    cfg.input = "data/matrix.mtx";
    cfg.labels = "data/labels.csv";
    cfg.out = "out/reduced.csv";
    cfg.format = "matrix-market";
    cfg.orientation = "cells-as-rows";
    cfg.labels_header = true;
    cfg.min_cells = 3;
    cfg.log1p = false;
    cfg.n_supergenes = 17;
    cfg.vc = 0.65;
    cfg.tau = 4.5;
    cfg.kappa = 3.25;
    cfg.cluster_method = "kmeans";
    cfg.metric = "euclidean";
    cfg.cell_metric = "manhattan";
    cfg.perplexity = 12.5;
    cfg.tsne_iters = 750;
    cfg.tsne_init = "random";
    cfg.seed = 987654321;
    cfg.reduction_seeds = 4;
    cfg.clustering_seeds = 9;
    cfg.run_id = "sweep-03";
    return cfg;
}

} // namespace

TEST_CASE("serialize/parse is an identity on the defaults") {
    const RunConfig cfg;
    const auto back = parse_run_config(cfg.serialize());
    CHECK(back.to_map() == cfg.to_map());
}

TEST_CASE("serialize/parse round-trips every field") {
    const auto cfg = exotic_config();
    const auto back = parse_run_config(cfg.serialize());
    CHECK(back.to_map() == cfg.to_map());
    CHECK(back.labels_header == true);
    CHECK(back.log1p == false);
    CHECK(back.vc == 0.65);
    CHECK(back.seed == 987654321);
    CHECK(back.run_id == "sweep-03");
}

TEST_CASE("serialize emits sorted key=value lines") {
    const RunConfig cfg;
    const auto text = cfg.serialize();
    CHECK(text.substr(0, text.find('\n')) == "cell_metric=euclidean");
    CHECK(text.find("n_supergenes=50\n") != std::string::npos);
    CHECK(text.find("vc=0.8\n") != std::string::npos);
    CHECK(text.find("min_cells=15\n") != std::string::npos);
    CHECK(text.back() == '\n');
}

TEST_CASE("flat parser skips comments and blank lines") {
    const auto cfg = parse_run_config("# pipeline settings\n\nn_supergenes=8\n\n# tail\nvc=0.5\n");
    CHECK(cfg.n_supergenes == 8);
    CHECK(cfg.vc == 0.5);
    CHECK(cfg.tau == 6.0); // untouched default
}

TEST_CASE("flat parser rejects malformed input") {
    CHECK_THROWS_WITH_AS(parse_run_config("n_supergenes\n"), doctest::Contains("key=value"),
                         IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("=5\n"), doctest::Contains("key=value"), IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("vc=0.5\nvc=0.7\n"), doctest::Contains("duplicate"),
                         IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("wingspan=7\n"), doctest::Contains("wingspan"), IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("vc=banana\n"), doctest::Contains("banana"), IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("min_cells=2.5\n"), doctest::Contains("integer"),
                         IoError);
    CHECK_THROWS_WITH_AS(parse_run_config("log1p=maybe\n"), doctest::Contains("true or false"),
                         IoError);
}

TEST_CASE("boolean keys accept true/false and 1/0") {
    CHECK(parse_run_config("log1p=1\n").log1p == true);
    CHECK(parse_run_config("log1p=0\n").log1p == false);
    CHECK(parse_run_config("labels_header=true\n").labels_header == true);
    CHECK(parse_run_config("labels_header=false\n").labels_header == false);
}

TEST_CASE("JSON sidecars with a config object parse back") {
    const char* text = R"({
      "command": "reduce",
      "columns": ["sg_1", "sg_2"],
      "config": {"n_supergenes": "12", "vc": "0.7", "run_id": "from-json"}
    })";
    const auto cfg = parse_run_config(text);
    CHECK(cfg.n_supergenes == 12);
    CHECK(cfg.vc == 0.7);
    CHECK(cfg.run_id == "from-json");
}

TEST_CASE("JSON config parsing rejects malformed documents") {
    CHECK_THROWS_WITH_AS(parse_run_config("{not json"), doctest::Contains("invalid config JSON"),
                         IoError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"command": "reduce"})"),
                         doctest::Contains("config"), IoError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"config": {"n_supergenes": 12}})"),
                         doctest::Contains("strings"), IoError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"config": {"wingspan": "7"}})"),
                         doctest::Contains("wingspan"), IoError);
}

TEST_CASE("load_run_config reads files and reports missing ones") {
    TempDir dir;
    const auto path = dir.path / "run.cfg";
    const auto cfg = exotic_config();
    atomic_write_file(path, cfg.serialize());
    const auto back = load_run_config(path);
    CHECK(back.to_map() == cfg.to_map());
    CHECK_THROWS_WITH_AS(load_run_config(dir.path / "absent.cfg"), doctest::Contains("absent.cfg"),
                         IoError);
}
