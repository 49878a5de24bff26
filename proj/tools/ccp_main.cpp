#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccp/evaluate.hpp"
#include "ccp/expression.hpp"
#include "ccp/geo.hpp"
#include "ccp/io.hpp"
#include "ccp/partition.hpp"
#include "ccp/projection.hpp"
#include "ccp/run_config.hpp"
#include "ccp/svg.hpp"
#include "ccp/tsne.hpp"

namespace fs = std::filesystem;
using namespace ccp;

namespace {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    p += suffix;
    return p;
}

nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : cfg.to_map()) {
        j[key] = value;
    }
    return j;
}

void write_labels_csv(const std::vector<std::string>& ids, const LabelVector& labels,
                      const fs::path& path) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (labels.labels[i].find_first_of(",\r\n") != std::string::npos) {
            throw IoError("label '" + labels.labels[i] + "' contains a delimiter or newline");
        }
        out += ids[i];
        out += ',';
        out += labels.labels[i];
        out += '\n';
    }
    atomic_write_file(path, out);
}

struct LoadedData {
    ExpressionMatrix matrix;
    std::optional<LabelVector> labels;
};

// Shared ingest path: read, optionally attach labels and drop rare cell
// types, optionally log-transform.
LoadedData load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) {
        throw IoError("--input is required");
    }
    const MatrixFormat format =
        cfg.format == "auto" ? sniff_matrix_format(cfg.input) : parse_matrix_format(cfg.format);
    const Orientation orientation = parse_orientation(cfg.orientation);

    LoadedData data;
    data.matrix = load_expression_matrix(cfg.input, format, orientation);
    if (!cfg.labels.empty()) {
        LabelVector labels = load_labels(cfg.labels, data.matrix.cell_ids, cfg.labels_header);
        if (cfg.min_cells > 0) {
            auto [filtered_matrix, filtered_labels] =
                filter_rare_cell_types(data.matrix, labels, cfg.min_cells);
            data.matrix = std::move(filtered_matrix);
            labels = std::move(filtered_labels);
        }
        data.labels = std::move(labels);
    }
    if (cfg.log1p) {
        data.matrix = log_transform(std::move(data.matrix));
    }
    return data;
}

PartitionConfig partition_config(const RunConfig& cfg) {
    PartitionConfig pconf;
    pconf.n_supergenes = cfg.n_supergenes;
    pconf.v_c = cfg.vc;
    pconf.method = parse_cluster_method(cfg.cluster_method);
    pconf.metric = parse_gene_metric(cfg.metric);
    pconf.seed = cfg.seed;
    return pconf;
}

SuperGeneMatrix reduce_matrix(const ExpressionMatrix& matrix, const RunConfig& cfg,
                              std::uint64_t seed, GenePartition* partition_out = nullptr,
                              PartitionConfig* pconf_out = nullptr) {
    PartitionConfig pconf = partition_config(cfg);
    pconf.seed = seed;
    const auto variances = gene_variances(matrix);
    const auto split = select_lv_genes(variances, cfg.vc);
    GenePartition partition = partition_genes(matrix, split, pconf);
    const KernelParams params{cfg.tau, cfg.kappa};
    SuperGeneMatrix result = ccp_reduce(matrix, partition, params, parse_cell_metric(cfg.cell_metric));
    if (partition_out != nullptr) *partition_out = std::move(partition);
    if (pconf_out != nullptr) *pconf_out = pconf;
    return result;
}

TsneConfig tsne_config(const RunConfig& cfg, std::uint64_t seed) {
    TsneConfig tc;
    tc.perplexity = cfg.perplexity;
    tc.n_iter = cfg.tsne_iters;
    tc.init = parse_tsne_init(cfg.tsne_init);
    tc.seed = seed;
    return tc;
}

void require_out(const RunConfig& cfg) {
    if (cfg.out.empty()) {
        throw IoError("--out is required");
    }
}

// ---------------------------------------------------------------- fetch ---

void cmd_fetch(const std::string& accession, const std::string& dest) {
    const fs::path dir = dest.empty() ? default_geo_cache_dir() / accession : fs::path(dest);
    const auto files = fetch_geo(accession, dir);
    for (const auto& file : files) {
        std::cout << (file.downloaded ? "downloaded " : "kept ") << file.path.string() << "\n";
    }
}

// --------------------------------------------------------------- reduce ---

void cmd_reduce(const RunConfig& cfg, const std::string& partition_path) {
    require_out(cfg);
    const LoadedData data = load_input(cfg);

    GenePartition partition;
    PartitionConfig pconf = partition_config(cfg);
    if (!partition_path.empty()) {
        partition = partition_from_json(read_text_file(partition_path), &pconf);
        if (partition.source_gene_count != data.matrix.n_genes()) {
            throw std::invalid_argument("partition file covers " +
                                        std::to_string(partition.source_gene_count) +
                                        " genes but the input has " +
                                        std::to_string(data.matrix.n_genes()));
        }
    } else {
        const auto variances = gene_variances(data.matrix);
        const auto split = select_lv_genes(variances, cfg.vc);
        partition = partition_genes(data.matrix, split, pconf);
    }

    const KernelParams params{cfg.tau, cfg.kappa};
    const SuperGeneMatrix sg =
        ccp_reduce(data.matrix, partition, params, parse_cell_metric(cfg.cell_metric));
    write_matrix_csv(sg.as_named(), cfg.out);
    atomic_write_file(with_suffix(cfg.out, ".partition.json"),
                      partition_to_json(partition, pconf));
    if (data.labels.has_value()) {
        write_labels_csv(sg.cell_ids, *data.labels, with_suffix(cfg.out, ".labels.csv"));
    }

    nlohmann::json meta;
    meta["command"] = "reduce";
    meta["config"] = config_json(cfg);
    meta["kernel"] = {{"tau", format_double(cfg.tau)},
                      {"kappa", format_double(cfg.kappa)},
                      {"cell_metric", cfg.cell_metric}};
    meta["columns"] = sg.col_names;
    nlohmann::json scales = nlohmann::json::array();
    for (const auto& scale : sg.scales) {
        scales.push_back({{"eta", format_double(scale.eta)},
                          {"cutoff", format_double(scale.cutoff)}});
    }
    meta["scales"] = std::move(scales);
    meta["n_cells"] = sg.cell_ids.size();
    meta["n_source_genes"] = data.matrix.n_genes();
    meta["n_lv_genes"] = partition.lv_set.size();
    atomic_write_file(with_suffix(cfg.out, ".meta.json"), meta.dump(2) + "\n");

    std::cout << "wrote " << cfg.out << " (" << sg.cell_ids.size() << " cells x "
              << sg.col_names.size() << " columns)\n";
}

// ---------------------------------------------------------------- embed ---

void cmd_embed(const RunConfig& cfg, const std::string& external_coords, bool as_expression) {
    require_out(cfg);

    DenseMatrix points;
    std::vector<std::string> ids;
    std::optional<LabelVector> labels;
    if (as_expression) {
        LoadedData data = load_input(cfg);
        points = std::move(data.matrix.values);
        ids = std::move(data.matrix.cell_ids);
        labels = std::move(data.labels);
    } else {
        if (cfg.input.empty()) {
            throw IoError("--input is required");
        }
        NamedMatrix table = read_matrix_csv(cfg.input);
        points = std::move(table.values);
        ids = std::move(table.row_ids);
    }

    nlohmann::json meta;
    meta["command"] = "embed";
    meta["config"] = config_json(cfg);
    meta["n_cells"] = ids.size();

    if (!external_coords.empty()) {
        const Embedding2D embedding = import_coords(external_coords, &ids);
        export_coords(embedding, cfg.out);
        meta["external"] = true;
        meta["external_source"] = external_coords;
        // Settings expected from the external embedder when one is used.
        meta["external_defaults"] = {{"n_neighbors", 15}};
    } else {
        const TsneResult result = tsne(points, ids, tsne_config(cfg, cfg.seed));
        export_coords(result.embedding, cfg.out);

        std::string kl = "iter,kl\n";
        for (std::size_t i = 0; i < result.kl_trace.size(); ++i) {
            kl += std::to_string(i) + "," + format_double(result.kl_trace[i]) + "\n";
        }
        atomic_write_file(with_suffix(cfg.out, ".kl.csv"), kl);
        meta["external"] = false;
        meta["pca_fallback"] = result.pca_fallback;
        meta["final_kl"] = format_double(result.kl_trace.back());
    }
    if (labels.has_value()) {
        write_labels_csv(ids, *labels, with_suffix(cfg.out, ".labels.csv"));
    }
    atomic_write_file(with_suffix(cfg.out, ".meta.json"), meta.dump(2) + "\n");
    std::cout << "wrote " << cfg.out << " (" << ids.size() << " cells)\n";
}

// ----------------------------------------------------------------- eval ---

void cmd_eval(const RunConfig& cfg, const std::string& method, std::size_t k) {
    require_out(cfg);
    if (cfg.input.empty()) {
        throw IoError("--input is required");
    }
    if (cfg.labels.empty()) {
        throw IoError("--labels is required");
    }
    const NamedMatrix table = read_matrix_csv(cfg.input);
    const LabelVector labels = load_labels(cfg.labels, table.row_ids, cfg.labels_header);
    const std::vector<int> codes = encode_labels(labels.labels);
    const std::size_t k_eff = k > 0 ? k : labels.distinct_types().size();

    const AriReport report =
        benchmark([&](std::uint64_t) { return table.values; }, codes, k_eff,
                  method.empty() ? "eval" : method, 1, cfg.clustering_seeds, cfg.seed);

    fs::path stem = cfg.out;
    if (stem.extension() == ".json" || stem.extension() == ".csv") {
        stem.replace_extension();
    }
    nlohmann::json j = nlohmann::json::parse(report.to_json());
    j["config"] = config_json(cfg);
    j["k"] = k_eff;
    atomic_write_file(stem.string() + ".json", j.dump(2) + "\n");
    atomic_write_file(stem.string() + ".csv",
                      std::string(AriReport::csv_header()) + "\n" + report.csv_row() + "\n");
    std::cout << report.method << " mean_ari=" << format_double(report.mean_ari)
              << " std_ari=" << format_double(report.std_ari) << "\n";
}

// ----------------------------------------------------------------- plot ---

void cmd_plot(const RunConfig& cfg, const std::string& title) {
    require_out(cfg);
    if (cfg.input.empty()) {
        throw IoError("--input is required");
    }
    if (cfg.labels.empty()) {
        throw IoError("--labels is required");
    }
    const Embedding2D embedding = import_coords(cfg.input);
    const LabelVector labels = load_labels(cfg.labels, embedding.cell_ids, cfg.labels_header);
    ScatterOptions options;
    options.title = title;
    atomic_write_file(cfg.out, scatter_svg(embedding, labels, options));
    std::cout << "wrote " << cfg.out << "\n";
}

// ---------------------------------------------------------------- bench ---

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find(',', start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string method_file_name(const std::string& method) {
    std::string name = method;
    for (char& c : name) {
        if (c == '+') c = '_';
    }
    return name;
}

void cmd_bench(const RunConfig& cfg, const std::string& vc_grid, const std::string& n_grid,
               const std::string& methods_list) {
    require_out(cfg);
    if (cfg.labels.empty()) {
        throw IoError("--labels is required for bench");
    }
    const LoadedData data = load_input(cfg);
    const LabelVector& labels = *data.labels;
    const std::vector<int> codes = encode_labels(labels.labels);
    const std::size_t k = labels.distinct_types().size();

    std::vector<double> vcs;
    if (vc_grid.empty()) {
        vcs.push_back(cfg.vc);
    } else {
        for (const auto& tok : split_csv_list(vc_grid)) {
            vcs.push_back(parse_double(tok, "in --vc-grid"));
        }
    }
    std::vector<std::size_t> ns;
    if (n_grid.empty()) {
        ns.push_back(cfg.n_supergenes);
    } else {
        for (const auto& tok : split_csv_list(n_grid)) {
            const double v = parse_double(tok, "in --n-grid");
            if (v < 1.0 || v != std::floor(v)) {
                throw IoError("--n-grid entries must be positive integers, got '" + tok + "'");
            }
            ns.push_back(static_cast<std::size_t>(v));
        }
    }
    std::vector<std::string> methods = split_csv_list(methods_list);
    for (const auto& method : methods) {
        if (method != "ccp" && method != "ccp+tsne" && method != "raw+tsne") {
            throw IoError("unknown bench method '" + method +
                          "' (expected ccp, ccp+tsne or raw+tsne)");
        }
    }

    const fs::path out_dir = cfg.out;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    }

    std::vector<PanelCell> cells(vcs.size() * ns.size());
    nlohmann::json summary;
    summary["command"] = "bench";
    summary["config"] = config_json(cfg);
    summary["k"] = k;
    summary["methods"] = methods;
    nlohmann::json cell_rows = nlohmann::json::array();

    for (std::size_t vi = 0; vi < vcs.size(); ++vi) {
        for (std::size_t niy = 0; niy < ns.size(); ++niy) {
            RunConfig cell_cfg = cfg;
            cell_cfg.vc = vcs[vi];
            cell_cfg.n_supergenes = ns[niy];
            const std::string cell_name =
                "vc" + format_double(cell_cfg.vc) + "_n" + std::to_string(cell_cfg.n_supergenes);
            const fs::path cell_dir = out_dir / cell_name;
            PanelCell& cell = cells[vi * ns.size() + niy];

            nlohmann::json row;
            row["vc"] = format_double(cell_cfg.vc);
            row["n_supergenes"] = cell_cfg.n_supergenes;
            row["dir"] = cell_name;
            try {
                fs::create_directories(cell_dir, ec);
                if (ec) {
                    throw IoError("cannot create '" + cell_dir.string() + "': " + ec.message());
                }
                nlohmann::json method_rows = nlohmann::json::object();
                for (const auto& method : methods) {
                    std::function<DenseMatrix(std::uint64_t)> reduction;
                    if (method == "ccp") {
                        reduction = [&](std::uint64_t seed) {
                            return reduce_matrix(data.matrix, cell_cfg, seed).values;
                        };
                    } else if (method == "ccp+tsne") {
                        reduction = [&](std::uint64_t seed) {
                            const SuperGeneMatrix sg = reduce_matrix(data.matrix, cell_cfg, seed);
                            return tsne(sg.values, sg.cell_ids, tsne_config(cell_cfg, seed))
                                .embedding.coords;
                        };
                    } else {
                        reduction = [&](std::uint64_t seed) {
                            return tsne(data.matrix.values, data.matrix.cell_ids,
                                        tsne_config(cell_cfg, seed))
                                .embedding.coords;
                        };
                    }
                    const AriReport report =
                        benchmark(reduction, codes, k, method, cell_cfg.reduction_seeds,
                                  cell_cfg.clustering_seeds, cell_cfg.seed);
                    atomic_write_file(cell_dir / (method_file_name(method) + ".json"),
                                      report.to_json());
                    method_rows[method] = {{"mean_ari", report.mean_ari},
                                           {"std_ari", report.std_ari}};
                }
                row["methods"] = std::move(method_rows);

                // Panel display uses the base-seed super-gene embedding.
                const SuperGeneMatrix sg = reduce_matrix(data.matrix, cell_cfg, cell_cfg.seed);
                TsneResult shown = tsne(sg.values, sg.cell_ids, tsne_config(cell_cfg, cell_cfg.seed));
                export_coords(shown.embedding, cell_dir / "coords.csv");
                cell.embedding = std::move(shown.embedding);
            } catch (const std::exception& e) {
                cell.embedding.reset();
                cell.note = e.what();
                row["error"] = e.what();
            }
            cell_rows.push_back(std::move(row));
        }
    }

    std::vector<std::string> row_headers;
    row_headers.reserve(vcs.size());
    for (double v : vcs) row_headers.push_back("vc=" + format_double(v));
    std::vector<std::string> col_headers;
    col_headers.reserve(ns.size());
    for (std::size_t n : ns) col_headers.push_back("N=" + std::to_string(n));

    atomic_write_file(out_dir / "panel.svg",
                      panel_svg(cells, vcs.size(), ns.size(), row_headers, col_headers, labels,
                                "clustering accuracy sweep"));
    summary["cells"] = std::move(cell_rows);
    atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << (out_dir / "summary.json").string() << "\n";
}

// ----------------------------------------------------------------- main ---

void add_config_opt(CLI::App* sub, std::string& config_path) {
    sub->add_option("--config", config_path,
                    "Config file (key=value lines or sidecar JSON) applied as defaults");
}

void add_ingest_opts(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--input", cfg.input, "Input matrix file");
    sub->add_option("--labels", cfg.labels, "Two-column cell_id,label CSV");
    sub->add_flag("--labels-header,!--no-labels-header", cfg.labels_header,
                  "Skip the first line of the label file");
    sub->add_option("--format", cfg.format,
                    "Matrix format: auto, dense-csv, dense-tsv or matrix-market");
    sub->add_option("--orientation", cfg.orientation,
                    "On-disk orientation: genes-as-rows or cells-as-rows");
    sub->add_option("--min-cells", cfg.min_cells,
                    "Drop cell types with fewer cells than this (0 disables)");
    sub->add_flag("--log1p,!--raw", cfg.log1p, "Apply ln(1+x) to every entry");
}

void add_reduce_opts(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--n-supergenes", cfg.n_supergenes, "Number of gene clusters N")
        ->check(CLI::PositiveNumber);
    sub->add_option("--vc", cfg.vc, "Variance cutoff ratio in [0, 1]")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--tau", cfg.tau, "Kernel scale multiplier")->check(CLI::PositiveNumber);
    sub->add_option("--kappa", cfg.kappa, "Kernel exponent")->check(CLI::PositiveNumber);
    sub->add_option("--cluster-method", cfg.cluster_method, "kmedoids or kmeans");
    sub->add_option("--metric", cfg.metric,
                    "Gene distance: correlation, covariance or euclidean");
    sub->add_option("--cell-metric", cfg.cell_metric, "Cell distance: euclidean or manhattan");
}

void add_tsne_opts(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--perplexity", cfg.perplexity, "Gaussian affinity perplexity")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tsne-iters", cfg.tsne_iters, "Gradient descent iterations");
    sub->add_option("--tsne-init", cfg.tsne_init, "Initial layout: pca or random");
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                cfg = load_run_config(argv[i + 1]);
            } else if (arg.rfind("--config=", 0) == 0) {
                cfg = load_run_config(arg.substr(9));
            }
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Correlated-cluster projection, embedding and clustering-accuracy toolkit"};
    app.require_subcommand(1);
    std::string config_path;

    std::string fetch_accession;
    std::string fetch_dest;
    CLI::App* fetch = app.add_subcommand("fetch", "Download an accession's supplementary files");
    fetch->add_option("accession", fetch_accession, "Series accession, e.g. GSE57249")->required();
    fetch->add_option("--dest", fetch_dest, "Target directory (default: cache dir / accession)");
    add_config_opt(fetch, config_path);

    std::string partition_path;
    CLI::App* reduce = app.add_subcommand("reduce", "Project gene clusters into super-genes");
    add_ingest_opts(reduce, cfg);
    add_reduce_opts(reduce, cfg);
    reduce->add_option("--partition", partition_path, "Reuse a saved partition JSON");
    reduce->add_option("--seed", cfg.seed, "Seed for the kmeans cluster method");
    reduce->add_option("--out", cfg.out, "Output super-gene CSV");
    reduce->add_option("--run-id", cfg.run_id, "Free-form run tag recorded in metadata");
    add_config_opt(reduce, config_path);

    std::string external_coords;
    bool embed_expression = false;
    CLI::App* embed = app.add_subcommand("embed", "Embed a matrix into 2-D");
    add_ingest_opts(embed, cfg);
    add_tsne_opts(embed, cfg);
    embed->add_flag("--expression", embed_expression,
                    "Treat --input as an expression matrix instead of a reduced CSV");
    embed->add_option("--external-coords", external_coords,
                      "Adopt coordinates from an external embedder instead of running the "
                      "built-in one");
    embed->add_option("--seed", cfg.seed, "Embedding seed");
    embed->add_option("--out", cfg.out, "Output coordinates CSV");
    embed->add_option("--run-id", cfg.run_id, "Free-form run tag recorded in metadata");
    add_config_opt(embed, config_path);

    std::string eval_method;
    std::size_t eval_k = 0;
    CLI::App* eval = app.add_subcommand("eval", "Score k-means clusterings against labels");
    eval->add_option("--input", cfg.input, "Reduced CSV or coordinates CSV");
    eval->add_option("--labels", cfg.labels, "Two-column cell_id,label CSV");
    eval->add_flag("--labels-header,!--no-labels-header", cfg.labels_header,
                   "Skip the first line of the label file");
    eval->add_option("--k", eval_k, "Cluster count (default: number of distinct labels)");
    eval->add_option("--method", eval_method, "Method name recorded in the report");
    eval->add_option("--clustering-seeds", cfg.clustering_seeds, "Number of k-means seeds")
        ->check(CLI::PositiveNumber);
    eval->add_option("--seed", cfg.seed, "Base seed");
    eval->add_option("--out", cfg.out, "Output report path (writes .json and .csv)");
    add_config_opt(eval, config_path);

    std::string plot_title;
    CLI::App* plot = app.add_subcommand("plot", "Render a labeled 2-D scatter to SVG");
    plot->add_option("--input", cfg.input, "Coordinates CSV");
    plot->add_option("--labels", cfg.labels, "Two-column cell_id,label CSV");
    plot->add_flag("--labels-header,!--no-labels-header", cfg.labels_header,
                   "Skip the first line of the label file");
    plot->add_option("--title", plot_title, "Plot title");
    plot->add_option("--out", cfg.out, "Output SVG path");
    add_config_opt(plot, config_path);

    std::string vc_grid;
    std::string n_grid;
    std::string methods_list = "ccp,ccp+tsne,raw+tsne";
    CLI::App* bench = app.add_subcommand("bench", "Seed-grid accuracy comparison across methods");
    add_ingest_opts(bench, cfg);
    add_reduce_opts(bench, cfg);
    add_tsne_opts(bench, cfg);
    bench->add_option("--vc-grid", vc_grid, "Comma-separated variance cutoffs to sweep");
    bench->add_option("--n-grid", n_grid, "Comma-separated super-gene counts to sweep");
    bench->add_option("--methods", methods_list, "Comma-separated subset of ccp,ccp+tsne,raw+tsne");
    bench->add_option("--reduction-seeds", cfg.reduction_seeds, "Reduction seeds per cell")
        ->check(CLI::PositiveNumber);
    bench->add_option("--clustering-seeds", cfg.clustering_seeds, "k-means seeds per reduction")
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", cfg.seed, "Base seed");
    bench->add_option("--out", cfg.out, "Output directory");
    bench->add_option("--run-id", cfg.run_id, "Free-form run tag recorded in metadata");
    add_config_opt(bench, config_path);

    fetch->callback([&] { cmd_fetch(fetch_accession, fetch_dest); });
    reduce->callback([&] { cmd_reduce(cfg, partition_path); });
    embed->callback([&] { cmd_embed(cfg, external_coords, embed_expression); });
    eval->callback([&] { cmd_eval(cfg, eval_method, eval_k); });
    plot->callback([&] { cmd_plot(cfg, plot_title); });
    bench->callback([&] { cmd_bench(cfg, vc_grid, n_grid, methods_list); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const GeoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind == GeoError::Kind::bad_accession ? 2 : 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
