#ifndef CCP_RUN_CONFIG_HPP
#define CCP_RUN_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace ccp {

// Every knob of the pipeline in one flat bag. Serialized as diff-friendly
// key=value lines; the same map is embedded in every output sidecar so any
// artifact can be reproduced from its own metadata.
struct RunConfig {
    std::string input;
    std::string labels;
    std::string out;
    std::string format = "auto";               // dense-csv | dense-tsv | matrix-market | auto
    std::string orientation = "genes-as-rows"; // genes-as-rows | cells-as-rows
    bool labels_header = false;
    std::size_t min_cells = 15;
    bool log1p = true;
    std::size_t n_supergenes = 50;
    double vc = 0.8;
    double tau = 6.0;
    double kappa = 2.0;
    std::string cluster_method = "kmedoids";   // kmedoids | kmeans
    std::string metric = "correlation";        // correlation | covariance | euclidean
    std::string cell_metric = "euclidean";     // euclidean | manhattan
    double perplexity = 30.0;
    std::size_t tsne_iters = 1000;
    std::string tsne_init = "pca";             // pca | random
    std::uint64_t seed = 0;
    std::size_t reduction_seeds = 10;
    std::size_t clustering_seeds = 30;
    std::string run_id;

    // Key=value view in sorted key order; values use shortest round-trip
    // decimals so serialize/parse is an identity.
    std::map<std::string, std::string> to_map() const;
    static RunConfig from_map(const std::map<std::string, std::string>& entries);

    std::string serialize() const;
};

// Accepts either the flat key=value format or a sidecar JSON carrying a
// "config" object. Unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

} // namespace ccp

#endif
