#ifndef CCP_PARTITION_HPP
#define CCP_PARTITION_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccp/expression.hpp"

namespace ccp {

// Population variance (divide by M) of each gene column.
std::vector<double> gene_variances(const ExpressionMatrix& matrix);

// Result of the variance cutoff: indices of low-variance genes (lv) and of
// the genes kept for clustering, both in ascending gene order.
struct LvSplit {
    std::vector<std::size_t> lv;
    std::vector<std::size_t> kept;
};

// Ranks genes by variance descending (ties by ascending index) and assigns
// every gene whose 1-based rank exceeds floor(v_c * I) to the low-variance
// set. Zero-variance genes always land in the LV set: correlation distance
// is undefined on them, while the LV projection handles them via Euclidean
// distances.
LvSplit select_lv_genes(const std::vector<double>& variances, double v_c);

enum class GeneMetric { correlation, covariance, euclidean };
enum class ClusterMethod { kmedoids, kmeans };

GeneMetric parse_gene_metric(std::string_view name);
ClusterMethod parse_cluster_method(std::string_view name);

// Distance between two gene vectors of equal length:
//   correlation -> 1 - pearson(a, b), in [0, 2]; throws on zero variance
//   covariance  -> 1 - cov(a, b) / (sd_a * sd_b + 1e-12), clamped to [0, 2]
//   euclidean   -> ||a - b||_2
double gene_distance(std::span<const double> a, std::span<const double> b, GeneMetric metric);

struct PartitionConfig {
    std::size_t n_supergenes = 1;   // N
    double v_c = 0.8;               // variance cutoff ratio in [0, 1]
    ClusterMethod method = ClusterMethod::kmedoids;
    GeneMetric metric = GeneMetric::correlation;
    std::uint64_t seed = 0;
};

// Disjoint gene clusters plus the low-variance set; together they cover
// 0..source_gene_count-1 exactly once. Clusters are ordered by their
// smallest member, members ascending, so output is deterministic.
struct GenePartition {
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::size_t> lv_set;
    std::size_t source_gene_count = 0;

    std::size_t n_clusters() const { return clusters.size(); }

    bool operator==(const GenePartition&) const = default;
};

// Clusters `split.kept` into config.n_supergenes groups.
// kmedoids: PAM (greedy BUILD, then best-improvement SWAP passes, capped at
// 100) on the configured gene_distance. kmeans: k-means++ / Lloyd on raw
// gene vectors under squared Euclidean. Deterministic given (matrix, config).
GenePartition partition_genes(const ExpressionMatrix& matrix, const LvSplit& split,
                              const PartitionConfig& config);

// JSON serialization: {"clusters": [[...]...], "lv_set": [...], "config": {...}}.
std::string partition_to_json(const GenePartition& partition, const PartitionConfig& config);
GenePartition partition_from_json(const std::string& text, PartitionConfig* config_out = nullptr);

} // namespace ccp

#endif
