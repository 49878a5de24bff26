#include "ccp/projection.hpp"

#include <cmath>
#include <stdexcept>

#include "ccp/io.hpp"

namespace ccp {

CellMetric parse_cell_metric(std::string_view name) {
    if (name == "euclidean") return CellMetric::euclidean;
    if (name == "manhattan") return CellMetric::manhattan;
    throw IoError("unknown cell metric '" + std::string(name) +
                  "' (expected euclidean or manhattan)");
}

double kernel_phi(double d, const ClusterScale& scale, const KernelParams& params) {
    if (!(d >= 0.0)) {
        throw std::invalid_argument("kernel_phi requires a non-negative distance");
    }
    if (d >= scale.cutoff) {
        return 0.0;
    }
    if (d == 0.0) {
        return 1.0;
    }
    const double denom = scale.eta * params.tau;
    if (denom <= 0.0) {
        // Limit of the kernel as eta -> 0: zero response to any positive
        // distance, so only exact matches count.
        return 0.0;
    }
    return std::exp(-std::pow(d / denom, params.kappa));
}

namespace {

double cell_distance(std::span<const double> zi, std::span<const double> zj, CellMetric metric) {
    double acc = 0.0;
    if (metric == CellMetric::euclidean) {
        for (std::size_t t = 0; t < zi.size(); ++t) {
            const double d = zi[t] - zj[t];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (std::size_t t = 0; t < zi.size(); ++t) {
        acc += std::abs(zi[t] - zj[t]);
    }
    return acc;
}

// Cells restricted to the cluster's genes, one row per cell.
DenseMatrix restrict_cells(const ExpressionMatrix& matrix, std::span<const std::size_t> gene_set) {
    if (gene_set.empty()) {
        throw std::invalid_argument("gene set must be non-empty");
    }
    for (std::size_t g : gene_set) {
        if (g >= matrix.n_genes()) {
            throw std::invalid_argument("gene set references gene index " + std::to_string(g) +
                                        " outside the matrix");
        }
    }
    DenseMatrix z(matrix.n_cells(), gene_set.size());
    for (std::size_t i = 0; i < matrix.n_cells(); ++i) {
        for (std::size_t t = 0; t < gene_set.size(); ++t) {
            z(i, t) = matrix.values(i, gene_set[t]);
        }
    }
    return z;
}

} // namespace

ClusterScale cluster_scale(const ExpressionMatrix& matrix, std::span<const std::size_t> gene_set,
                           CellMetric metric) {
    const std::size_t m = matrix.n_cells();
    if (m < 2) {
        throw std::invalid_argument("kernel scale estimation requires at least two cells");
    }
    const DenseMatrix z = restrict_cells(matrix, gene_set);

    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
    double pair_sum = 0.0;
    double pair_sq_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = cell_distance(z.row(i), z.row(j), metric);
            pair_sum += d;
            pair_sq_sum += d * d;
            if (d < nearest[i]) nearest[i] = d;
            if (d < nearest[j]) nearest[j] = d;
        }
    }
    const double n_pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
    const double mean = pair_sum / n_pairs;
    const double var = std::max(0.0, pair_sq_sum / n_pairs - mean * mean);

    double eta = 0.0;
    for (double d : nearest) eta += d;
    eta /= static_cast<double>(m);

    ClusterScale scale;
    if (mean == 0.0) {
        // Every cell is identical on this gene set; any positive scale gives
        // the same all-ones projection, and a finite cutoff would zero it.
        scale.eta = 1.0;
        scale.cutoff = std::numeric_limits<double>::infinity();
    } else {
        scale.eta = eta;
        scale.cutoff = mean + 3.0 * std::sqrt(var);
    }
    return scale;
}

std::vector<double> project_cluster(const ExpressionMatrix& matrix,
                                    std::span<const std::size_t> gene_set,
                                    const ClusterScale& scale, const KernelParams& params,
                                    CellMetric metric) {
    const std::size_t m = matrix.n_cells();
    const DenseMatrix z = restrict_cells(matrix, gene_set);
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double d = i == j ? 0.0 : cell_distance(z.row(i), z.row(j), metric);
            acc += kernel_phi(d, scale, params);
        }
        out[i] = acc;
    }
    return out;
}

SuperGeneMatrix ccp_reduce(const ExpressionMatrix& matrix, const GenePartition& partition,
                           const KernelParams& params, CellMetric metric) {
    if (partition.source_gene_count != matrix.n_genes()) {
        throw std::invalid_argument("partition was built for " +
                                    std::to_string(partition.source_gene_count) +
                                    " genes but the matrix has " +
                                    std::to_string(matrix.n_genes()));
    }
    if (partition.clusters.empty()) {
        throw std::invalid_argument("partition has no gene clusters to project");
    }
    const std::size_t m = matrix.n_cells();
    const bool has_lv = !partition.lv_set.empty();
    const std::size_t n_cols = partition.n_clusters() + (has_lv ? 1 : 0);

    SuperGeneMatrix out;
    out.cell_ids = matrix.cell_ids;
    out.values = DenseMatrix(m, n_cols);
    out.scales.reserve(n_cols);
    out.col_names.reserve(n_cols);

    auto fill_column = [&](std::size_t col, std::span<const std::size_t> gene_set) {
        const ClusterScale scale = cluster_scale(matrix, gene_set, metric);
        const std::vector<double> column = project_cluster(matrix, gene_set, scale, params, metric);
        for (std::size_t i = 0; i < m; ++i) {
            out.values(i, col) = column[i];
        }
        out.scales.push_back(scale);
    };

    for (std::size_t c = 0; c < partition.n_clusters(); ++c) {
        fill_column(c, partition.clusters[c]);
        out.col_names.push_back("sg_" + std::to_string(c + 1));
    }
    if (has_lv) {
        fill_column(n_cols - 1, partition.lv_set);
        out.col_names.push_back("lv");
    }
    return out;
}

} // namespace ccp
