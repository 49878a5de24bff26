#ifndef CCP_PROJECTION_HPP
#define CCP_PROJECTION_HPP

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ccp/dense_matrix.hpp"
#include "ccp/expression.hpp"
#include "ccp/partition.hpp"

namespace ccp {

// Generalized exponential kernel parameters: tau scales the data-derived
// eta, kappa is the exponent.
struct KernelParams {
    double tau = 6.0;
    double kappa = 2.0;
};

enum class CellMetric { euclidean, manhattan };
CellMetric parse_cell_metric(std::string_view name);

// Data-derived kernel scale for one gene cluster: eta is the average
// nearest-neighbor distance between cells restricted to the cluster, cutoff
// is the pairwise-distance outlier fence (mean + 3 sd) beyond which the
// kernel is exactly zero.
struct ClusterScale {
    double eta = 1.0;
    double cutoff = std::numeric_limits<double>::infinity();
};

// exp(-(d / (eta * tau))^kappa) for d < cutoff, else 0. phi(0) = 1 whenever
// cutoff > 0; as eta -> 0 the kernel degenerates to exact-match counting.
double kernel_phi(double d, const ClusterScale& scale, const KernelParams& params);

// Restricts cells to `gene_set` coordinates and derives eta (mean over cells
// of the nearest-other-cell distance) and cutoff (mean + 3 population sd of
// the M(M-1)/2 pairwise distances). All-identical cells degenerate to
// eta = 1, cutoff = +inf. Requires M >= 2.
ClusterScale cluster_scale(const ExpressionMatrix& matrix,
                           std::span<const std::size_t> gene_set,
                           CellMetric metric = CellMetric::euclidean);

// Super-gene column for one cluster: x_i = sum_m phi(||z_i - z_m||) over all
// cells m including i itself, with unit weights.
std::vector<double> project_cluster(const ExpressionMatrix& matrix,
                                    std::span<const std::size_t> gene_set,
                                    const ClusterScale& scale,
                                    const KernelParams& params,
                                    CellMetric metric = CellMetric::euclidean);

// M x (N+1) super-gene table: columns sg_1..sg_N from the clusters plus a
// final lv column when the low-variance set is non-empty. `scales` holds the
// eta/cutoff pair actually used for each column.
struct SuperGeneMatrix {
    std::vector<std::string> cell_ids;
    std::vector<std::string> col_names; // sg_1..sg_N[, lv]
    DenseMatrix values;
    std::vector<ClusterScale> scales;

    NamedMatrix as_named() const { return {cell_ids, col_names, values}; }
};

SuperGeneMatrix ccp_reduce(const ExpressionMatrix& matrix, const GenePartition& partition,
                           const KernelParams& params,
                           CellMetric metric = CellMetric::euclidean);

} // namespace ccp

#endif
