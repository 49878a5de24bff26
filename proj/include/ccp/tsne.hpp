#ifndef CCP_TSNE_HPP
#define CCP_TSNE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ccp/dense_matrix.hpp"

namespace ccp {

enum class TsneInit { pca, random };
TsneInit parse_tsne_init(std::string_view name);

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t n_iter = 1000;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    double learning_rate = 200.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    TsneInit init = TsneInit::pca;
    std::uint64_t seed = 0;
};

struct Embedding2D {
    std::vector<std::string> cell_ids;
    DenseMatrix coords; // M x 2

    bool operator==(const Embedding2D&) const = default;
};

struct TsneResult {
    Embedding2D embedding;
    std::vector<double> kl_trace; // KL before each update plus the final state; never exaggerated
    bool pca_fallback = false;    // true when PCA init degenerated to seeded random
};

// Symmetrized high-dimensional affinities: per-row Gaussian bandwidths are
// bisected until the conditional entropy matches ln(perplexity) within 1e-5,
// then P = (C + C^T) / (2M). Zero diagonal, non-negative, sums to 1.
// Rows whose non-self distances are all equal have bandwidth-independent
// entropy and are accepted as uniform; any other calibration failure throws
// with the row index.
DenseMatrix calibrated_affinities(const DenseMatrix& points, double perplexity);

struct PcaInitResult {
    DenseMatrix coords; // M x 2
    bool fallback = false;
};

// Projects centered points onto their top-2 principal directions via power
// iteration with deflation on the smaller of the D x D covariance and the
// M x M Gram matrix (fixed start vector, 1e-9 tolerance, 1000-iteration cap).
// Both columns are scaled by one factor chosen so the first coordinate has
// standard deviation 1e-4; each direction's largest-magnitude loading is made
// positive. Rank-0 input falls back to seeded random coordinates.
PcaInitResult pca_init(const DenseMatrix& points, std::uint64_t seed = 0);

// KL(P || Q) with the Student-t Q of the embedding; exactly invariant to
// translating all points.
double kl_divergence(const DenseMatrix& affinities, const DenseMatrix& coords);

// Analytic gradient of kl_divergence with respect to the coordinates:
// grad_i = 4 * sum_j (p_ij - q_ij) (y_i - y_j) / (1 + ||y_i - y_j||^2).
DenseMatrix tsne_gradient(const DenseMatrix& affinities, const DenseMatrix& coords);

// Exact O(M^2) t-SNE with early exaggeration, momentum switching and
// adaptive gains. Deterministic for a fixed config.
TsneResult tsne(const DenseMatrix& points, std::vector<std::string> cell_ids,
                const TsneConfig& config);

// Interchange CSV `cell_id,x,y` used to hand coordinates to and from
// external embedders. Import validates id alignment when reference ids are
// supplied.
void export_coords(const Embedding2D& embedding, const std::filesystem::path& path);
Embedding2D import_coords(const std::filesystem::path& path,
                          const std::vector<std::string>* reference_ids = nullptr);

} // namespace ccp

#endif
