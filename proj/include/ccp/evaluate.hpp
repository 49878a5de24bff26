#ifndef CCP_EVALUATE_HPP
#define CCP_EVALUATE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ccp/dense_matrix.hpp"

namespace ccp {

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace; // inertia after each Lloyd assignment
};

// k-means++ seeding followed by Lloyd iterations until the assignment is a
// fixpoint or max_iter passes. Deterministic given (points, k, seed).
KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

// Hubert-Arabie adjusted Rand index between two labelings. Returns 1 when
// the denominator vanishes and the partitions are identical, 0 when it
// vanishes otherwise.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// Maps string labels to dense int codes by sorted label order.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

struct AriReport {
    std::string method;
    std::size_t n_reduction_seeds = 0;
    std::size_t n_clustering_seeds = 0;
    double mean_ari = 0.0;
    double std_ari = 0.0;            // population std over the whole grid
    DenseMatrix per_seed;            // n_reduction_seeds x n_clustering_seeds

    std::string to_json() const;
    std::string csv_row() const;     // method,mean_ari,std_ari
    static const char* csv_header(); // "method,mean_ari,std_ari"
};

// Seed-grid protocol: for each reduction seed the pipeline is re-run (even
// when deterministic), then k-means with each clustering seed is scored
// against the true labels.
AriReport benchmark(const std::function<DenseMatrix(std::uint64_t seed)>& reduction,
                    std::span<const int> true_labels, std::size_t k,
                    const std::string& method,
                    std::size_t n_reduction_seeds = 10,
                    std::size_t n_clustering_seeds = 30,
                    std::uint64_t base_seed = 0);

} // namespace ccp

#endif
