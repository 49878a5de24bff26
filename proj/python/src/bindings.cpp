#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "ccp/evaluate.hpp"
#include "ccp/expression.hpp"
#include "ccp/partition.hpp"
#include "ccp/projection.hpp"
#include "ccp/tsne.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ccp::DenseMatrix to_matrix(const Array& values) {
    const auto buf = values.request();
    if (buf.ndim != 2) {
        throw std::invalid_argument("expected a 2-D array");
    }
    ccp::DenseMatrix m(static_cast<std::size_t>(buf.shape[0]),
                       static_cast<std::size_t>(buf.shape[1]));
    const double* src = static_cast<const double*>(buf.ptr);
    std::copy(src, src + m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> from_matrix(const ccp::DenseMatrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

// The single-integer array_t constructor builds a zero-stride array (its
// strides container is passed empty instead of computed), so 1-D results go
// through the shape-container constructor explicitly.
template <typename T>
py::array_t<T> from_vector(const std::vector<T>& v) {
    py::array_t<T> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

ccp::ExpressionMatrix to_expression(const Array& values) {
    ccp::ExpressionMatrix matrix;
    matrix.values = to_matrix(values);
    matrix.cell_ids.reserve(matrix.values.rows);
    for (std::size_t i = 0; i < matrix.values.rows; ++i) {
        matrix.cell_ids.push_back("cell" + std::to_string(i));
    }
    matrix.gene_ids.reserve(matrix.values.cols);
    for (std::size_t g = 0; g < matrix.values.cols; ++g) {
        matrix.gene_ids.push_back("gene" + std::to_string(g));
    }
    ccp::validate(matrix);
    return matrix;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Correlated-cluster projection, exact 2-D embedding and clustering scores";

    m.def(
        "gene_variances",
        [](const Array& values) {
            return from_vector(ccp::gene_variances(to_expression(values)));
        },
        py::arg("values"),
        "Population variance of each column of a cells-by-genes array.");

    m.def(
        "reduce",
        [](const Array& values, std::size_t n_supergenes, double vc, double tau, double kappa,
           const std::string& cluster_method, const std::string& gene_metric,
           const std::string& cell_metric, std::uint64_t seed) {
            const ccp::ExpressionMatrix matrix = to_expression(values);
            ccp::PartitionConfig pconf;
            pconf.n_supergenes = n_supergenes;
            pconf.v_c = vc;
            pconf.method = ccp::parse_cluster_method(cluster_method);
            pconf.metric = ccp::parse_gene_metric(gene_metric);
            pconf.seed = seed;
            const auto split = ccp::select_lv_genes(ccp::gene_variances(matrix), vc);
            const auto partition = ccp::partition_genes(matrix, split, pconf);
            const ccp::KernelParams params{tau, kappa};
            const auto sg =
                ccp::ccp_reduce(matrix, partition, params, ccp::parse_cell_metric(cell_metric));
            py::dict out;
            out["values"] = from_matrix(sg.values);
            out["col_names"] = sg.col_names;
            out["clusters"] = partition.clusters;
            out["lv_set"] = partition.lv_set;
            return out;
        },
        py::arg("values"), py::arg("n_supergenes") = 50, py::arg("vc") = 0.8,
        py::arg("tau") = 6.0, py::arg("kappa") = 2.0, py::arg("cluster_method") = "kmedoids",
        py::arg("gene_metric") = "correlation", py::arg("cell_metric") = "euclidean",
        py::arg("seed") = 0,
        "Cluster genes and project each cluster into one super-gene column.");

    m.def(
        "kernel_phi",
        [](double d, double eta, double cutoff, double tau, double kappa) {
            const ccp::ClusterScale scale{eta, cutoff};
            return ccp::kernel_phi(d, scale, ccp::KernelParams{tau, kappa});
        },
        py::arg("d"), py::arg("eta"), py::arg("cutoff"), py::arg("tau") = 6.0,
        py::arg("kappa") = 2.0,
        "Generalized exponential kernel with a hard cutoff.");

    m.def(
        "calibrated_affinities",
        [](const Array& points, double perplexity) {
            return from_matrix(ccp::calibrated_affinities(to_matrix(points), perplexity));
        },
        py::arg("points"), py::arg("perplexity") = 30.0,
        "Symmetrized Gaussian affinities at the requested perplexity.");

    m.def(
        "tsne",
        [](const Array& points, double perplexity, std::size_t n_iter, const std::string& init,
           std::uint64_t seed) {
            const ccp::DenseMatrix matrix = to_matrix(points);
            std::vector<std::string> ids;
            ids.reserve(matrix.rows);
            for (std::size_t i = 0; i < matrix.rows; ++i) {
                ids.push_back("cell" + std::to_string(i));
            }
            ccp::TsneConfig config;
            config.perplexity = perplexity;
            config.n_iter = n_iter;
            config.init = ccp::parse_tsne_init(init);
            config.seed = seed;
            const auto result = ccp::tsne(matrix, std::move(ids), config);
            py::dict out;
            out["coords"] = from_matrix(result.embedding.coords);
            out["kl_trace"] = result.kl_trace;
            out["pca_fallback"] = result.pca_fallback;
            return out;
        },
        py::arg("points"), py::arg("perplexity") = 30.0, py::arg("n_iter") = 1000,
        py::arg("init") = "pca", py::arg("seed") = 0,
        "Exact 2-D embedding minimizing KL(P || Q).");

    m.def(
        "kmeans",
        [](const Array& points, std::size_t k, std::uint64_t seed) {
            const auto result = ccp::kmeans(to_matrix(points), k, seed);
            py::dict out;
            out["labels"] = from_vector(result.labels);
            out["inertia"] = result.inertia;
            out["iterations"] = result.iterations;
            return out;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0,
        "Seeded k-means++ with Lloyd refinement.");

    m.def(
        "adjusted_rand_index",
        [](const std::vector<int>& a, const std::vector<int>& b) {
            return ccp::adjusted_rand_index(a, b);
        },
        py::arg("a"), py::arg("b"), "Chance-corrected agreement of two labelings.");
}
