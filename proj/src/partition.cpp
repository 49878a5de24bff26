#include "ccp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ccp/evaluate.hpp"
#include "ccp/io.hpp"

namespace ccp {

std::vector<double> gene_variances(const ExpressionMatrix& matrix) {
    const std::size_t n_cells = matrix.n_cells();
    const std::size_t n_genes = matrix.n_genes();
    if (n_cells == 0) {
        throw std::invalid_argument("gene_variances requires at least one cell");
    }
    std::vector<double> means(n_genes, 0.0);
    for (std::size_t i = 0; i < n_cells; ++i) {
        const auto row = matrix.values.row(i);
        for (std::size_t g = 0; g < n_genes; ++g) {
            means[g] += row[g];
        }
    }
    for (double& m : means) {
        m /= static_cast<double>(n_cells);
    }
    std::vector<double> vars(n_genes, 0.0);
    for (std::size_t i = 0; i < n_cells; ++i) {
        const auto row = matrix.values.row(i);
        for (std::size_t g = 0; g < n_genes; ++g) {
            const double d = row[g] - means[g];
            vars[g] += d * d;
        }
    }
    for (double& v : vars) {
        v /= static_cast<double>(n_cells);
    }
    return vars;
}

LvSplit select_lv_genes(const std::vector<double>& variances, double v_c) {
    if (!(v_c >= 0.0 && v_c <= 1.0)) {
        throw std::invalid_argument("variance cutoff ratio must lie in [0, 1]");
    }
    const std::size_t n = variances.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (variances[a] != variances[b]) return variances[a] > variances[b];
        return a < b;
    });
    const auto cutoff_rank =
        static_cast<std::size_t>(std::floor(v_c * static_cast<double>(n)));
    std::vector<bool> low(n, false);
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t g = order[rank];
        low[g] = (rank + 1 > cutoff_rank) || variances[g] == 0.0;
    }
    LvSplit split;
    for (std::size_t g = 0; g < n; ++g) {
        (low[g] ? split.lv : split.kept).push_back(g);
    }
    return split;
}

GeneMetric parse_gene_metric(std::string_view name) {
    if (name == "correlation") return GeneMetric::correlation;
    if (name == "covariance") return GeneMetric::covariance;
    if (name == "euclidean") return GeneMetric::euclidean;
    throw IoError("unknown gene metric '" + std::string(name) +
                  "' (expected correlation, covariance or euclidean)");
}

ClusterMethod parse_cluster_method(std::string_view name) {
    if (name == "kmedoids") return ClusterMethod::kmedoids;
    if (name == "kmeans") return ClusterMethod::kmeans;
    throw IoError("unknown cluster method '" + std::string(name) +
                  "' (expected kmedoids or kmeans)");
}

namespace {

struct Moments {
    double mean = 0.0;
    double sd = 0.0; // population standard deviation
};

Moments moments(std::span<const double> v) {
    Moments m;
    const auto n = static_cast<double>(v.size());
    for (double x : v) m.mean += x;
    m.mean /= n;
    double acc = 0.0;
    for (double x : v) {
        const double d = x - m.mean;
        acc += d * d;
    }
    m.sd = std::sqrt(acc / n);
    return m;
}

double covariance(std::span<const double> a, std::span<const double> b, const Moments& ma,
                  const Moments& mb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += (a[i] - ma.mean) * (b[i] - mb.mean);
    }
    return acc / static_cast<double>(a.size());
}

} // namespace

double gene_distance(std::span<const double> a, std::span<const double> b, GeneMetric metric) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("gene_distance requires two non-empty vectors of equal length");
    }
    switch (metric) {
        case GeneMetric::correlation: {
            const Moments ma = moments(a);
            const Moments mb = moments(b);
            if (ma.sd == 0.0 || mb.sd == 0.0) {
                throw std::invalid_argument(
                    "correlation distance is undefined for a zero-variance gene");
            }
            return 1.0 - covariance(a, b, ma, mb) / (ma.sd * mb.sd);
        }
        case GeneMetric::covariance: {
            const Moments ma = moments(a);
            const Moments mb = moments(b);
            const double d = 1.0 - covariance(a, b, ma, mb) / (ma.sd * mb.sd + 1e-12);
            return std::clamp(d, 0.0, 2.0);
        }
        case GeneMetric::euclidean: {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                acc += d * d;
            }
            return std::sqrt(acc);
        }
    }
    throw std::invalid_argument("unhandled gene metric");
}

namespace {

// Packed upper-triangular pairwise distance store. Doubles up to 4096 points,
// floats above to keep large gene sets within memory.
class PackedDistances {
public:
    explicit PackedDistances(std::size_t n)
        : n_(n), use_float_(n > 4096) {
        const std::size_t len = n_ < 2 ? 0 : n_ * (n_ - 1) / 2;
        if (use_float_) {
            fdata_.assign(len, 0.0f);
        } else {
            ddata_.assign(len, 0.0);
        }
    }

    void set(std::size_t i, std::size_t j, double v) {
        if (i == j) return;
        const std::size_t idx = tri(i, j);
        if (use_float_) {
            fdata_[idx] = static_cast<float>(v);
        } else {
            ddata_[idx] = v;
        }
    }

    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        const std::size_t idx = tri(i, j);
        return use_float_ ? static_cast<double>(fdata_[idx]) : ddata_[idx];
    }

private:
    std::size_t tri(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return n_ * i - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    bool use_float_;
    std::vector<double> ddata_;
    std::vector<float> fdata_;
};

// Greedy initialization: start with the point of minimum total distance,
// then repeatedly add the point that lowers the total assignment cost most.
// Ties fall to the lowest index.
std::vector<std::size_t> pam_build(const PackedDistances& dist, std::size_t n, std::size_t k) {
    std::vector<std::size_t> medoids;
    medoids.reserve(k);

    std::size_t first = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            total += dist(i, j);
        }
        if (total < best_total) {
            best_total = total;
            first = i;
        }
    }
    medoids.push_back(first);

    std::vector<double> d1(n);
    for (std::size_t j = 0; j < n; ++j) {
        d1[j] = dist(first, j);
    }
    std::vector<bool> is_medoid(n, false);
    is_medoid[first] = true;

    while (medoids.size() < k) {
        std::size_t best = n;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) {
            if (is_medoid[x]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dxj = dist(x, j);
                if (dxj < d1[j]) {
                    gain += d1[j] - dxj;
                }
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = x;
            }
        }
        medoids.push_back(best);
        is_medoid[best] = true;
        for (std::size_t j = 0; j < n; ++j) {
            d1[j] = std::min(d1[j], dist(best, j));
        }
    }
    return medoids;
}

// Best-improvement swap passes. Each pass scans every (candidate, medoid)
// pair via a single O(n) sweep per candidate, applies the single most
// improving swap, and stops when no swap lowers the total cost.
void pam_swap(const PackedDistances& dist, std::size_t n, std::vector<std::size_t>& medoids,
              std::size_t max_passes) {
    const std::size_t k = medoids.size();
    if (k == 0 || k >= n) return;

    std::vector<double> d1(n), d2(n);
    std::vector<std::size_t> nearest(n);
    std::vector<bool> is_medoid(n, false);

    auto refresh = [&]() {
        std::fill(is_medoid.begin(), is_medoid.end(), false);
        for (std::size_t m : medoids) is_medoid[m] = true;
        for (std::size_t j = 0; j < n; ++j) {
            double b1 = std::numeric_limits<double>::infinity();
            double b2 = std::numeric_limits<double>::infinity();
            std::size_t bi = 0;
            for (std::size_t mi = 0; mi < k; ++mi) {
                const double d = dist(medoids[mi], j);
                if (d < b1) {
                    b2 = b1;
                    b1 = d;
                    bi = mi;
                } else if (d < b2) {
                    b2 = d;
                }
            }
            d1[j] = b1;
            d2[j] = b2;
            nearest[j] = bi;
        }
    };

    std::vector<double> removal(k);
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        refresh();
        double best_delta = -1e-12;
        std::size_t best_x = n, best_slot = k;
        for (std::size_t x = 0; x < n; ++x) {
            if (is_medoid[x]) continue;
            double shared = 0.0;
            std::fill(removal.begin(), removal.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double dxj = dist(x, j);
                const double base = std::min(0.0, dxj - d1[j]);
                shared += base;
                removal[nearest[j]] += std::min(dxj, d2[j]) - d1[j] - base;
            }
            for (std::size_t slot = 0; slot < k; ++slot) {
                const double delta = shared + removal[slot];
                if (delta < best_delta) {
                    best_delta = delta;
                    best_x = x;
                    best_slot = slot;
                }
            }
        }
        if (best_x == n) {
            break;
        }
        medoids[best_slot] = best_x;
    }
}

std::vector<std::vector<std::size_t>> group_by_assignment(const std::vector<std::size_t>& assign,
                                                          std::size_t n_groups) {
    std::vector<std::vector<std::size_t>> groups(n_groups);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        groups[assign[i]].push_back(i);
    }
    groups.erase(std::remove_if(groups.begin(), groups.end(),
                                [](const auto& g) { return g.empty(); }),
                 groups.end());
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

} // namespace

GenePartition partition_genes(const ExpressionMatrix& matrix, const LvSplit& split,
                              const PartitionConfig& config) {
    const std::size_t n_kept = split.kept.size();
    const std::size_t k = config.n_supergenes;
    if (k == 0) {
        throw std::invalid_argument("the number of super-genes must be at least 1");
    }
    if (n_kept < k) {
        throw std::invalid_argument("cannot form " + std::to_string(k) + " gene clusters from " +
                                    std::to_string(n_kept) + " kept genes");
    }
    const std::size_t n_cells = matrix.n_cells();

    // Contiguous copy of each kept gene's expression across cells.
    DenseMatrix vectors(n_kept, n_cells);
    for (std::size_t gi = 0; gi < n_kept; ++gi) {
        const std::size_t g = split.kept[gi];
        for (std::size_t i = 0; i < n_cells; ++i) {
            vectors(gi, i) = matrix.values(i, g);
        }
    }

    std::vector<std::size_t> assign(n_kept, 0);
    if (config.method == ClusterMethod::kmedoids) {
        PackedDistances dist(n_kept);
        for (std::size_t a = 0; a < n_kept; ++a) {
            for (std::size_t b = a + 1; b < n_kept; ++b) {
                dist.set(a, b, gene_distance(vectors.row(a), vectors.row(b), config.metric));
            }
        }
        std::vector<std::size_t> medoids = pam_build(dist, n_kept, k);
        pam_swap(dist, n_kept, medoids, 100);

        // Assign each gene to its nearest medoid; ties fall to the medoid
        // with the lowest gene index so results do not depend on swap order.
        std::vector<std::size_t> slot_of(n_kept, k);
        std::vector<std::size_t> sorted_slots(k);
        std::iota(sorted_slots.begin(), sorted_slots.end(), 0);
        std::sort(sorted_slots.begin(), sorted_slots.end(),
                  [&](std::size_t a, std::size_t b) { return medoids[a] < medoids[b]; });
        for (std::size_t gi = 0; gi < n_kept; ++gi) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_slot = k;
            for (std::size_t slot : sorted_slots) {
                const double d = dist(gi, medoids[slot]);
                if (d < best) {
                    best = d;
                    best_slot = slot;
                }
            }
            assign[gi] = best_slot;
        }
    } else {
        const KMeansResult km = kmeans(vectors, k, config.seed);
        for (std::size_t gi = 0; gi < n_kept; ++gi) {
            assign[gi] = static_cast<std::size_t>(km.labels[gi]);
        }
    }

    auto groups = group_by_assignment(assign, k);
    GenePartition partition;
    partition.source_gene_count = matrix.n_genes();
    partition.lv_set = split.lv;
    partition.clusters.reserve(groups.size());
    for (auto& group : groups) {
        std::vector<std::size_t> members;
        members.reserve(group.size());
        for (std::size_t gi : group) {
            members.push_back(split.kept[gi]);
        }
        partition.clusters.push_back(std::move(members));
    }
    std::sort(partition.clusters.begin(), partition.clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return partition;
}

namespace {

const char* metric_name(GeneMetric metric) {
    switch (metric) {
        case GeneMetric::correlation: return "correlation";
        case GeneMetric::covariance: return "covariance";
        case GeneMetric::euclidean: return "euclidean";
    }
    return "correlation";
}

const char* method_name(ClusterMethod method) {
    return method == ClusterMethod::kmeans ? "kmeans" : "kmedoids";
}

} // namespace

std::string partition_to_json(const GenePartition& partition, const PartitionConfig& config) {
    nlohmann::json j;
    j["clusters"] = partition.clusters;
    j["lv_set"] = partition.lv_set;
    j["source_gene_count"] = partition.source_gene_count;
    j["config"] = {
        {"n_supergenes", config.n_supergenes},
        {"v_c", config.v_c},
        {"method", method_name(config.method)},
        {"metric", metric_name(config.metric)},
        {"seed", config.seed},
    };
    return j.dump(2) + "\n";
}

GenePartition partition_from_json(const std::string& text, PartitionConfig* config_out) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid partition JSON: ") + e.what());
    }
    GenePartition partition;
    try {
        partition.clusters = j.at("clusters").get<std::vector<std::vector<std::size_t>>>();
        partition.lv_set = j.at("lv_set").get<std::vector<std::size_t>>();
        partition.source_gene_count = j.at("source_gene_count").get<std::size_t>();
        if (config_out != nullptr && j.contains("config")) {
            const auto& c = j.at("config");
            config_out->n_supergenes = c.at("n_supergenes").get<std::size_t>();
            config_out->v_c = c.at("v_c").get<double>();
            config_out->method = parse_cluster_method(c.at("method").get<std::string>());
            config_out->metric = parse_gene_metric(c.at("metric").get<std::string>());
            config_out->seed = c.at("seed").get<std::uint64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid partition JSON: ") + e.what());
    }

    // The partition must cover each source gene exactly once.
    std::vector<std::size_t> seen(partition.source_gene_count, 0);
    auto mark = [&](std::size_t g) {
        if (g >= partition.source_gene_count) {
            throw IoError("partition JSON references gene index " + std::to_string(g) +
                          " outside 0.." + std::to_string(partition.source_gene_count - 1));
        }
        ++seen[g];
    };
    for (const auto& cluster : partition.clusters) {
        if (cluster.empty()) {
            throw IoError("partition JSON contains an empty cluster");
        }
        for (std::size_t g : cluster) mark(g);
    }
    for (std::size_t g : partition.lv_set) mark(g);
    for (std::size_t g = 0; g < seen.size(); ++g) {
        if (seen[g] != 1) {
            throw IoError("partition JSON covers gene " + std::to_string(g) +
                          (seen[g] == 0 ? " zero times" : " more than once"));
        }
    }
    return partition;
}

} // namespace ccp
