#include "ccp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "ccp/io.hpp"
#include "rng_util.hpp"

namespace ccp {

namespace {

double dist2(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double d = a[t] - b[t];
        acc += d * d;
    }
    return acc;
}

// k-means++ seeding: first center uniform, later centers drawn with
// probability proportional to the squared distance to the nearest chosen one.
std::vector<std::size_t> kmeanspp(const DenseMatrix& points, std::size_t k,
                                  std::mt19937_64& rng) {
    const std::size_t m = points.rows;
    std::vector<std::size_t> centers;
    centers.reserve(k);
    std::vector<bool> taken(m, false);

    const std::size_t first = static_cast<std::size_t>(detail::uniform_index(rng, m));
    centers.push_back(first);
    taken[first] = true;

    std::vector<double> d2(m);
    for (std::size_t j = 0; j < m; ++j) {
        d2[j] = dist2(points.row(j), points.row(first));
    }

    while (centers.size() < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = m;
        if (total > 0.0) {
            const double u = detail::uniform01(rng) * total;
            double cum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                cum += d2[j];
                if (cum > u) {
                    pick = j;
                    break;
                }
            }
            if (pick == m) {
                // Rounding pushed u to the very end; take the last point with
                // positive weight.
                for (std::size_t j = m; j-- > 0;) {
                    if (d2[j] > 0.0) {
                        pick = j;
                        break;
                    }
                }
            }
        }
        if (pick == m) {
            // Every remaining point coincides with a center; fill with the
            // lowest untaken index.
            for (std::size_t j = 0; j < m; ++j) {
                if (!taken[j]) {
                    pick = j;
                    break;
                }
            }
        }
        centers.push_back(pick);
        taken[pick] = true;
        for (std::size_t j = 0; j < m; ++j) {
            d2[j] = std::min(d2[j], dist2(points.row(j), points.row(pick)));
        }
    }
    return centers;
}

} // namespace

KMeansResult kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter) {
    const std::size_t m = points.rows;
    const std::size_t d = points.cols;
    if (k == 0) {
        throw std::invalid_argument("kmeans requires k >= 1");
    }
    if (m < k) {
        throw std::invalid_argument("kmeans requires at least k points, got " + std::to_string(m) +
                                    " for k = " + std::to_string(k));
    }

    std::mt19937_64 rng(seed);
    DenseMatrix centers(k, d);
    {
        const auto seeds = kmeanspp(points, k, rng);
        for (std::size_t c = 0; c < k; ++c) {
            const auto row = points.row(seeds[c]);
            std::copy(row.begin(), row.end(), centers.row(c).begin());
        }
    }

    KMeansResult result;
    result.labels.assign(m, -1);
    std::vector<double> best_d2(m, 0.0);
    std::vector<std::size_t> counts(k, 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t j = 0; j < m; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double v = dist2(points.row(j), centers.row(c));
                if (v < best) {
                    best = v;
                    arg = static_cast<int>(c);
                }
            }
            if (arg != result.labels[j]) {
                changed = true;
                result.labels[j] = arg;
            }
            best_d2[j] = best;
            inertia += best;
            ++counts[static_cast<std::size_t>(arg)];
        }
        result.inertia = inertia;
        result.inertia_trace.push_back(inertia);
        result.iterations = iter + 1;
        if (!changed) {
            break;
        }

        // A center no point claimed is re-seeded with the point currently
        // worst served by its own center (ties to the lowest point index).
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t steal = m;
            double worst = -1.0;
            for (std::size_t j = 0; j < m; ++j) {
                const auto owner = static_cast<std::size_t>(result.labels[j]);
                if (counts[owner] < 2) continue;
                if (best_d2[j] > worst) {
                    worst = best_d2[j];
                    steal = j;
                }
            }
            if (steal == m) continue;
            --counts[static_cast<std::size_t>(result.labels[steal])];
            result.labels[steal] = static_cast<int>(c);
            counts[c] = 1;
            best_d2[steal] = 0.0;
        }

        for (std::size_t c = 0; c < k; ++c) {
            std::fill(centers.row(c).begin(), centers.row(c).end(), 0.0);
        }
        for (std::size_t j = 0; j < m; ++j) {
            const auto c = static_cast<std::size_t>(result.labels[j]);
            const auto row = points.row(j);
            auto center = centers.row(c);
            for (std::size_t t = 0; t < d; ++t) {
                center[t] += row[t];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto center = centers.row(c);
            for (std::size_t t = 0; t < d; ++t) {
                center[t] /= static_cast<double>(counts[c]);
            }
        }
    }
    return result;
}

namespace {

double comb2(double n) { return n * (n - 1.0) / 2.0; }

std::vector<int> first_occurrence_codes(std::span<const int> labels) {
    std::vector<int> codes(labels.size());
    std::map<int, int> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = seen.emplace(labels[i], static_cast<int>(seen.size()));
        codes[i] = it->second;
        (void)fresh;
    }
    return codes;
}

} // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("adjusted_rand_index requires two non-empty labelings of equal length");
    }
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> row_sums;
    std::map<int, double> col_sums;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}] += 1.0;
        row_sums[a[i]] += 1.0;
        col_sums[b[i]] += 1.0;
    }
    double index = 0.0;
    for (const auto& [key, count] : cells) index += comb2(count);
    double row_pairs = 0.0;
    for (const auto& [key, count] : row_sums) row_pairs += comb2(count);
    double col_pairs = 0.0;
    for (const auto& [key, count] : col_sums) col_pairs += comb2(count);

    const double all_pairs = comb2(static_cast<double>(a.size()));
    const double expected = all_pairs > 0.0 ? row_pairs * col_pairs / all_pairs : 0.0;
    const double max_index = (row_pairs + col_pairs) / 2.0;
    const double denom = max_index - expected;
    if (denom == 0.0) {
        return first_occurrence_codes(a) == first_occurrence_codes(b) ? 1.0 : 0.0;
    }
    return (index - expected) / denom;
}

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::map<std::string, int> codes;
    for (const auto& label : labels) {
        codes.emplace(label, 0);
    }
    int next = 0;
    for (auto& [label, code] : codes) {
        code = next++;
    }
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& label : labels) {
        out.push_back(codes.at(label));
    }
    return out;
}

std::string AriReport::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["n_reduction_seeds"] = n_reduction_seeds;
    j["n_clustering_seeds"] = n_clustering_seeds;
    j["mean_ari"] = mean_ari;
    j["std_ari"] = std_ari;
    std::vector<std::vector<double>> grid(per_seed.rows);
    for (std::size_t r = 0; r < per_seed.rows; ++r) {
        const auto row = per_seed.row(r);
        grid[r].assign(row.begin(), row.end());
    }
    j["per_seed"] = grid;
    return j.dump(2) + "\n";
}

const char* AriReport::csv_header() { return "method,mean_ari,std_ari"; }

std::string AriReport::csv_row() const {
    return method + "," + format_double(mean_ari) + "," + format_double(std_ari);
}

AriReport benchmark(const std::function<DenseMatrix(std::uint64_t seed)>& reduction,
                    std::span<const int> true_labels, std::size_t k, const std::string& method,
                    std::size_t n_reduction_seeds, std::size_t n_clustering_seeds,
                    std::uint64_t base_seed) {
    if (n_reduction_seeds == 0 || n_clustering_seeds == 0) {
        throw std::invalid_argument("benchmark requires at least one seed of each kind");
    }
    if (true_labels.empty()) {
        throw std::invalid_argument("benchmark requires true labels");
    }
    AriReport report;
    report.method = method;
    report.n_reduction_seeds = n_reduction_seeds;
    report.n_clustering_seeds = n_clustering_seeds;
    report.per_seed = DenseMatrix(n_reduction_seeds, n_clustering_seeds);

    for (std::size_t r = 0; r < n_reduction_seeds; ++r) {
        const DenseMatrix reduced = reduction(base_seed + r);
        if (reduced.rows != true_labels.size()) {
            throw std::invalid_argument("reduction produced " + std::to_string(reduced.rows) +
                                        " rows but there are " +
                                        std::to_string(true_labels.size()) + " labels");
        }
        for (std::size_t c = 0; c < n_clustering_seeds; ++c) {
            const std::uint64_t seed =
                base_seed * 1000003ULL + static_cast<std::uint64_t>(r) * 1009ULL + c;
            const KMeansResult km = kmeans(reduced, k, seed);
            report.per_seed(r, c) = adjusted_rand_index(km.labels, true_labels);
        }
    }

    const auto total = static_cast<double>(n_reduction_seeds * n_clustering_seeds);
    double mean = 0.0;
    for (double v : report.per_seed.data) mean += v;
    mean /= total;
    double var = 0.0;
    for (double v : report.per_seed.data) {
        const double d = v - mean;
        var += d * d;
    }
    report.mean_ari = mean;
    report.std_ari = std::sqrt(var / total);
    return report;
}

} // namespace ccp
