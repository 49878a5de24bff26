#include "ccp/tsne.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "ccp/io.hpp"
#include "rng_util.hpp"

namespace ccp {

TsneInit parse_tsne_init(std::string_view name) {
    if (name == "pca") return TsneInit::pca;
    if (name == "random") return TsneInit::random;
    throw IoError("unknown embedding init '" + std::string(name) + "' (expected pca or random)");
}

namespace {

DenseMatrix squared_distances(const DenseMatrix& points) {
    const std::size_t m = points.rows;
    DenseMatrix d2(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ri = points.row(i);
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto rj = points.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < points.cols; ++t) {
                const double d = ri[t] - rj[t];
                acc += d * d;
            }
            d2(i, j) = acc;
            d2(j, i) = acc;
        }
    }
    return d2;
}

// Conditional probabilities for one row at the given precision (beta), and
// their Shannon entropy in nats. The smallest non-self distance is subtracted
// before exponentiation so the sum never underflows to zero.
double row_affinities(const DenseMatrix& d2, std::size_t i, double beta, std::vector<double>& p) {
    const std::size_t m = d2.rows;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
        if (j != i) dmin = std::min(dmin, d2(i, j));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == i) {
            p[j] = 0.0;
            continue;
        }
        p[j] = std::exp(-beta * (d2(i, j) - dmin));
        sum += p[j];
    }
    double entropy = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        p[j] /= sum;
        if (p[j] > 0.0) {
            entropy -= p[j] * std::log(p[j]);
        }
    }
    return entropy;
}

} // namespace

DenseMatrix calibrated_affinities(const DenseMatrix& points, double perplexity) {
    const std::size_t m = points.rows;
    if (m < 4) {
        throw std::invalid_argument("affinity calibration requires at least 4 points");
    }
    if (!(perplexity >= 1.0) || !(perplexity < static_cast<double>(m - 1))) {
        throw std::invalid_argument("perplexity must lie in [1, " + std::to_string(m - 1) +
                                    ") for " + std::to_string(m) + " points");
    }
    const DenseMatrix d2 = squared_distances(points);
    const double target = std::log(perplexity);
    constexpr double tol = 1e-5;
    constexpr std::size_t max_steps = 200;

    DenseMatrix cond(m, m);
    std::vector<double> p(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            dmin = std::min(dmin, d2(i, j));
            dmax = std::max(dmax, d2(i, j));
        }
        if (dmax - dmin <= 1e-12 * std::max(1.0, dmax)) {
            // Equidistant row: the conditional distribution is uniform for
            // every bandwidth, so the entropy cannot be tuned. Accept it.
            for (std::size_t j = 0; j < m; ++j) {
                cond(i, j) = j == i ? 0.0 : 1.0 / static_cast<double>(m - 1);
            }
            continue;
        }

        double beta = 1.0;
        double beta_lo = -std::numeric_limits<double>::infinity();
        double beta_hi = std::numeric_limits<double>::infinity();
        bool done = false;
        for (std::size_t step = 0; step < max_steps; ++step) {
            const double entropy = row_affinities(d2, i, beta, p);
            const double diff = entropy - target;
            if (std::abs(diff) < tol) {
                done = true;
                break;
            }
            if (diff > 0.0) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = std::isinf(beta_lo) ? beta / 2.0 : (beta + beta_lo) / 2.0;
            }
        }
        if (!done) {
            throw std::runtime_error("affinity calibration failed to reach the target entropy for row " +
                                     std::to_string(i));
        }
        for (std::size_t j = 0; j < m; ++j) {
            cond(i, j) = p[j];
        }
    }

    DenseMatrix joint(m, m);
    const double denom = 2.0 * static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            joint(i, j) = (cond(i, j) + cond(j, i)) / denom;
        }
    }
    return joint;
}

namespace {

// Symmetric matvec plus deflation of already extracted eigenpairs.
void deflated_matvec(const DenseMatrix& a,
                     const std::vector<std::pair<double, std::vector<double>>>& found,
                     const std::vector<double>& v, std::vector<double>& out) {
    const std::size_t n = a.rows;
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        const auto row = a.row(r);
        for (std::size_t c = 0; c < n; ++c) {
            acc += row[c] * v[c];
        }
        out[r] = acc;
    }
    for (const auto& [lambda, u] : found) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += u[r] * v[r];
        for (std::size_t r = 0; r < n; ++r) out[r] -= lambda * dot * u[r];
    }
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Leading eigenpair of a PSD matrix by power iteration, after projecting out
// the pairs in `found`. Returns eigenvalue 0 with a zero vector when the
// deflated matrix has (numerically) no remaining spectrum.
std::pair<double, std::vector<double>> power_iteration(
    const DenseMatrix& a, const std::vector<std::pair<double, std::vector<double>>>& found) {
    const std::size_t n = a.rows;
    std::vector<double> v(n), next(n);
    for (std::size_t j = 0; j < n; ++j) {
        v[j] = std::sin(static_cast<double>(j) + 1.0);
    }
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    double trace = 0.0;
    for (std::size_t j = 0; j < n; ++j) trace += a(j, j);
    const double floor_lambda = 1e-12 * std::max(trace, 1.0);

    double lambda = 0.0;
    for (std::size_t step = 0; step < 1000; ++step) {
        deflated_matvec(a, found, v, next);
        const double nn = norm2(next);
        if (nn <= floor_lambda) {
            return {0.0, std::vector<double>(n, 0.0)};
        }
        lambda = nn;
        double shift = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= nn;
            const double d = next[j] - v[j];
            shift += d * d;
        }
        std::swap(v, next);
        if (std::sqrt(shift) < 1e-9) {
            break;
        }
    }
    // Rayleigh quotient for the eigenvalue paired with the final vector.
    deflated_matvec(a, found, v, next);
    lambda = 0.0;
    for (std::size_t j = 0; j < n; ++j) lambda += v[j] * next[j];
    return {std::max(lambda, 0.0), v};
}

// Makes the largest-magnitude entry positive (ties to the lowest index).
bool needs_flip(const std::vector<double>& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) > best) {
            best = std::abs(v[j]);
            arg = j;
        }
    }
    return v[arg] < 0.0;
}

DenseMatrix random_coords(std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DenseMatrix coords(m, 2);
    for (std::size_t i = 0; i < m; ++i) {
        coords(i, 0) = 1e-4 * detail::normal01(rng);
        coords(i, 1) = 1e-4 * detail::normal01(rng);
    }
    return coords;
}

} // namespace

PcaInitResult pca_init(const DenseMatrix& points, std::uint64_t seed) {
    const std::size_t m = points.rows;
    const std::size_t d = points.cols;
    if (m < 2 || d < 1) {
        throw std::invalid_argument("pca_init requires at least two points with one coordinate");
    }

    DenseMatrix centered(m, d);
    double raw_ms = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m; ++r) mean += points(r, c);
        mean /= static_cast<double>(m);
        for (std::size_t r = 0; r < m; ++r) {
            centered(r, c) = points(r, c) - mean;
            raw_ms += points(r, c) * points(r, c);
        }
    }
    raw_ms /= static_cast<double>(m * d);

    double frob2 = 0.0;
    for (double x : centered.data) frob2 += x * x;
    if (frob2 / static_cast<double>(m * d) <= 1e-24 * (1.0 + raw_ms)) {
        return {random_coords(m, seed), true};
    }

    // Eigen decomposition runs on the smaller of the covariance (d x d) and
    // Gram (m x m) forms; either way the reported directions are unit gene-
    // space loadings so both paths share one sign convention.
    const bool use_gram = m < d;
    const std::size_t n = use_gram ? m : d;
    DenseMatrix a(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = r; c < n; ++c) {
            double acc = 0.0;
            if (use_gram) {
                for (std::size_t t = 0; t < d; ++t) acc += centered(r, t) * centered(c, t);
            } else {
                for (std::size_t t = 0; t < m; ++t) acc += centered(t, r) * centered(t, c);
            }
            a(r, c) = acc;
            a(c, r) = acc;
        }
    }

    DenseMatrix coords(m, 2);
    std::vector<std::pair<double, std::vector<double>>> found;
    for (std::size_t comp = 0; comp < 2; ++comp) {
        auto [lambda, vec] = power_iteration(a, found);
        if (lambda <= 0.0) {
            if (comp == 0) {
                return {random_coords(m, seed), true};
            }
            for (std::size_t r = 0; r < m; ++r) coords(r, 1) = 0.0;
            break;
        }
        std::vector<double> loadings(d, 0.0);
        if (use_gram) {
            for (std::size_t t = 0; t < d; ++t) {
                double acc = 0.0;
                for (std::size_t r = 0; r < m; ++r) acc += centered(r, t) * vec[r];
                loadings[t] = acc;
            }
            const double nl = norm2(loadings);
            if (nl > 0.0) {
                for (double& x : loadings) x /= nl;
            }
        } else {
            loadings = vec;
        }
        if (needs_flip(loadings)) {
            for (double& x : loadings) x = -x;
        }
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) acc += centered(r, t) * loadings[t];
            coords(r, comp) = acc;
        }
        found.emplace_back(lambda, std::move(vec));
    }

    double mean0 = 0.0;
    for (std::size_t r = 0; r < m; ++r) mean0 += coords(r, 0);
    mean0 /= static_cast<double>(m);
    double var0 = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double dv = coords(r, 0) - mean0;
        var0 += dv * dv;
    }
    var0 /= static_cast<double>(m);
    if (!(var0 > 0.0)) {
        return {random_coords(m, seed), true};
    }
    const double scale = 1e-4 / std::sqrt(var0);
    for (double& x : coords.data) x *= scale;
    return {coords, false};
}

namespace {

// Student-t numerators 1 / (1 + ||y_i - y_j||^2) and their total.
double student_numerators(const DenseMatrix& coords, DenseMatrix& num) {
    const std::size_t m = coords.rows;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        num(i, i) = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double dx = coords(i, 0) - coords(j, 0);
            const double dy = coords(i, 1) - coords(j, 1);
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            num(i, j) = v;
            num(j, i) = v;
            z += 2.0 * v;
        }
    }
    return z;
}

} // namespace

double kl_divergence(const DenseMatrix& affinities, const DenseMatrix& coords) {
    const std::size_t m = coords.rows;
    if (affinities.rows != m || affinities.cols != m || coords.cols != 2) {
        throw std::invalid_argument("kl_divergence requires an M x M affinity matrix and M x 2 coordinates");
    }
    DenseMatrix num(m, m);
    const double z = student_numerators(coords, num);
    double kl = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double p = affinities(i, j);
            if (p <= 0.0) continue;
            const double q = std::max(num(i, j) / z, DBL_MIN);
            kl += p * std::log(p / q);
        }
    }
    return kl;
}

DenseMatrix tsne_gradient(const DenseMatrix& affinities, const DenseMatrix& coords) {
    const std::size_t m = coords.rows;
    if (affinities.rows != m || affinities.cols != m || coords.cols != 2) {
        throw std::invalid_argument("tsne_gradient requires an M x M affinity matrix and M x 2 coordinates");
    }
    DenseMatrix num(m, m);
    const double z = student_numerators(coords, num);
    DenseMatrix grad(m, 2);
    for (std::size_t i = 0; i < m; ++i) {
        double gx = 0.0;
        double gy = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double q = num(i, j) / z;
            const double w = (affinities(i, j) - q) * num(i, j);
            gx += w * (coords(i, 0) - coords(j, 0));
            gy += w * (coords(i, 1) - coords(j, 1));
        }
        grad(i, 0) = 4.0 * gx;
        grad(i, 1) = 4.0 * gy;
    }
    return grad;
}

TsneResult tsne(const DenseMatrix& points, std::vector<std::string> cell_ids,
                const TsneConfig& config) {
    const std::size_t m = points.rows;
    if (cell_ids.size() != m) {
        throw std::invalid_argument("tsne requires one cell id per point");
    }

    const DenseMatrix joint = calibrated_affinities(points, config.perplexity);

    TsneResult result;
    if (config.init == TsneInit::pca) {
        PcaInitResult init = pca_init(points, config.seed);
        result.embedding.coords = std::move(init.coords);
        result.pca_fallback = init.fallback;
    } else {
        result.embedding.coords = random_coords(m, config.seed);
    }
    DenseMatrix& y = result.embedding.coords;

    DenseMatrix exaggerated = joint;
    for (double& x : exaggerated.data) x *= config.early_exaggeration;

    DenseMatrix velocity(m, 2);
    DenseMatrix gains(m, 2);
    std::fill(gains.data.begin(), gains.data.end(), 1.0);

    auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };

    result.kl_trace.reserve(config.n_iter + 1);
    for (std::size_t iter = 0; iter < config.n_iter; ++iter) {
        result.kl_trace.push_back(kl_divergence(joint, y));

        const bool early = iter < config.exaggeration_iters;
        const DenseMatrix grad = tsne_gradient(early ? exaggerated : joint, y);
        const double momentum = early ? config.momentum_early : config.momentum_late;

        for (std::size_t t = 0; t < y.data.size(); ++t) {
            const double g = grad.data[t];
            const double v = velocity.data[t];
            gains.data[t] = sign(g) != sign(v) ? gains.data[t] + 0.2 : gains.data[t] * 0.8;
            gains.data[t] = std::max(gains.data[t], 0.01);
            velocity.data[t] = momentum * v - config.learning_rate * gains.data[t] * g;
            y.data[t] += velocity.data[t];
        }

        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            mx += y(i, 0);
            my += y(i, 1);
        }
        mx /= static_cast<double>(m);
        my /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            y(i, 0) -= mx;
            y(i, 1) -= my;
        }
    }
    result.kl_trace.push_back(kl_divergence(joint, y));
    result.embedding.cell_ids = std::move(cell_ids);
    return result;
}

void export_coords(const Embedding2D& embedding, const std::filesystem::path& path) {
    const std::size_t m = embedding.cell_ids.size();
    if (embedding.coords.rows != m || embedding.coords.cols != 2) {
        throw std::invalid_argument("embedding coordinates must be M x 2 with one cell id per row");
    }
    std::string out = "cell_id,x,y\n";
    for (std::size_t i = 0; i < m; ++i) {
        const std::string& id = embedding.cell_ids[i];
        if (id.find_first_of(",\r\n") != std::string::npos) {
            throw IoError("cell id '" + id + "' contains a delimiter or newline");
        }
        out += id;
        out += ',';
        out += format_double(embedding.coords(i, 0));
        out += ',';
        out += format_double(embedding.coords(i, 1));
        out += '\n';
    }
    atomic_write_file(path, out);
}

Embedding2D import_coords(const std::filesystem::path& path,
                          const std::vector<std::string>* reference_ids) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("'" + path.string() + "' is empty; expected a 'cell_id,x,y' header");
    }
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "cell_id,x,y") {
        throw IoError("unexpected header '" + line + "' in '" + path.string() +
                      "'; expected 'cell_id,x,y'");
    }

    std::vector<std::string> ids;
    std::vector<double> xs, ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            throw IoError("malformed coordinate row at line " + std::to_string(line_no) + " of '" +
                          path.string() + "'");
        }
        const std::string where = "at line " + std::to_string(line_no) + " of '" + path.string() + "'";
        ids.push_back(line.substr(0, c1));
        xs.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1), where));
        ys.push_back(parse_double(line.substr(c2 + 1), where));
    }
    if (ids.empty()) {
        throw IoError("'" + path.string() + "' contains no coordinate rows");
    }

    Embedding2D embedding;
    if (reference_ids != nullptr) {
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!index.emplace(ids[i], i).second) {
                throw IoError("duplicate cell id '" + ids[i] + "' in '" + path.string() + "'");
            }
        }
        for (const auto& [id, pos] : index) {
            (void)pos;
            if (std::find(reference_ids->begin(), reference_ids->end(), id) ==
                reference_ids->end()) {
                throw IoError("coordinate file '" + path.string() + "' names unknown cell '" + id +
                              "'");
            }
        }
        embedding.cell_ids = *reference_ids;
        embedding.coords = DenseMatrix(reference_ids->size(), 2);
        for (std::size_t i = 0; i < reference_ids->size(); ++i) {
            auto it = index.find((*reference_ids)[i]);
            if (it == index.end()) {
                throw IoError("coordinate file '" + path.string() + "' is missing cell '" +
                              (*reference_ids)[i] + "'");
            }
            embedding.coords(i, 0) = xs[it->second];
            embedding.coords(i, 1) = ys[it->second];
        }
    } else {
        embedding.cell_ids = std::move(ids);
        embedding.coords = DenseMatrix(embedding.cell_ids.size(), 2);
        for (std::size_t i = 0; i < embedding.cell_ids.size(); ++i) {
            embedding.coords(i, 0) = xs[i];
            embedding.coords(i, 1) = ys[i];
        }
    }
    return embedding;
}

} // namespace ccp
