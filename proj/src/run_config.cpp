#include "ccp/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccp/io.hpp"

namespace ccp {

namespace {

std::string bool_str(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw IoError("config key '" + key + "' expects true or false, got '" + value + "'");
}

template <typename Int>
Int parse_int(const std::string& value, const std::string& key) {
    Int out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last || value.empty()) {
        throw IoError("config key '" + key + "' expects an integer, got '" + value + "'");
    }
    return out;
}

} // namespace

std::map<std::string, std::string> RunConfig::to_map() const {
    return {
        {"cell_metric", cell_metric},
        {"cluster_method", cluster_method},
        {"clustering_seeds", std::to_string(clustering_seeds)},
        {"format", format},
        {"input", input},
        {"kappa", format_double(kappa)},
        {"labels", labels},
        {"labels_header", bool_str(labels_header)},
        {"log1p", bool_str(log1p)},
        {"metric", metric},
        {"min_cells", std::to_string(min_cells)},
        {"n_supergenes", std::to_string(n_supergenes)},
        {"orientation", orientation},
        {"out", out},
        {"perplexity", format_double(perplexity)},
        {"reduction_seeds", std::to_string(reduction_seeds)},
        {"run_id", run_id},
        {"seed", std::to_string(seed)},
        {"tau", format_double(tau)},
        {"tsne_init", tsne_init},
        {"tsne_iters", std::to_string(tsne_iters)},
        {"vc", format_double(vc)},
    };
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& entries) {
    RunConfig cfg;
    for (const auto& [key, value] : entries) {
        if (key == "input") cfg.input = value;
        else if (key == "labels") cfg.labels = value;
        else if (key == "out") cfg.out = value;
        else if (key == "format") cfg.format = value;
        else if (key == "orientation") cfg.orientation = value;
        else if (key == "labels_header") cfg.labels_header = parse_bool(value, key);
        else if (key == "min_cells") cfg.min_cells = parse_int<std::size_t>(value, key);
        else if (key == "log1p") cfg.log1p = parse_bool(value, key);
        else if (key == "n_supergenes") cfg.n_supergenes = parse_int<std::size_t>(value, key);
        else if (key == "vc") cfg.vc = parse_double(value, "for config key 'vc'");
        else if (key == "tau") cfg.tau = parse_double(value, "for config key 'tau'");
        else if (key == "kappa") cfg.kappa = parse_double(value, "for config key 'kappa'");
        else if (key == "cluster_method") cfg.cluster_method = value;
        else if (key == "metric") cfg.metric = value;
        else if (key == "cell_metric") cfg.cell_metric = value;
        else if (key == "perplexity") cfg.perplexity = parse_double(value, "for config key 'perplexity'");
        else if (key == "tsne_iters") cfg.tsne_iters = parse_int<std::size_t>(value, key);
        else if (key == "tsne_init") cfg.tsne_init = value;
        else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(value, key);
        else if (key == "reduction_seeds") cfg.reduction_seeds = parse_int<std::size_t>(value, key);
        else if (key == "clustering_seeds") cfg.clustering_seeds = parse_int<std::size_t>(value, key);
        else if (key == "run_id") cfg.run_id = value;
        else throw IoError("unknown config key '" + key + "'");
    }
    return cfg;
}

std::string RunConfig::serialize() const {
    std::string text;
    for (const auto& [key, value] : to_map()) {
        text += key;
        text += '=';
        text += value;
        text += '\n';
    }
    return text;
}

RunConfig parse_run_config(const std::string& text) {
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("invalid config JSON: ") + e.what());
        }
        if (!j.contains("config") || !j["config"].is_object()) {
            throw IoError("config JSON must carry a \"config\" object");
        }
        std::map<std::string, std::string> entries;
        try {
            for (const auto& [key, value] : j["config"].items()) {
                entries[key] = value.get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("config JSON values must be strings: ") + e.what());
        }
        return RunConfig::from_map(entries);
    }

    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw IoError("malformed config line " + std::to_string(line_no) +
                          ": expected key=value, got '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        if (!entries.emplace(key, line.substr(eq + 1)).second) {
            throw IoError("duplicate config key '" + key + "' at line " + std::to_string(line_no));
        }
    }
    return RunConfig::from_map(entries);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

} // namespace ccp
