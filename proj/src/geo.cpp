#include "ccp/geo.hpp"

#include <cstdlib>
#include <regex>
#include <set>

#include <httplib.h>

#include "ccp/io.hpp"

namespace ccp {

namespace fs = std::filesystem;

namespace {

// GSE57249 lives under series stem GSE57nnn: the last three digits of the
// numeric part are masked.
std::string series_stem(const std::string& accession) {
    const std::string digits = accession.substr(3);
    if (digits.size() <= 3) {
        return "GSEnnn";
    }
    return "GSE" + digits.substr(0, digits.size() - 3) + "nnn";
}

// Pulls candidate file names out of an HTML directory listing.
std::set<std::string> listed_names(const std::string& html) {
    std::set<std::string> names;
    static const std::regex href_re("href=\"([^\"]*)\"", std::regex::icase);
    for (auto it = std::sregex_iterator(html.begin(), html.end(), href_re);
         it != std::sregex_iterator(); ++it) {
        std::string href = (*it)[1].str();
        const std::size_t query = href.find_first_of("?#");
        if (query != std::string::npos) {
            href = href.substr(0, query);
        }
        if (href.empty() || href.back() == '/') {
            continue; // directories and parent links
        }
        const std::size_t slash = href.find_last_of('/');
        const std::string name = slash == std::string::npos ? href : href.substr(slash + 1);
        if (name.empty() || name == "." || name == "..") {
            continue;
        }
        names.insert(name);
    }
    return names;
}

} // namespace

std::vector<GeoFile> fetch_geo(const std::string& accession, const fs::path& dest_dir,
                               const GeoOptions& options) {
    static const std::regex accession_re("^GSE[0-9]+$");
    if (!std::regex_match(accession, accession_re)) {
        throw GeoError(GeoError::Kind::bad_accession,
                       "malformed accession '" + accession + "' (expected GSE<digits>)");
    }

    const std::string dir_path =
        options.base_path + "/" + series_stem(accession) + "/" + accession + "/suppl/";
    const std::string origin = (options.use_tls ? "https://" : "http://") + options.host + ":" +
                               std::to_string(options.port);

    httplib::Client client(origin);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    client.set_follow_location(true);

    auto listing = client.Get(dir_path);
    if (!listing) {
        throw GeoError(GeoError::Kind::network, "cannot reach " + options.host + ": " +
                                                    httplib::to_string(listing.error()));
    }
    if (listing->status == 404) {
        throw GeoError(GeoError::Kind::not_found,
                       "no supplementary file directory for " + accession);
    }
    if (listing->status != 200) {
        throw GeoError(GeoError::Kind::network, "listing request for " + accession +
                                                    " returned status " +
                                                    std::to_string(listing->status));
    }
    const std::set<std::string> names = listed_names(listing->body);
    if (names.empty()) {
        throw GeoError(GeoError::Kind::not_found,
                       "no supplementary files listed for " + accession);
    }

    std::error_code ec;
    fs::create_directories(dest_dir, ec);
    if (ec) {
        throw GeoError(GeoError::Kind::disk,
                       "cannot create '" + dest_dir.string() + "': " + ec.message());
    }

    std::vector<GeoFile> files;
    files.reserve(names.size());
    for (const auto& name : names) {
        const std::string remote = dir_path + name;
        const fs::path local = dest_dir / name;

        // A complete local copy (same advertised size) is kept as is.
        if (fs::exists(local)) {
            auto head = client.Head(remote);
            if (head && head->status == 200 && head->has_header("Content-Length")) {
                const auto advertised = head->get_header_value_u64("Content-Length", 0);
                if (advertised > 0 && fs::file_size(local, ec) == advertised && !ec) {
                    files.push_back({local, false});
                    continue;
                }
            }
        }

        auto body = client.Get(remote);
        if (!body) {
            throw GeoError(GeoError::Kind::network, "download of '" + name + "' failed: " +
                                                        httplib::to_string(body.error()));
        }
        if (body->status == 404) {
            throw GeoError(GeoError::Kind::not_found, "'" + name + "' vanished from " + accession);
        }
        if (body->status != 200) {
            throw GeoError(GeoError::Kind::network, "download of '" + name + "' returned status " +
                                                        std::to_string(body->status));
        }
        try {
            atomic_write_file(local, body->body);
        } catch (const IoError& e) {
            throw GeoError(GeoError::Kind::disk, e.what());
        }
        files.push_back({local, true});
    }
    return files;
}

fs::path default_geo_cache_dir() {
    if (const char* dir = std::getenv("CCP_CACHE_DIR"); dir != nullptr && *dir != '\0') {
        return fs::path(dir);
    }
    return fs::path("./geo_cache");
}

} // namespace ccp
