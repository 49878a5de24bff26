#ifndef CCP_GEO_HPP
#define CCP_GEO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccp {

struct GeoError : std::runtime_error {
    enum class Kind { bad_accession, network, not_found, disk };
    Kind kind;
    GeoError(Kind k, const std::string& message) : std::runtime_error(message), kind(k) {}
};

// Endpoint knobs, overridable so tests can point at a local server.
struct GeoOptions {
    std::string host = "ftp.ncbi.nlm.nih.gov";
    int port = 443;
    bool use_tls = true;
    std::string base_path = "/geo/series";
    int timeout_seconds = 120;
};

struct GeoFile {
    std::filesystem::path path;
    bool downloaded = false; // false when an existing complete file was kept
};

// Downloads the accession's supplementary files into dest_dir. Validates the
// accession shape (GSE<digits>) before touching the network; skips files
// already present with the advertised size, so repeat calls are idempotent.
// Returns one entry per remote file, sorted by name.
std::vector<GeoFile> fetch_geo(const std::string& accession,
                               const std::filesystem::path& dest_dir,
                               const GeoOptions& options = {});

// $CCP_CACHE_DIR when set, otherwise "./geo_cache".
std::filesystem::path default_geo_cache_dir();

} // namespace ccp

#endif
