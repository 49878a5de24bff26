#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <string>
#include <thread>

#include <httplib.h>

#include "ccp/geo.hpp"
#include "ccp/io.hpp"
#include "test_util.hpp"

using namespace ccp;

namespace {

// Minimal HTTP server standing in for the remote archive. Handlers must be
// registered in the setup callback, before the listener thread starts.
class LocalServer {
public:
    template <typename Setup>
    explicit LocalServer(Setup&& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        while (!server_.is_running()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
    }

    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    GeoOptions options() const {
        GeoOptions o;
        o.host = "127.0.0.1";
        o.port = port_;
        o.use_tls = false;
        o.timeout_seconds = 5;
        return o;
    }

    int port() const { return port_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GeoError::Kind kind_of(const std::function<void()>& call) {
    try {
        call();
    } catch (const GeoError& e) {
        return e.kind;
    }
    FAIL("expected a GeoError");
    return GeoError::Kind::network;
}

} // namespace

TEST_CASE("fetch_geo rejects malformed accessions before any network use") {
    GeoOptions options;
    options.host = "127.0.0.1";
    options.port = 1; // nothing listens here; must not matter
    options.use_tls = false;
    TempDir dir;
    for (const std::string bad : {"GSE", "gse57249", "57249", "GSE57x", "GSE 57", "XSE57249"}) {
        CAPTURE(bad);
        CHECK(kind_of([&] { fetch_geo(bad, dir.path, options); }) == GeoError::Kind::bad_accession);
    }
}

TEST_CASE("fetch_geo downloads listed files and is idempotent") {
    // Listing mixes relative links, a parent link, a subdirectory and an
    // absolute href with query/fragment noise; only real files survive.
    LocalServer server([](httplib::Server& s) {
        s.Get("/geo/series/GSE57nnn/GSE57249/suppl/",
              [](const httplib::Request&, httplib::Response& res) {
                  res.set_content(
                      "<html><body>"
                      "<a href=\"../\">parent</a>"
                      "<a href=\"sub/\">subdir</a>"
                      "<a href=\"b_data.txt\">b</a>"
                      "<a href=\"/geo/series/GSE57nnn/GSE57249/suppl/a_meta.csv?download=1#top\">a</a>"
                      "</body></html>",
                      "text/html");
              });
        s.Get("/geo/series/GSE57nnn/GSE57249/suppl/b_data.txt",
              [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("payload-b", "text/plain");
              });
        s.Get("/geo/series/GSE57nnn/GSE57249/suppl/a_meta.csv",
              [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("payload-a", "text/plain");
              });
    });

    TempDir dir;
    const auto first = fetch_geo("GSE57249", dir.path / "cache", server.options());
    REQUIRE(first.size() == 2);
    // Sorted by file name.
    CHECK(first[0].path.filename() == "a_meta.csv");
    CHECK(first[1].path.filename() == "b_data.txt");
    CHECK(first[0].downloaded);
    CHECK(first[1].downloaded);
    CHECK(read_file(first[0].path) == "payload-a");
    CHECK(read_file(first[1].path) == "payload-b");

    // Complete files are kept on the second call.
    const auto second = fetch_geo("GSE57249", dir.path / "cache", server.options());
    REQUIRE(second.size() == 2);
    CHECK_FALSE(second[0].downloaded);
    CHECK_FALSE(second[1].downloaded);

    // A truncated file no longer matches the advertised size: re-downloaded.
    atomic_write_file(first[0].path, "pay");
    const auto third = fetch_geo("GSE57249", dir.path / "cache", server.options());
    CHECK(third[0].downloaded);
    CHECK(read_file(third[0].path) == "payload-a");
    CHECK_FALSE(third[1].downloaded);
}

TEST_CASE("fetch_geo maps short accessions to the GSEnnn stem") {
    LocalServer server([](httplib::Server& s) {
        s.Get("/geo/series/GSEnnn/GSE12/suppl/",
              [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("<a href=\"only.txt\">f</a>", "text/html");
              });
        s.Get("/geo/series/GSEnnn/GSE12/suppl/only.txt",
              [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("tiny", "text/plain");
              });
    });
    TempDir dir;
    const auto files = fetch_geo("GSE12", dir.path, server.options());
    REQUIRE(files.size() == 1);
    CHECK(read_file(files[0].path) == "tiny");
}

TEST_CASE("fetch_geo classifies failures by kind") {
    TempDir dir;

    SUBCASE("missing series directory is not_found") {
        LocalServer server([](httplib::Server&) {});
        CHECK(kind_of([&] { fetch_geo("GSE57249", dir.path, server.options()); }) ==
              GeoError::Kind::not_found);
    }
    SUBCASE("listing without files is not_found") {
        LocalServer server([](httplib::Server& s) {
            s.Get("/geo/series/GSE57nnn/GSE57249/suppl/",
                  [](const httplib::Request&, httplib::Response& res) {
                      res.set_content("<html><a href=\"../\">up</a></html>", "text/html");
                  });
        });
        CHECK(kind_of([&] { fetch_geo("GSE57249", dir.path, server.options()); }) ==
              GeoError::Kind::not_found);
    }
    SUBCASE("server errors during listing are network errors") {
        LocalServer server([](httplib::Server& s) {
            s.Get("/geo/series/GSE57nnn/GSE57249/suppl/",
                  [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
        });
        CHECK(kind_of([&] { fetch_geo("GSE57249", dir.path, server.options()); }) ==
              GeoError::Kind::network);
    }
    SUBCASE("unreachable host is a network error") {
        // Bind a port to learn a definitely-free number, then release it.
        int free_port = 0;
        {
            httplib::Server probe;
            free_port = probe.bind_to_any_port("127.0.0.1");
        }
        REQUIRE(free_port > 0);
        GeoOptions options;
        options.host = "127.0.0.1";
        options.port = free_port;
        options.use_tls = false;
        options.timeout_seconds = 5;
        CHECK(kind_of([&] { fetch_geo("GSE57249", dir.path, options); }) ==
              GeoError::Kind::network);
    }
}

TEST_CASE("default_geo_cache_dir honours the environment override") {
    const char* saved = std::getenv("CCP_CACHE_DIR");
    const std::string saved_value = saved ? saved : "";

    ::setenv("CCP_CACHE_DIR", "/tmp/ccp-cache-test", 1);
    CHECK(default_geo_cache_dir() == std::filesystem::path("/tmp/ccp-cache-test"));

    ::unsetenv("CCP_CACHE_DIR");
    CHECK(default_geo_cache_dir() == std::filesystem::path("./geo_cache"));

    if (saved != nullptr) {
        ::setenv("CCP_CACHE_DIR", saved_value.c_str(), 1);
    }
}
