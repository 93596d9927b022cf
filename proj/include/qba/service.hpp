#pragma once

// JSON-over-HTTP facade. Api holds the request handling and is usable
// without sockets; Server binds it to an httplib listener.

#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace qba::service {

struct ServiceConfig {
    std::string cors_origin = "*";
    std::size_t cache_entries = 128;
    std::size_t sweep_cap = 250'000;
    int threads = 0;
};

struct Request {
    std::string method;  // GET, POST
    std::string path;
    std::map<std::string, std::string> params;
    std::string body;
    std::optional<std::string> if_none_match;
};

struct Response {
    int status = 200;
    std::string body;  // empty for 304
    std::optional<std::string> etag;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Bounded least-recently-used map; every member is safe to call from
/// concurrent request handlers.
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, std::string value);
    std::size_t size() const;

private:
    using Entry = std::pair<std::string, std::string>;

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;  // most recent first
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class Api {
public:
    explicit Api(ServiceConfig config = {});

    Response handle(const Request& request);

    const ServiceConfig& config() const noexcept { return config_; }
    std::size_t cached() const { return cache_.size(); }

private:
    ServiceConfig config_;
    LruCache cache_;
};

class Server {
public:
    explicit Server(ServiceConfig config = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Port 0 picks an ephemeral port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qba::service
