#include "intentrag/http.hpp"

#include <httplib.h>

#include <algorithm>

namespace intentrag {

int backoff_delay_ms(const RetryPolicy& policy, int attempt, int retry_after_ms) {
    if (retry_after_ms >= 0) return std::min(retry_after_ms, policy.max_backoff_ms);
    long long delay = static_cast<long long>(policy.base_backoff_ms) << std::min(attempt, 20);
    return static_cast<int>(std::min<long long>(delay, policy.max_backoff_ms));
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint URL lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.prefix = url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

}  // namespace

json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body) {
    const auto url = split_url(endpoint.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::min(endpoint.timeout_s, 30), 0);
    client.set_read_timeout(endpoint.timeout_s, 0);
    client.set_write_timeout(endpoint.timeout_s, 0);

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    const std::string full_path = url.prefix + path;
    auto res = client.Post(full_path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError("POST " + endpoint.base_url + path + " failed: " + httplib::to_string(res.error()),
                           /*retryable=*/true);
    }
    if (res->status == 429) {
        int retry_after = -1;
        if (res->has_header("Retry-After")) {
            try {
                retry_after = std::stoi(res->get_header_value("Retry-After")) * 1000;
            } catch (...) {
            }
        }
        throw BackendError("rate limited by " + endpoint.base_url, true, true, retry_after);
    }
    if (res->status >= 500) {
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url + path, true);
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + endpoint.base_url + path + ": " +
                           res->body.substr(0, 300));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw BackendError("unparseable reply from " + endpoint.base_url + path + ": " + e.what());
    }
}

}  // namespace intentrag
