#pragma once

// Thin JSON-over-HTTP client shared by the remote backends, plus the retry
// loop they all use.

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <thread>

#include "intentrag/common.hpp"

namespace intentrag {

struct RetryPolicy {
    int max_retries = 3;        // attempts after the first
    int base_backoff_ms = 250;  // doubled per attempt
    int max_backoff_ms = 8000;
};

/// Delay before retry number `attempt` (0-based), honouring a server hint.
int backoff_delay_ms(const RetryPolicy& policy, int attempt, int retry_after_ms = -1);

/// Runs `fn`, retrying retryable BackendErrors with exponential backoff.
/// Non-retryable errors and the last failure propagate.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const BackendError& e) {
            if (!e.retryable() || attempt >= policy.max_retries) throw;
            const int delay = backoff_delay_ms(policy, attempt, e.retry_after_ms());
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string api_key;   // sent as a Bearer token when nonempty
    int timeout_s = 120;
};

/// POSTs `body` to base_url + path and returns the parsed JSON reply.
/// Transport failures, 429 and 5xx raise retryable BackendErrors; other
/// non-2xx statuses raise non-retryable ones.
json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body);

}  // namespace intentrag
