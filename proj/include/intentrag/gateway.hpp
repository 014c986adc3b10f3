#pragma once

// Chat-completion gateway: backend routing, retries with backoff, rate
// limiting, bounded concurrency and a digest-keyed response cache.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "intentrag/common.hpp"
#include "intentrag/http.hpp"

namespace intentrag {

struct ChatRequest {
    std::string model;
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.0;
    std::optional<std::int64_t> seed;
    int max_tokens = 512;
};

struct ChatResponse {
    std::string text;
    std::string backend_model;
    bool cached = false;
    std::int64_t latency_ms = 0;
};

/// Stable digest over every field that can change a completion.
std::string request_digest(const ChatRequest& req);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Returns the completion text or throws BackendError.
    virtual std::string complete(const ChatRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Replies with the user message verbatim.
class EchoBackend final : public ChatBackend {
public:
    std::string complete(const ChatRequest& req) override { return req.user; }
    std::string name() const override { return "echo"; }
};

/// Rule table: the first rule whose literal `contains` fragments all occur in
/// the prompt (system + blank line + user) and whose optional regex matches
/// wins. The response may reference regex groups as $1, $2, ...
class CannedMapBackend final : public ChatBackend {
public:
    struct Rule {
        std::vector<std::string> contains;
        std::optional<std::string> pattern;
        std::string response;
    };
    explicit CannedMapBackend(std::vector<Rule> rules, std::optional<std::string> fallback = std::nullopt);
    /// {"rules":[{"contains":[...],"pattern":"...","response":"..."}],"default":"..."}
    static std::shared_ptr<CannedMapBackend> from_json(const json& j);

    std::string complete(const ChatRequest& req) override;
    std::string name() const override { return "canned"; }

private:
    struct Compiled {
        Rule rule;
        std::optional<std::regex> re;
    };
    std::vector<Compiled> rules_;
    std::optional<std::string> fallback_;
};

/// Transcript replay keyed by exact (system, user) text. Unknown prompts fail.
class ScriptedBackend final : public ChatBackend {
public:
    struct Turn {
        std::optional<std::string> system;
        std::string user;
        std::string response;
    };
    explicit ScriptedBackend(std::vector<Turn> turns);
    /// {"turns":[{"system"?:..., "user":..., "response":...}]}
    static std::shared_ptr<ScriptedBackend> from_json(const json& j);

    std::string complete(const ChatRequest& req) override;
    std::string name() const override { return "scripted"; }

private:
    std::map<std::pair<std::string, std::string>, std::string> table_;
};

/// OpenAI-style chat-completions client.
class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string complete(const ChatRequest& req) override;
    std::string name() const override { return "http:" + endpoint_.base_url; }

private:
    HttpEndpoint endpoint_;
};

struct ChatOutcome {
    std::optional<ChatResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
};

class Gateway {
public:
    struct Options {
        RetryPolicy retry;
        bool cache_enabled = true;
        std::optional<std::filesystem::path> cache_dir;  // memory-only when unset
        std::size_t max_in_flight = 8;
        int min_interval_ms = 0;  // spacing between backend calls
    };

    struct Stats {
        std::size_t backend_calls = 0;
        std::size_t cache_hits = 0;
        std::size_t failures = 0;
    };

    Gateway();
    explicit Gateway(Options options);
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    void set_default_backend(std::shared_ptr<ChatBackend> backend);
    void route(const std::string& model, std::shared_ptr<ChatBackend> backend);

    ChatResponse complete(const ChatRequest& req);

    /// Output order follows input order. At most `parallelism` requests are
    /// outstanding. Failures are collected per request unless `fail_fast`, in
    /// which case pending work is abandoned and the first error is rethrown.
    std::vector<ChatOutcome> complete_many(std::span<const ChatRequest> reqs, std::size_t parallelism,
                                           bool fail_fast = false);

    Stats stats() const;

private:
    std::shared_ptr<ChatBackend> backend_for(const std::string& model) const;
    std::string call_backend(ChatBackend& backend, const ChatRequest& req);
    std::optional<std::string> read_disk_cache(const std::string& digest) const;
    void write_disk_cache(const std::string& digest, const ChatRequest& req, const std::string& text) const;
    void pace();

    Options options_;
    std::shared_ptr<ChatBackend> default_backend_;
    std::map<std::string, std::shared_ptr<ChatBackend>> routes_;

    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> memory_cache_;
    std::unordered_map<std::string, std::shared_future<std::string>> in_flight_;

    std::counting_semaphore<4096> slots_;
    std::mutex pace_mu_;
    std::chrono::steady_clock::time_point next_slot_{};

    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
    std::atomic<std::size_t> failures_{0};
};

}  // namespace intentrag
