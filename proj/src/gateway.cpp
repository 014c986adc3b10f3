#include "intentrag/gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <thread>

namespace intentrag {

std::string request_digest(const ChatRequest& req) {
    // Temperatures are digested via their shortest round-trip decimal form so
    // 0.7 parsed from JSON and 0.7 written in code agree.
    json key{{"model", req.model},
             {"system", req.system ? json(*req.system) : json(nullptr)},
             {"user", req.user},
             {"temperature", req.temperature},
             {"seed", req.seed ? json(*req.seed) : json(nullptr)},
             {"max_tokens", req.max_tokens}};
    return sha256_hex(key.dump());
}

// ---------------------------------------------------------------------------
// Mock backends

CannedMapBackend::CannedMapBackend(std::vector<Rule> rules, std::optional<std::string> fallback)
    : fallback_(std::move(fallback)) {
    for (auto& r : rules) {
        Compiled c{std::move(r), std::nullopt};
        if (c.rule.pattern) {
            try {
                c.re.emplace(*c.rule.pattern, std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw ValidationError("bad canned-map pattern \"" + *c.rule.pattern + "\": " + e.what());
            }
        }
        rules_.push_back(std::move(c));
    }
}

std::shared_ptr<CannedMapBackend> CannedMapBackend::from_json(const json& j) {
    std::vector<Rule> rules;
    for (const auto& r : j.value("rules", json::array())) {
        Rule rule;
        if (r.contains("contains")) {
            const auto& c = r.at("contains");
            if (c.is_string()) {
                rule.contains.push_back(c.get<std::string>());
            } else {
                rule.contains = c.get<std::vector<std::string>>();
            }
        }
        if (r.contains("pattern")) rule.pattern = r.at("pattern").get<std::string>();
        rule.response = r.at("response").get<std::string>();
        rules.push_back(std::move(rule));
    }
    std::optional<std::string> fallback;
    if (j.contains("default") && !j.at("default").is_null()) fallback = j.at("default").get<std::string>();
    return std::make_shared<CannedMapBackend>(std::move(rules), std::move(fallback));
}

std::string CannedMapBackend::complete(const ChatRequest& req) {
    const std::string prompt = req.system ? *req.system + "\n\n" + req.user : req.user;
    for (const auto& c : rules_) {
        const bool all = std::all_of(c.rule.contains.begin(), c.rule.contains.end(),
                                     [&](const std::string& frag) { return prompt.find(frag) != std::string::npos; });
        if (!all) continue;
        if (!c.re) return c.rule.response;
        std::smatch m;
        if (std::regex_search(prompt, m, *c.re)) return m.format(c.rule.response);
    }
    if (fallback_) return *fallback_;
    throw BackendError("canned-map backend has no rule for the prompt");
}

ScriptedBackend::ScriptedBackend(std::vector<Turn> turns) {
    for (auto& t : turns) table_[{t.system.value_or(""), t.user}] = std::move(t.response);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& j) {
    std::vector<Turn> turns;
    for (const auto& t : j.at("turns")) {
        Turn turn;
        if (t.contains("system") && !t.at("system").is_null()) turn.system = t.at("system").get<std::string>();
        turn.user = t.at("user").get<std::string>();
        turn.response = t.at("response").get<std::string>();
        turns.push_back(std::move(turn));
    }
    return std::make_shared<ScriptedBackend>(std::move(turns));
}

std::string ScriptedBackend::complete(const ChatRequest& req) {
    auto it = table_.find({req.system.value_or(""), req.user});
    if (it == table_.end()) throw BackendError("scripted backend has no turn for the prompt");
    return it->second;
}

std::string HttpChatBackend::complete(const ChatRequest& req) {
    json messages = json::array();
    if (req.system) messages.push_back({{"role", "system"}, {"content", *req.system}});
    messages.push_back({{"role", "user"}, {"content", req.user}});
    json body{{"model", req.model},
              {"messages", std::move(messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
    if (req.seed) body["seed"] = *req.seed;
    const json reply = post_json(endpoint_, "/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("chat reply lacks choices[0].message.content: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway() : Gateway(Options{}) {}

Gateway::Gateway(Options options)
    : options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_in_flight, 1, 4096))) {
    if (options_.cache_dir) std::filesystem::create_directories(*options_.cache_dir);
}

void Gateway::set_default_backend(std::shared_ptr<ChatBackend> backend) {
    default_backend_ = std::move(backend);
}

void Gateway::route(const std::string& model, std::shared_ptr<ChatBackend> backend) {
    routes_[model] = std::move(backend);
}

std::shared_ptr<ChatBackend> Gateway::backend_for(const std::string& model) const {
    if (auto it = routes_.find(model); it != routes_.end()) return it->second;
    if (default_backend_) return default_backend_;
    throw ValidationError("no chat backend configured for model \"" + model + "\"");
}

Gateway::Stats Gateway::stats() const {
    return {backend_calls_.load(), cache_hits_.load(), failures_.load()};
}

void Gateway::pace() {
    if (options_.min_interval_ms <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(pace_mu_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + std::chrono::milliseconds(options_.min_interval_ms);
    }
    std::this_thread::sleep_until(slot);
}

std::string Gateway::call_backend(ChatBackend& backend, const ChatRequest& req) {
    return with_retries(options_.retry, [&] {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<4096>& s;
            ~Release() { s.release(); }
        } release{slots_};
        pace();
        ++backend_calls_;
        return backend.complete(req);
    });
}

std::optional<std::string> Gateway::read_disk_cache(const std::string& digest) const {
    if (!options_.cache_dir) return std::nullopt;
    const auto path = *options_.cache_dir / digest.substr(0, 2) / (digest + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        return json::parse(read_file(path)).at("text").get<std::string>();
    } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable cache entry {}: {}", path.string(), e.what());
        return std::nullopt;
    }
}

void Gateway::write_disk_cache(const std::string& digest, const ChatRequest& req, const std::string& text) const {
    if (!options_.cache_dir) return;
    const auto dir = *options_.cache_dir / digest.substr(0, 2);
    std::filesystem::create_directories(dir);
    const auto path = dir / (digest + ".json");
    const auto tmp = dir / (digest + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    write_file(tmp, json{{"model", req.model}, {"text", text}}.dump());
    std::filesystem::rename(tmp, path);
}

ChatResponse Gateway::complete(const ChatRequest& req) {
    if (trim(req.user).empty()) throw ValidationError("chat request has an empty user message");
    if (req.temperature < 0) throw ValidationError("chat request temperature must be >= 0");
    if (req.max_tokens <= 0) throw ValidationError("chat request max_tokens must be positive");

    const auto start = std::chrono::steady_clock::now();
    auto backend = backend_for(req.model);
    auto finish = [&](std::string text, bool cached) {
        ChatResponse r;
        r.text = std::move(text);
        r.backend_model = req.model;
        r.cached = cached;
        r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                           .count();
        if (cached) ++cache_hits_;
        return r;
    };

    if (!options_.cache_enabled) {
        try {
            return finish(call_backend(*backend, req), false);
        } catch (...) {
            ++failures_;
            throw;
        }
    }

    const std::string digest = request_digest(req);
    std::promise<std::string> promise;
    {
        std::unique_lock lock(mu_);
        if (auto it = memory_cache_.find(digest); it != memory_cache_.end()) return finish(it->second, true);
        if (auto it = in_flight_.find(digest); it != in_flight_.end()) {
            auto fut = it->second;
            lock.unlock();
            return finish(fut.get(), true);
        }
        in_flight_.emplace(digest, promise.get_future().share());
    }

    auto settle = [&](const std::string& text) {
        std::lock_guard lock(mu_);
        memory_cache_[digest] = text;
        in_flight_.erase(digest);
        promise.set_value(text);
    };

    if (auto hit = read_disk_cache(digest)) {
        settle(*hit);
        return finish(*hit, true);
    }
    try {
        std::string text = call_backend(*backend, req);
        write_disk_cache(digest, req, text);
        settle(text);
        return finish(std::move(text), false);
    } catch (...) {
        ++failures_;
        std::lock_guard lock(mu_);
        in_flight_.erase(digest);
        promise.set_exception(std::current_exception());
        throw;
    }
}

std::vector<ChatOutcome> Gateway::complete_many(std::span<const ChatRequest> reqs, std::size_t parallelism,
                                                bool fail_fast) {
    if (parallelism == 0) throw ValidationError("parallelism must be at least 1");
    std::vector<ChatOutcome> out(reqs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    std::optional<std::string> first_error;

    auto work = [&] {
        for (std::size_t i = next++; i < reqs.size(); i = next++) {
            if (stop) {
                out[i].error = "cancelled after an earlier failure";
                continue;
            }
            try {
                out[i].response = complete(reqs[i]);
            } catch (const std::exception& e) {
                out[i].error = e.what();
                if (fail_fast) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = e.what();
                    stop = true;
                }
            }
        }
    };
    const std::size_t n_threads = std::min(parallelism, reqs.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(work);
    if (n_threads > 0) work();
    for (auto& t : threads) t.join();

    if (fail_fast && first_error) throw BackendError(*first_error);
    return out;
}

}  // namespace intentrag
