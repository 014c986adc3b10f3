#include "intentrag/config.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>

namespace intentrag {

std::string interpolate_env(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (text.compare(i, 3, "$${") == 0) {
            out += "${";
            i += 3;
            continue;
        }
        if (text.compare(i, 2, "${") == 0) {
            const auto close = text.find('}', i + 2);
            if (close == std::string_view::npos) throw ValidationError("unterminated ${ in config value");
            const std::string name(text.substr(i + 2, close - i - 2));
            if (const char* v = std::getenv(name.c_str())) {
                out += v;
            } else {
                spdlog::warn("environment variable {} is not set; using an empty string", name);
            }
            i = close + 1;
            continue;
        }
        out += text[i++];
    }
    return out;
}

namespace {

json interpolate_all(const json& j) {
    if (j.is_string()) return interpolate_env(j.get<std::string>());
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(interpolate_all(v));
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = interpolate_all(v);
        return out;
    }
    return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <typename T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

}  // namespace

std::uint64_t RunConfig::require_seed(std::string_view stage) const {
    if (!seed) throw ValidationError(std::string(stage) + " is stochastic and needs a seed (config \"seed\" or --seed)");
    return *seed;
}

RunConfig parse_config(const json& raw, const std::filesystem::path& base_dir) {
    if (!raw.is_object()) throw ValidationError("config must be a JSON object");
    RunConfig cfg;
    cfg.raw = raw;
    cfg.digest = sha256_hex(raw.dump());
    cfg.base_dir = base_dir;
    const json j = interpolate_all(raw);

    try {
        if (j.contains("seed") && !j.at("seed").is_null()) cfg.seed = j.at("seed").get<std::uint64_t>();
        take(j, "parallelism", cfg.parallelism);
        if (cfg.parallelism == 0) throw ValidationError("parallelism must be at least 1");
        if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) {
            cfg.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
        }
        take(j, "max_in_flight", cfg.max_in_flight);
        take(j, "min_interval_ms", cfg.min_interval_ms);
        if (j.contains("retry")) {
            const auto& r = j.at("retry");
            take(r, "max_retries", cfg.retry.max_retries);
            take(r, "base_backoff_ms", cfg.retry.base_backoff_ms);
            take(r, "max_backoff_ms", cfg.retry.max_backoff_ms);
        }

        if (j.contains("endpoints")) {
            for (const auto& [name, e] : j.at("endpoints").items()) {
                EndpointConfig ec;
                ec.type = e.at("type").get<std::string>();
                if (ec.type != "echo" && ec.type != "canned" && ec.type != "scripted" && ec.type != "http") {
                    throw ValidationError("endpoint " + name + ": unknown type \"" + ec.type + "\"");
                }
                if (e.contains("file")) ec.file = resolve(base_dir, e.at("file").get<std::string>());
                if ((ec.type == "canned" || ec.type == "scripted") && !ec.file) {
                    throw ValidationError("endpoint " + name + ": type " + ec.type + " needs a \"file\"");
                }
                take(e, "base_url", ec.base_url);
                take(e, "api_key", ec.api_key);
                take(e, "path", ec.path);
                take(e, "timeout_s", ec.timeout_s);
                if (ec.type == "http" && ec.base_url.empty()) {
                    throw ValidationError("endpoint " + name + ": http endpoints need a base_url");
                }
                cfg.endpoints[name] = std::move(ec);
            }
        }
        auto check_endpoint = [&](const std::string& name, const std::string& what) {
            if (!name.empty() && !cfg.endpoints.count(name)) {
                throw ValidationError(what + " refers to unknown endpoint \"" + name + "\"");
            }
        };
        take(j, "default_endpoint", cfg.default_endpoint);
        check_endpoint(cfg.default_endpoint, "default_endpoint");
        if (j.contains("models")) {
            for (const auto& [model, endpoint] : j.at("models").items()) {
                cfg.model_routes[model] = endpoint.get<std::string>();
                check_endpoint(cfg.model_routes[model], "model " + model);
            }
        }

        if (j.contains("embedder")) {
            const auto& e = j.at("embedder");
            take(e, "type", cfg.embedder.type);
            take(e, "dim", cfg.embedder.dim);
            take(e, "seed", cfg.embedder.seed);
            take(e, "endpoint", cfg.embedder.endpoint);
            take(e, "query_model", cfg.embedder.query_model);
            take(e, "passage_model", cfg.embedder.passage_model);
            take(e, "batch_size", cfg.embedder.batch_size);
            if (cfg.embedder.type != "hash" && cfg.embedder.type != "http") {
                throw ValidationError("embedder.type must be hash or http");
            }
            check_endpoint(cfg.embedder.endpoint, "embedder");
        }
        if (j.contains("tagger")) {
            const auto& t = j.at("tagger");
            take(t, "mode", cfg.tagger.mode);
            take(t, "endpoint", cfg.tagger.endpoint);
            take(t, "fallback", cfg.tagger.fallback);
            take(t, "batch_size", cfg.tagger.batch_size);
            check_endpoint(cfg.tagger.endpoint, "tagger");
        }
        if (j.contains("distortion")) {
            const auto& d = j.at("distortion");
            take(d, "pool", cfg.distortion.pool);
            if (d.contains("pool_seed") && !d.at("pool_seed").is_null()) {
                cfg.distortion.pool_seed = d.at("pool_seed").get<std::uint64_t>();
            }
            take(d, "temperature", cfg.distortion.temperature);
            if (d.contains("templates")) cfg.distortion.templates = resolve(base_dir, d.at("templates").get<std::string>());
        }
        if (j.contains("reader")) {
            const auto& r = j.at("reader");
            if (r.contains("model")) cfg.reader.models = {r.at("model").get<std::string>()};
            take(r, "models", cfg.reader.models);
            take(r, "placement", cfg.reader.placement);
            take(r, "max_tokens", cfg.reader.max_tokens);
            if (r.contains("templates")) cfg.reader.templates = resolve(base_dir, r.at("templates").get<std::string>());
            parse_placement(cfg.reader.placement);
        }
        if (j.contains("translator")) {
            const auto& t = j.at("translator");
            take(t, "finetuned_model", cfg.translator.finetuned_model);
            take(t, "zeroshot_model", cfg.translator.zeroshot_model);
            take(t, "scorer_endpoint", cfg.translator.scorer_endpoint);
            check_endpoint(cfg.translator.scorer_endpoint, "translator.scorer_endpoint");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    json raw;
    try {
        raw = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return parse_config(raw, path.parent_path());
}

void set_config_value(json& raw, std::string_view dotted_key, json value) {
    json* node = &raw;
    const auto parts = split(dotted_key, '.');
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) (*node)[parts[i]] = json::object();
        node = &(*node)[parts[i]];
    }
    (*node)[parts.back()] = std::move(value);
}

std::shared_ptr<ChatBackend> make_chat_backend(const RunConfig& cfg, const std::string& endpoint_name) {
    auto it = cfg.endpoints.find(endpoint_name);
    if (it == cfg.endpoints.end()) throw ValidationError("unknown endpoint \"" + endpoint_name + "\"");
    const auto& e = it->second;
    auto load_json = [&] {
        try {
            return json::parse(read_file(*e.file));
        } catch (const json::exception& ex) {
            throw ValidationError(e.file->string() + ": " + ex.what());
        }
    };
    if (e.type == "echo") return std::make_shared<EchoBackend>();
    if (e.type == "canned") return CannedMapBackend::from_json(load_json());
    if (e.type == "scripted") return ScriptedBackend::from_json(load_json());
    return std::make_shared<HttpChatBackend>(e.http());
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg) {
    Gateway::Options opts;
    opts.retry = cfg.retry;
    opts.cache_dir = cfg.cache_dir;
    opts.max_in_flight = cfg.max_in_flight;
    opts.min_interval_ms = cfg.min_interval_ms;
    auto gw = std::make_unique<Gateway>(opts);
    std::map<std::string, std::shared_ptr<ChatBackend>> built;
    auto backend = [&](const std::string& name) {
        auto& b = built[name];
        if (!b) b = make_chat_backend(cfg, name);
        return b;
    };
    if (!cfg.default_endpoint.empty()) gw->set_default_backend(backend(cfg.default_endpoint));
    for (const auto& [model, endpoint] : cfg.model_routes) gw->route(model, backend(endpoint));
    return gw;
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg) {
    if (cfg.embedder.type == "hash") return std::make_unique<HashEmbedder>(cfg.embedder.dim, cfg.embedder.seed);
    if (cfg.embedder.endpoint.empty()) throw ValidationError("embedder.type http needs embedder.endpoint");
    HttpEmbedder::Options o;
    o.endpoint = cfg.endpoints.at(cfg.embedder.endpoint).http();
    o.query_model = cfg.embedder.query_model;
    o.passage_model = cfg.embedder.passage_model;
    o.batch_size = cfg.embedder.batch_size;
    o.retry = cfg.retry;
    return std::make_unique<HttpEmbedder>(o);
}

std::shared_ptr<SarcasmClassifier> make_classifier(const RunConfig& cfg) {
    if (cfg.tagger.endpoint.empty()) throw ValidationError("remote tagging needs tagger.endpoint");
    const auto& e = cfg.endpoints.at(cfg.tagger.endpoint);
    if (e.type != "http") throw ValidationError("tagger.endpoint must be an http endpoint");
    return std::make_shared<HttpSarcasmClassifier>(e.http(), e.path, cfg.retry);
}

std::unique_ptr<ReferenceScorer> make_scorer(const RunConfig& cfg) {
    if (cfg.translator.scorer_endpoint.empty()) return nullptr;
    const auto& e = cfg.endpoints.at(cfg.translator.scorer_endpoint);
    if (e.type != "http") throw ValidationError("translator.scorer_endpoint must be an http endpoint");
    return std::make_unique<HttpReferenceScorer>(e.http(), e.path, cfg.retry);
}

json stage_manifest(const RunConfig& cfg, std::string_view stage, const json& details) {
    return json{{"stage", stage},
                {"tool_version", kToolVersion},
                {"config_digest", cfg.digest},
                {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
                {"details", details}};
}

void write_manifest(const std::filesystem::path& output, const json& manifest) {
    write_file(output.string() + ".manifest.json", manifest.dump(2) + "\n");
}

}  // namespace intentrag
