#pragma once

// Run configuration: one JSON file naming backends, models, seeds and
// stage options. String values may reference environment variables as
// ${NAME}; relative paths resolve against the config file's directory.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "intentrag/distortion.hpp"
#include "intentrag/gateway.hpp"
#include "intentrag/intent.hpp"
#include "intentrag/translator.hpp"
#include "intentrag/vectorstore.hpp"

namespace intentrag {

/// A chat, embedding, classifier or scorer backend.
/// type: echo | canned | scripted (chat mocks, read from `file`) | http.
struct EndpointConfig {
    std::string type;
    std::optional<std::filesystem::path> file;
    std::string base_url;
    std::string api_key;
    std::string path;  // request path for classifier / scorer endpoints
    int timeout_s = 120;

    HttpEndpoint http() const { return {base_url, api_key, timeout_s}; }
};

struct RunConfig {
    std::optional<std::uint64_t> seed;
    std::size_t parallelism = 4;
    std::optional<std::filesystem::path> cache_dir;
    RetryPolicy retry;
    std::size_t max_in_flight = 8;
    int min_interval_ms = 0;

    std::map<std::string, EndpointConfig> endpoints;
    std::map<std::string, std::string> model_routes;  // model name -> endpoint name
    std::string default_endpoint;

    struct Embedder {
        std::string type = "hash";  // hash | http
        std::size_t dim = 64;
        std::uint64_t seed = 0;
        std::string endpoint;
        std::string query_model;
        std::string passage_model;
        std::size_t batch_size = 64;
    } embedder;

    struct Tagger {
        std::string mode = "oracle";  // oracle | remote | lexical
        std::string endpoint;
        std::string fallback = "not_sarcastic";  // or "error"
        std::size_t batch_size = 32;
    } tagger;

    struct Distortion {
        std::vector<std::string> pool;
        std::optional<std::uint64_t> pool_seed;  // falls back to `seed`
        double temperature = 0.7;
        std::optional<std::filesystem::path> templates;
    } distortion;

    struct Reader {
        std::vector<std::string> models;
        std::string placement = "after";
        std::optional<std::filesystem::path> templates;
        int max_tokens = 64;
    } reader;

    struct TranslatorCfg {
        std::string finetuned_model;
        std::string zeroshot_model;
        std::string scorer_endpoint;
    } translator;

    std::filesystem::path base_dir;
    json raw;            // as written, before interpolation
    std::string digest;  // SHA-256 of the canonical raw JSON

    /// Throws ValidationError when a stochastic stage runs without a seed.
    std::uint64_t require_seed(std::string_view stage) const;
};

/// Replaces ${NAME} with the environment value; unset variables become
/// empty strings (with a warning). "$${" escapes a literal "${".
std::string interpolate_env(std::string_view text);

/// Throws ValidationError on malformed input or unknown endpoint references.
RunConfig parse_config(const json& raw, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Sets a dotted key (e.g. "reader.placement") in the raw JSON. Used for
/// command-line overrides so that they change the digest.
void set_config_value(json& raw, std::string_view dotted_key, json value);

std::shared_ptr<ChatBackend> make_chat_backend(const RunConfig& cfg, const std::string& endpoint_name);
std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg);
std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg);
std::shared_ptr<SarcasmClassifier> make_classifier(const RunConfig& cfg);
std::unique_ptr<ReferenceScorer> make_scorer(const RunConfig& cfg);

/// Sidecar written next to every stage output.
json stage_manifest(const RunConfig& cfg, std::string_view stage, const json& details);
void write_manifest(const std::filesystem::path& output, const json& manifest);

}  // namespace intentrag
