#include "intentrag/vectorstore.hpp"

#include <cmath>
#include <sstream>

namespace intentrag {

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::string HashEmbedder::name() const {
    return "hash-" + std::to_string(dim_) + "-" + std::to_string(seed_);
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
    std::vector<std::string> tokens;
    {
        std::istringstream ss(normalize(text, false));
        std::string tok;
        while (ss >> tok) tokens.push_back(std::move(tok));
    }
    if (tokens.empty()) tokens.emplace_back(text);

    std::vector<double> acc(dim_, 0.0);
    for (const auto& tok : tokens) {
        const std::uint64_t h = keyed_hash(seed_, {tok});
        for (std::size_t j = 0; j < dim_; ++j) {
            acc[j] += 2.0 * unit_interval(splitmix64(h + j)) - 1.0;
        }
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);

    EmbeddingVector out;
    out.values.resize(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        out.values[j] = static_cast<float>(norm > 0 ? acc[j] / norm : 0.0);
    }
    return out;
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(std::span<const std::string> texts, EmbedRole) {
    if (texts.empty()) throw ValidationError("embed_batch called with an empty batch");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

// ---------------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(Options options) : options_(std::move(options)) {
    if (options_.passage_model.empty()) options_.passage_model = options_.query_model;
    if (options_.batch_size == 0) options_.batch_size = 1;
}

std::string HttpEmbedder::name() const {
    return "http:" + options_.query_model + "/" + options_.passage_model;
}

namespace {

std::vector<EmbeddingVector> parse_embeddings(const json& reply, std::size_t expected) {
    std::vector<EmbeddingVector> out(expected);
    std::vector<bool> seen(expected, false);
    auto take = [&](const json& arr, std::size_t idx) {
        if (idx >= expected) throw BackendError("embedding index out of range");
        out[idx].values = arr.get<std::vector<float>>();
        seen[idx] = true;
    };
    if (reply.is_object() && reply.contains("data")) {
        std::size_t pos = 0;
        for (const auto& item : reply.at("data")) {
            take(item.at("embedding"), item.value("index", pos));
            ++pos;
        }
    } else if (reply.is_array()) {
        for (std::size_t i = 0; i < reply.size(); ++i) take(reply[i], i);
    } else {
        throw BackendError("embedding reply has neither \"data\" nor an array body");
    }
    for (std::size_t i = 0; i < expected; ++i) {
        if (!seen[i]) throw BackendError("embedding reply is missing input " + std::to_string(i));
    }
    return out;
}

}  // namespace

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(std::span<const std::string> texts, EmbedRole role) {
    if (texts.empty()) throw ValidationError("embed_batch called with an empty batch");
    const std::string& model = role == EmbedRole::Query ? options_.query_model : options_.passage_model;

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::vector<std::size_t> failed;
    std::string last_error;
    for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
        const std::size_t end = std::min(texts.size(), start + options_.batch_size);
        json body{{"model", model},
                  {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                     texts.begin() + static_cast<std::ptrdiff_t>(end))}};
        try {
            auto vecs = with_retries(options_.retry, [&] {
                return parse_embeddings(post_json(options_.endpoint, "/embeddings", body), end - start);
            });
            for (auto& v : vecs) out.push_back(std::move(v));
        } catch (const BackendError& e) {
            last_error = e.what();
            for (std::size_t i = start; i < end; ++i) failed.push_back(i);
        }
    }
    if (!failed.empty()) {
        throw EmbeddingError("embedding failed for " + std::to_string(failed.size()) + " of " +
                                 std::to_string(texts.size()) + " inputs: " + last_error,
                             std::move(failed));
    }
    for (const auto& v : out) {
        if (v.dim() != out.front().dim() || v.dim() == 0) {
            throw BackendError("embedding backend returned vectors of differing dimension");
        }
    }
    return out;
}

}  // namespace intentrag
