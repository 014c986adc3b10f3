#pragma once

// Dual-encoder embedding backends and an exact maximum-inner-product index.

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "intentrag/common.hpp"
#include "intentrag/corpus.hpp"
#include "intentrag/http.hpp"

namespace intentrag {

enum class EmbedRole { Query, Passage };

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Raised when some inputs of a batch could not be embedded.
class EmbeddingError : public BackendError {
public:
    EmbeddingError(const std::string& what, std::vector<std::size_t> failed)
        : BackendError(what), failed_(std::move(failed)) {}
    const std::vector<std::size_t>& failed_indices() const { return failed_; }

private:
    std::vector<std::size_t> failed_;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One vector per input, in input order. Throws ValidationError on an
    /// empty batch.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, EmbedRole role) = 0;
    virtual std::string name() const = 0;
};

/// Offline embedder: feature-hashes normalised tokens into `dim` buckets of
/// pseudo-random directions and unit-normalises the sum. Query and passage
/// roles share one encoder, so identical texts embed identically.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0);
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, EmbedRole role) override;
    std::string name() const override;
    EmbeddingVector embed(std::string_view text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Embeddings-API client: POST {"input":[...],"model":m} to <base>/embeddings.
/// Accepts {"data":[{"embedding":[...],"index":i}]} or a bare array of arrays.
class HttpEmbedder final : public Embedder {
public:
    struct Options {
        HttpEndpoint endpoint;
        std::string query_model;
        std::string passage_model;  // defaults to query_model when empty
        std::size_t batch_size = 64;
        RetryPolicy retry;
    };
    explicit HttpEmbedder(Options options);
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, EmbedRole role) override;
    std::string name() const override;

private:
    Options options_;
};

// ---------------------------------------------------------------------------

struct ScoredId {
    std::string pid;
    double score = 0.0;

    friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Scores non-increasing; equal scores ordered by ascending pid.
struct RankedList {
    std::string qid;
    std::vector<ScoredId> entries;

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Brute-force exact inner-product index. Vectors live in one contiguous
/// row-major buffer; the index is immutable once built.
class FlatIndex {
public:
    FlatIndex() = default;

    /// Throws ValidationError on an empty input, a dimension mismatch (naming
    /// the offending id), duplicate ids or non-finite values.
    static FlatIndex build(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors);
    static FlatIndex build(const std::map<std::string, EmbeddingVector>& vectors);

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    std::span<const std::string> ids() const { return ids_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    bool contains(const std::string& id) const;

    /// Exact top-min(k, size) by inner product. `workers` > 1 partitions the
    /// scan; the result is identical to the serial scan.
    RankedList retrieve(const EmbeddingVector& query, std::size_t k, std::size_t workers = 1) const;

    /// A new index with the extra rows appended; this index is untouched.
    FlatIndex with_rows(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors) const;

    void save(const std::filesystem::path& path) const;
    static FlatIndex load(const std::filesystem::path& path);

    friend bool operator==(const FlatIndex&, const FlatIndex&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> pos_;

    void append(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors);
};

/// Embeds `synthetic` with the passage encoder and returns the enlarged index.
/// Throws ValidationError when a synthetic id already exists in `index`.
FlatIndex inject(const FlatIndex& index, std::span<const SyntheticPassage> synthetic, Embedder& embedder);

/// Embeds every passage of `corpus` in batches and builds an index over it.
FlatIndex index_corpus(const Corpus& corpus, Embedder& embedder, std::size_t batch_size = 256);

/// Retrieves top-k for each query; queries are spread over `workers` threads.
std::vector<RankedList> retrieve_all(const FlatIndex& index, const QuerySet& queries, Embedder& embedder,
                                     std::size_t k, std::size_t workers = 1);

json to_json(const RankedList& ranking);
RankedList ranked_list_from_json(const json& j);
void save_rankings(const std::filesystem::path& path, std::span<const RankedList> rankings);
std::vector<RankedList> load_rankings(const std::filesystem::path& path);

}  // namespace intentrag
