#pragma once

// Corpus records, JSONL persistence and the answer-containment oracle.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "intentrag/common.hpp"

namespace intentrag {

/// Emotion or linguistic-trope label. Eleven canonical labels plus neutral;
/// any other nonempty lowercase name is accepted as an open extension
/// (e.g. "relief" from human-written evaluation sets).
class Emotion {
public:
    Emotion() : name_("neutral") {}

    /// Parses and canonicalises a label. Accepts common adjective forms
    /// ("sarcastic", "happy", "sad"). Throws ValidationError on empty input.
    static Emotion parse(std::string_view text);

    static Emotion neutral() { return Emotion(); }
    static Emotion sarcasm() { return parse("sarcasm"); }

    /// The eleven transformation targets, alphabetical.
    static const std::vector<Emotion>& canonical();

    const std::string& name() const { return name_; }
    bool is_canonical() const;
    bool is_neutral() const { return name_ == "neutral"; }
    bool is_sarcasm() const { return name_ == "sarcasm"; }

    friend bool operator==(const Emotion&, const Emotion&) = default;
    friend auto operator<=>(const Emotion& a, const Emotion& b) { return a.name_ <=> b.name_; }

private:
    explicit Emotion(std::string name) : name_(std::move(name)) {}
    std::string name_;
};

struct Passage {
    std::string id;
    std::optional<std::string> title;
    std::string text;

    friend bool operator==(const Passage&, const Passage&) = default;
};

struct Query {
    std::string qid;
    std::string question;
    std::vector<std::string> answers;

    friend bool operator==(const Query&, const Query&) = default;
};

struct Provenance {
    std::string source_id;
    Emotion emotion;
    std::string generator_model;
    bool fact_distorted = false;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct SyntheticPassage {
    std::string id;
    Provenance provenance;
    std::string text;

    friend bool operator==(const SyntheticPassage&, const SyntheticPassage&) = default;
};

/// Deterministic synthetic id: "<source>#<emotion>" with a "#fd" suffix for
/// fact-distorted records.
std::string synthetic_id(std::string_view source_id, const Emotion& emotion, bool fact_distorted);

json to_json(const Provenance& p);
Provenance provenance_from_json(const json& j);

// ---------------------------------------------------------------------------
// Record collections. Immutable once constructed.

class Corpus {
public:
    Corpus() = default;
    /// Throws ValidationError on duplicate ids or empty text.
    explicit Corpus(std::vector<Passage> passages);

    std::size_t size() const { return passages_.size(); }
    bool empty() const { return passages_.empty(); }
    std::span<const Passage> passages() const { return passages_; }
    const Passage* find(std::string_view id) const;
    const Passage& at(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

class QuerySet {
public:
    QuerySet() = default;
    explicit QuerySet(std::vector<Query> queries);

    std::size_t size() const { return queries_.size(); }
    std::span<const Query> queries() const { return queries_; }
    const Query* find(std::string_view qid) const;
    const Query& at(std::string_view qid) const;

private:
    std::vector<Query> queries_;
    std::unordered_map<std::string, std::size_t> by_qid_;
};

class SyntheticSet {
public:
    SyntheticSet() = default;
    explicit SyntheticSet(std::vector<SyntheticPassage> records);

    std::size_t size() const { return records_.size(); }
    std::span<const SyntheticPassage> records() const { return records_; }
    const SyntheticPassage* find(std::string_view id) const;
    /// Lookup by (source, emotion, fact-distortion flag).
    const SyntheticPassage* counterpart(std::string_view source_id, const Emotion& emotion,
                                        bool fact_distorted) const;

private:
    std::vector<SyntheticPassage> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// JSONL persistence

template <typename T>
struct Loaded {
    T value;
    std::vector<std::string> warnings;
};

/// Streams a JSONL file, calling `fn(record, line_number)` for each nonblank
/// line. Malformed JSON raises ValidationError citing the line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

Loaded<Corpus> load_corpus(const std::filesystem::path& path);
Loaded<QuerySet> load_queries(const std::filesystem::path& path);
/// When `base` is given every record's source_id must resolve in it and no
/// synthetic id may collide with a base id.
Loaded<SyntheticSet> load_synthetic(const std::filesystem::path& path, const Corpus* base = nullptr);

std::string to_jsonl(const Corpus& corpus);
std::string to_jsonl(const QuerySet& queries);
std::string to_jsonl(std::span<const SyntheticPassage> records);

void save_corpus(const std::filesystem::path& path, const Corpus& corpus);
void save_queries(const std::filesystem::path& path, const QuerySet& queries);
void save_synthetic(const std::filesystem::path& path, std::span<const SyntheticPassage> records);

// ---------------------------------------------------------------------------
// Answer matching

/// Lowercases ASCII letters, turns ASCII punctuation into spaces and collapses
/// whitespace. Leading articles ("a", "an", "the") are dropped when
/// `strip_leading_articles` is set, unless that would leave nothing.
std::string normalize(std::string_view text, bool strip_leading_articles = true);

/// True iff some gold answer, normalised with article stripping, occurs as a
/// contiguous token run inside the normalised passage (articles kept).
bool is_correct(std::string_view passage_text, std::span<const std::string> answers);

/// The gold answers that `passage_text` contains.
std::vector<std::string> matching_answers(std::string_view passage_text,
                                          std::span<const std::string> answers);

}  // namespace intentrag
