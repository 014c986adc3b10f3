#pragma once

// Builds the reading contexts for the four experimental corpora: the base
// retrieval, fully sarcastic (FS), manually placed partial sarcasm (PS-M,
// pre-fix and post-fix) and automatic injection into the index (PS-A).

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/corpus.hpp"
#include "intentrag/vectorstore.hpp"

namespace intentrag {

enum class Variant { Base, FS, PsmPre, PsmPost, PSA };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

struct IntentTag {
    enum class Label { Sarcastic, NotSarcastic };
    enum class Source { Oracle, Remote, Lexical };

    Label label = Label::NotSarcastic;
    Source source = Source::Oracle;
    std::optional<double> confidence;

    bool sarcastic() const { return label == Label::Sarcastic; }
    friend bool operator==(const IntentTag&, const IntentTag&) = default;
};

json to_json(const IntentTag& tag);
IntentTag intent_tag_from_json(const json& j);

struct ContextEntry {
    std::string pid;
    std::string text;
    std::size_t position = 0;
    std::optional<Provenance> provenance;
    std::optional<IntentTag> intent_tag;
    bool neutralized = false;

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

/// Ordered passages shown to the reader for one query. At most 12 entries;
/// positions are 0-based and contiguous.
struct ReadingContext {
    std::string qid;
    Variant variant = Variant::Base;
    std::vector<ContextEntry> entries;

    friend bool operator==(const ReadingContext&, const ReadingContext&) = default;
};

inline constexpr std::size_t kReadingDepth = 10;
inline constexpr std::size_t kConstructionDepth = 200;

/// Top-`k` of each ranking with texts resolved from `corpus`.
std::vector<ReadingContext> build_base(std::span<const RankedList> rankings, const Corpus& corpus,
                                       std::size_t k = kReadingDepth);

/// Replaces every entry by its factually correct sarcastic counterpart, in
/// place. Throws ValidationError listing every pid that lacks one.
std::vector<ReadingContext> build_fs(std::span<const ReadingContext> base, const SyntheticSet& synthetic);

struct PsmOptions {
    bool prefix = true;  // fact-distorted passage before (true) or after its pair
    std::uint64_t seed = 0;
    double replace_probability = 0.2;
    std::size_t paired_correct = 2;
    bool truncate_to_reading_depth = false;
};

struct PsmStats {
    std::size_t incorrect_seen = 0;
    std::size_t replaced = 0;
    std::size_t inserted = 0;
};

/// Whether the incorrect passage `pid` of query `qid` is swapped for its
/// sarcastic version. A pure function of (seed, qid, pid).
bool psm_replaces(std::uint64_t seed, std::string_view qid, std::string_view pid, double probability);

/// Each incorrect passage is independently replaced by its sarcastic version
/// with `replace_probability`; the first `paired_correct` correct passages
/// each gain an adjacent fact-distorted sarcastic counterpart.
std::vector<ReadingContext> build_psm(std::span<const ReadingContext> base, const SyntheticSet& synthetic,
                                      const QuerySet& queries, const PsmOptions& options,
                                      PsmStats* stats = nullptr);

struct PsaResult {
    std::vector<ReadingContext> contexts;
    std::vector<RankedList> rankings;  // over the injected index
    std::size_t index_size = 0;
    std::size_t injected = 0;
};

/// Injects `inject_set` into `index` with the passage encoder and re-retrieves
/// every query. Entries drawn from the synthetic set carry provenance.
PsaResult build_psa(const FlatIndex& index, std::span<const SyntheticPassage> inject_set, const QuerySet& queries,
                    Embedder& embedder, const Corpus& corpus, std::size_t k = kReadingDepth,
                    std::size_t workers = 1);

/// Records selected for PS-A injection: fact-distorted sarcastic passages,
/// plus factually correct sarcastic ones when requested.
std::vector<SyntheticPassage> psa_injection_set(const SyntheticSet& synthetic, bool include_correct_sarcastic);

json to_json(const ContextEntry& e);
json to_json(const ReadingContext& c);
ReadingContext reading_context_from_json(const json& j);

/// Writes contexts sorted by qid, one per line.
void save_contexts(const std::filesystem::path& path, std::vector<ReadingContext> contexts);
std::vector<ReadingContext> load_contexts(const std::filesystem::path& path);

}  // namespace intentrag
