#pragma once

// Intent-translator data preparation, inference and round-trip evaluation.
// Fine-tuning happens elsewhere; this module writes its training file and
// talks to the resulting model through the gateway.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/corpus.hpp"
#include "intentrag/gateway.hpp"

namespace intentrag {

/// The same content written in several emotions, neutral original included.
struct ParallelGroup {
    std::string source_id;
    std::map<Emotion, std::string> texts;
};

struct TranslationExample {
    std::string group_id;
    Emotion source;
    Emotion target;
    std::string prompt;
    std::string input;
    std::string output;

    bool self_mapping() const { return source == target; }
};

/// Instruction prefix naming the source emotion ("unknown" when nullopt) and
/// the target emotion.
std::string translation_prompt(const std::optional<Emotion>& source, const Emotion& target);

struct TrainingManifest {
    std::size_t examples = 0;
    std::size_t self_mappings = 0;
    std::size_t cross_mappings = 0;
    std::size_t groups = 0;
    std::size_t groups_without_cross = 0;
    double self_ratio = 0.0;
    std::uint64_t seed = 0;

    json to_json() const;
};

struct TrainingSet {
    std::vector<TranslationExample> examples;
    TrainingManifest manifest;
};

/// Draws `n_examples` with a seeded generator. Each draw is a self-mapping
/// with probability `self_ratio`; otherwise source and target differ. Within
/// each kind, draws are uniform over eligible (group, source, target) triples.
TrainingSet build_training_set(std::span<const ParallelGroup> groups, std::size_t n_examples, double self_ratio,
                               std::uint64_t seed);

/// One group per base passage that has synthetic non-fact-distorted variants;
/// the original passage is the neutral text.
std::vector<ParallelGroup> groups_from_corpus(const Corpus& corpus, const SyntheticSet& synthetic);

std::vector<ParallelGroup> load_groups(const std::filesystem::path& path);
void save_groups(const std::filesystem::path& path, std::span<const ParallelGroup> groups);
/// {"prompt","input","output","source_emotion","target_emotion"} per line.
std::string training_jsonl(std::span<const TranslationExample> examples);

struct TranslatorOptions {
    double temperature = 0.0;
    int max_tokens = 1024;
};

class Translator {
public:
    Translator(Gateway& gateway, std::string model, TranslatorOptions options = {});

    ChatRequest request(std::string_view text, const std::optional<Emotion>& source, const Emotion& target) const;
    std::string translate(std::string_view text, const std::optional<Emotion>& source, const Emotion& target) const;
    const std::string& model() const { return model_; }

private:
    Gateway& gateway_;
    std::string model_;
    TranslatorOptions options_;
};

/// Optional learned-metric scorer (e.g. a BLEURT service).
class ReferenceScorer {
public:
    virtual ~ReferenceScorer() = default;
    virtual std::vector<double> score(std::span<const std::string> references,
                                      std::span<const std::string> candidates) = 0;
};

/// POST {"references":[...],"candidates":[...]} -> {"scores":[...]}.
class HttpReferenceScorer final : public ReferenceScorer {
public:
    explicit HttpReferenceScorer(HttpEndpoint endpoint, std::string path = "", RetryPolicy retry = {});
    std::vector<double> score(std::span<const std::string> references, std::span<const std::string> candidates) override;

private:
    HttpEndpoint endpoint_;
    std::string path_;
    RetryPolicy retry_;
};

struct RoundTripSample {
    std::string text;
    Emotion emotion;
};

struct PivotPolicy {
    std::optional<Emotion> fixed;  // otherwise a seeded random pivot per sample
    std::uint64_t seed = 0;
    std::vector<Emotion> candidates;  // random pivots; canonical + neutral when empty

    Emotion pivot_for(const RoundTripSample& sample, std::size_t index) const;
};

struct RoundTripRow {
    std::string emotion;
    std::size_t n = 0;
    double bleu_mean = 0.0;
    std::size_t failures = 0;
    std::optional<double> bleurt_mean;

    json to_json() const;
};

struct RoundTripReport {
    std::string system;
    std::vector<RoundTripRow> rows;  // sorted by emotion
    RoundTripRow overall;            // emotion == "all"

    json to_json() const;
};

RoundTripReport round_trip_report_from_json(const json& j);

/// For each sample: label -> pivot -> label, then BLEU(original, back-translation).
/// Failed samples are counted per emotion and excluded from the means.
RoundTripReport round_trip_eval(std::span<const RoundTripSample> samples, const PivotPolicy& pivots,
                                const Translator& translator, ReferenceScorer* scorer = nullptr,
                                std::size_t parallelism = 1);

std::vector<RoundTripSample> load_round_trip_samples(const std::filesystem::path& path);

}  // namespace intentrag
