#pragma once

// Emotion transformation of passages, including the two-step
// fact-distortion -> sarcasm pipeline.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/corpus.hpp"
#include "intentrag/gateway.hpp"

namespace intentrag {

/// Built-in prompt registry text (see PromptRegistry::parse for the format).
const char* default_emotion_prompts();

struct EmotionPrompt {
    Emotion emotion;
    std::string text;          // contains the "{passage}" slot
    bool placeholder = false;  // no authoritative prompt exists yet

    std::string render(std::string_view passage) const;
};

/// Editable emotion -> template table.
///
/// Text format: a header line "[emotion]" (or "[emotion placeholder]") opens
/// a section whose body, up to the next header, is the template. Lines
/// starting with '#' outside a section are comments. Bodies are trimmed and
/// must contain "{passage}".
class PromptRegistry {
public:
    static PromptRegistry defaults();
    static PromptRegistry parse(std::string_view text);
    static PromptRegistry load(const std::filesystem::path& path);
    std::string serialize() const;

    void set(EmotionPrompt prompt);
    const EmotionPrompt* find(const Emotion& emotion) const;
    std::vector<Emotion> emotions() const;

private:
    std::map<Emotion, EmotionPrompt> prompts_;
};

/// Deterministic passage -> generator-model assignment.
class ModelPool {
public:
    ModelPool(std::vector<std::string> models, std::uint64_t seed);

    /// Depends only on (seed, passage id), so partial reruns are stable.
    const std::string& assign(std::string_view passage_id) const;
    std::span<const std::string> models() const { return models_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::vector<std::string> models_;
    std::uint64_t seed_;
};

/// Removes a leading "Here is the rewritten passage:"-style line block: when
/// the first line looks like meta commentary, everything before the first
/// blank line is dropped. Returns the cleaned text and whether it fired.
std::pair<std::string, bool> strip_preamble(std::string_view text);

struct DistortionOptions {
    double temperature = 0.7;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed;
};

struct DistortionFailure {
    std::string source_id;
    Emotion emotion;
    bool fact_distorted = false;
    std::string error;
};

struct DistortionManifest {
    std::size_t requested = 0;
    std::size_t produced = 0;
    std::size_t preambles_stripped = 0;
    std::map<std::string, std::size_t> per_model;
    std::map<std::string, std::size_t> per_emotion;
    std::size_t fact_distorted = 0;
    std::vector<DistortionFailure> failures;

    json to_json() const;
};

struct DistortionResult {
    std::vector<SyntheticPassage> records;
    DistortionManifest manifest;
};

class Distorter {
public:
    Distorter(Gateway& gateway, PromptRegistry registry, ModelPool pool, DistortionOptions options = {});

    ChatRequest transform_request(std::string_view passage_text, const Emotion& emotion,
                                  const std::string& model) const;
    /// The alteration instruction names each contained gold answer verbatim;
    /// passages that contain none get the generic instruction only.
    ChatRequest distortion_request(std::string_view passage_text, std::span<const std::string> answers,
                                   const std::string& model) const;

    /// Rewrites `passage` in `emotion`. Throws ValidationError for an emotion
    /// without a template and BackendError when the model stays silent.
    SyntheticPassage transform(const Passage& passage, const Emotion& emotion) const;

    /// First step of the two-step pipeline; returns the distorted text.
    std::string distort_facts(const Passage& passage, std::span<const std::string> answers) const;

    /// distort_facts followed by the sarcasm transform of its output.
    SyntheticPassage make_fact_distorted_sarcastic(const Passage& passage, std::span<const std::string> answers) const;

    /// |emotions| x |corpus| transforms plus, for every passage in
    /// `fact_distortion_answers`, one fact-distorted sarcastic record. Failures
    /// are listed in the manifest, never dropped silently. Output order is
    /// corpus order, then emotion order, then the fact-distorted record.
    DistortionResult transform_corpus(const Corpus& corpus, std::span<const Emotion> emotions,
                                      const std::map<std::string, std::vector<std::string>>* fact_distortion_answers,
                                      std::size_t parallelism) const;

    const ModelPool& pool() const { return pool_; }
    const PromptRegistry& registry() const { return registry_; }

private:
    std::string run(ChatRequest req, bool* stripped) const;

    Gateway& gateway_;
    PromptRegistry registry_;
    ModelPool pool_;
    DistortionOptions options_;
};

}  // namespace intentrag
