#pragma once

// Reading prompts (base, reading-with-intent, with tags, over neutralised
// passages), neutralisation through the translator, and answer records.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/gateway.hpp"
#include "intentrag/integration.hpp"
#include "intentrag/intent.hpp"
#include "intentrag/translator.hpp"

namespace intentrag {

enum class PromptRegime {
    Base,
    Rwi,
    RwiTagsOracle,
    RwiTagsPredicted,
    RwiNeutralizedZeroshot,
    RwiNeutralizedTranslator,
};

std::string to_string(PromptRegime r);
PromptRegime parse_regime(std::string_view s);
/// All six, in reporting order.
const std::vector<PromptRegime>& all_regimes();

bool uses_tags(PromptRegime r);
bool uses_neutralization(PromptRegime r);

/// Editable prompt text. Loaded from JSON with keys matching the fields;
/// missing keys keep their defaults.
struct PromptTemplates {
    std::string base_instruction;
    std::string rwi_instruction;
    std::string tags_instruction;  // appended to the RwI block in tag regimes
    std::string passage_label = "Passage";
    std::string question_label = "Question";
    std::string answer_cue = "Answer:";

    static PromptTemplates defaults();
    static PromptTemplates from_json(const json& j);
    static PromptTemplates load(const std::filesystem::path& path);
    json to_json() const;
};

struct ReaderOptions {
    std::string model;
    Placement placement = Placement::After;
    double temperature = 0.0;
    int max_tokens = 64;
    PromptTemplates templates = PromptTemplates::defaults();
};

/// Pure function of its arguments. Tag regimes require every entry to carry
/// an intent tag (ValidationError otherwise); other regimes ignore tags.
ChatRequest assemble_prompt(const ReadingContext& context, std::string_view question, PromptRegime regime,
                            const ReaderOptions& options);

/// Attaches oracle tags derived from provenance to every entry.
ReadingContext with_oracle_tags(ReadingContext context);

struct NeutralizeStats {
    std::size_t translated = 0;
    std::size_t failed = 0;
};

/// Replaces each text by its neutral translation (source emotion unknown).
/// Order, cardinality and provenance are kept; tags are dropped and the
/// neutralized flag set. A failed passage keeps its text and is logged,
/// unless `fail_hard`, which rethrows.
ReadingContext neutralize_context(const ReadingContext& context, const Translator& translator, bool fail_hard = false,
                                  NeutralizeStats* stats = nullptr);

/// SHA-256 of the context's canonical JSON.
std::string context_fingerprint(const ReadingContext& context);

struct AnswerRecord {
    std::string qid;
    PromptRegime regime = PromptRegime::Base;
    std::string generation;
    bool correct = false;
    std::string fingerprint;
    Variant variant = Variant::Base;
    std::string model;
    std::optional<std::string> error;

    friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

/// One record per context, sorted by qid. Backend failures become records
/// with `error` set and correct = false.
std::vector<AnswerRecord> answer_all(std::span<const ReadingContext> contexts, const QuerySet& queries,
                                     PromptRegime regime, Gateway& gateway, const ReaderOptions& options,
                                     std::size_t parallelism = 1);

struct AccuracySummary {
    std::size_t answered = 0;
    std::size_t correct = 0;
    std::size_t errors = 0;
    std::optional<double> accuracy;  // none when nothing counted
};

/// Errored records count as wrong unless `exclude_errors`.
AccuracySummary summarize(std::span<const AnswerRecord> records, bool exclude_errors = false);

json to_json(const AnswerRecord& r);
AnswerRecord answer_record_from_json(const json& j);
void save_answers(const std::filesystem::path& path, std::span<const AnswerRecord> records);
std::vector<AnswerRecord> load_answers(const std::filesystem::path& path);

}  // namespace intentrag
