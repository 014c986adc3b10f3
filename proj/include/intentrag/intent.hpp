#pragma once

// Intent tags: oracle (from provenance), remote classifier and a lexical
// baseline, plus rendering of the tag marker next to a passage.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/http.hpp"
#include "intentrag/integration.hpp"

namespace intentrag {

enum class Placement { Before, After };

std::string to_string(Placement p);
Placement parse_placement(std::string_view s);

/// Sarcastic iff the provenance says the passage was written with sarcasm.
IntentTag tag_oracle(const std::optional<Provenance>& provenance);
inline IntentTag tag_oracle(const ContextEntry& entry) { return tag_oracle(entry.provenance); }

/// Interjection and punctuation heuristics. Exists to exercise the
/// non-oracle path offline; it makes no accuracy claim.
IntentTag tag_lexical(std::string_view text);

struct ClassifierScore {
    bool sarcastic = false;
    double score = 0.0;
};

class SarcasmClassifier {
public:
    virtual ~SarcasmClassifier() = default;
    /// One score per input, in order. Throws BackendError on failure.
    virtual std::vector<ClassifierScore> classify(std::span<const std::string> texts) = 0;
};

/// POST {"texts":[...]} -> [{"label","score"}]. Labels "sarcastic" and
/// "not_sarcastic" (also "not sarcastic", "LABEL_1"/"LABEL_0") are accepted.
class HttpSarcasmClassifier final : public SarcasmClassifier {
public:
    HttpSarcasmClassifier(HttpEndpoint endpoint, std::string path = "", RetryPolicy retry = {});
    std::vector<ClassifierScore> classify(std::span<const std::string> texts) override;

private:
    HttpEndpoint endpoint_;
    std::string path_;
    RetryPolicy retry_;
};

enum class FallbackPolicy { Error, NotSarcastic };

class RemoteTagger {
public:
    RemoteTagger(std::shared_ptr<SarcasmClassifier> classifier, FallbackPolicy fallback, std::size_t batch_size = 32);

    IntentTag tag(std::string_view text);
    /// Batched; on failure under NotSarcastic every tag in the failed batch
    /// is not_sarcastic with no confidence.
    std::vector<IntentTag> tag_batch(std::span<const std::string> texts);

private:
    std::shared_ptr<SarcasmClassifier> classifier_;
    FallbackPolicy fallback_;
    std::size_t batch_size_;
};

/// "[Intent: sarcastic]" or "[Intent: not sarcastic]".
std::string tag_marker(const IntentTag& tag);

/// Places the marker on its own line before or after the text.
std::string render_tag(std::string_view text, const IntentTag& tag, Placement placement);

/// Inverse of render_tag: the original text and the recovered tag label, or
/// nullopt if no marker sits at the expected end.
std::optional<std::pair<std::string, IntentTag::Label>> strip_tag(std::string_view rendered, Placement placement);

// ---------------------------------------------------------------------------
// Classifier evaluation in the (sarcastic?) x (fact distorted?) layout.

struct ClassifierSample {
    bool sarcastic = false;
    bool fact_distorted = false;
    bool predicted_sarcastic = false;
};

struct ClassifierCell {
    std::size_t correct = 0;
    std::size_t total = 0;
    std::optional<double> accuracy() const {
        return total ? std::optional<double>(static_cast<double>(correct) / static_cast<double>(total)) : std::nullopt;
    }
};

struct ClassifierTable {
    // cells[sarcastic ? 0 : 1][fact_distorted ? 0 : 1]
    ClassifierCell cells[2][2];
    ClassifierCell overall;

    json to_json() const;
};

ClassifierTable evaluate_classifier(std::span<const ClassifierSample> samples);

/// Ground truth from provenance, prediction from the entry's intent tag.
/// Entries without a tag are skipped.
std::vector<ClassifierSample> classifier_samples(std::span<const ReadingContext> contexts);

}  // namespace intentrag
