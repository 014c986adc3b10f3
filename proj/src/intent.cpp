#include "intentrag/intent.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>

namespace intentrag {

std::string to_string(Placement p) {
    return p == Placement::Before ? "before" : "after";
}

Placement parse_placement(std::string_view s) {
    if (s == "before") return Placement::Before;
    if (s == "after") return Placement::After;
    throw ValidationError("placement must be before or after, got \"" + std::string(s) + "\"");
}

IntentTag tag_oracle(const std::optional<Provenance>& provenance) {
    IntentTag tag;
    tag.source = IntentTag::Source::Oracle;
    tag.label = provenance && provenance->emotion.is_sarcasm() ? IntentTag::Label::Sarcastic
                                                               : IntentTag::Label::NotSarcastic;
    tag.confidence = 1.0;
    return tag;
}

IntentTag tag_lexical(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const char* kCues[] = {"oh,",       "oh sure",  "oh wow",      "yeah right", "sure,",    "of course",
                                  "obviously", "clearly",  "totally",     "wow",        "brilliant", "genius",
                                  "what a",    "who knew", "how shocking", "because everyone knows", "as if",
                                  "!?",        "?!",       "big surprise", "naturally"};
    int hits = 0;
    for (const char* cue : kCues) {
        for (auto pos = lower.find(cue); pos != std::string::npos; pos = lower.find(cue, pos + 1)) ++hits;
    }
    hits += static_cast<int>(std::count(lower.begin(), lower.end(), '!')) / 2;
    IntentTag tag;
    tag.source = IntentTag::Source::Lexical;
    tag.label = hits >= 2 ? IntentTag::Label::Sarcastic : IntentTag::Label::NotSarcastic;
    const double p = static_cast<double>(hits) / (hits + 1.0);
    tag.confidence = tag.sarcastic() ? p : 1.0 - p;
    return tag;
}

// ---------------------------------------------------------------------------

HttpSarcasmClassifier::HttpSarcasmClassifier(HttpEndpoint endpoint, std::string path, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), retry_(retry) {}

std::vector<ClassifierScore> HttpSarcasmClassifier::classify(std::span<const std::string> texts) {
    json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
    const json reply = with_retries(retry_, [&] { return post_json(endpoint_, path_, body); });
    const json& items = reply.is_object() && reply.contains("results") ? reply.at("results") : reply;
    if (!items.is_array() || items.size() != texts.size()) {
        throw BackendError("classifier returned " + std::to_string(items.is_array() ? items.size() : 0) +
                           " results for " + std::to_string(texts.size()) + " texts");
    }
    std::vector<ClassifierScore> out;
    for (const auto& item : items) {
        std::string label = item.at("label").get<std::string>();
        std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        ClassifierScore s;
        if (label == "sarcastic" || label == "label_1" || label == "sarcasm") {
            s.sarcastic = true;
        } else if (label == "not_sarcastic" || label == "not sarcastic" || label == "label_0" || label == "neutral") {
            s.sarcastic = false;
        } else {
            throw BackendError("classifier returned unknown label \"" + label + "\"");
        }
        s.score = item.value("score", 0.0);
        out.push_back(s);
    }
    return out;
}

RemoteTagger::RemoteTagger(std::shared_ptr<SarcasmClassifier> classifier, FallbackPolicy fallback,
                           std::size_t batch_size)
    : classifier_(std::move(classifier)), fallback_(fallback), batch_size_(std::max<std::size_t>(1, batch_size)) {}

IntentTag RemoteTagger::tag(std::string_view text) {
    const std::string t(text);
    return tag_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<IntentTag> RemoteTagger::tag_batch(std::span<const std::string> texts) {
    std::vector<IntentTag> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        try {
            const auto scores = classifier_->classify(batch);
            for (const auto& s : scores) {
                out.push_back({s.sarcastic ? IntentTag::Label::Sarcastic : IntentTag::Label::NotSarcastic,
                               IntentTag::Source::Remote, s.score});
            }
        } catch (const BackendError& e) {
            if (fallback_ == FallbackPolicy::Error) throw;
            spdlog::warn("intent classifier failed ({}); tagging {} passages not_sarcastic", e.what(), batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                out.push_back({IntentTag::Label::NotSarcastic, IntentTag::Source::Remote, std::nullopt});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kSarcasticMarker = "[Intent: sarcastic]";
constexpr std::string_view kNotSarcasticMarker = "[Intent: not sarcastic]";
}  // namespace

std::string tag_marker(const IntentTag& tag) {
    return std::string(tag.sarcastic() ? kSarcasticMarker : kNotSarcasticMarker);
}

std::string render_tag(std::string_view text, const IntentTag& tag, Placement placement) {
    const std::string marker = tag_marker(tag);
    if (placement == Placement::After) return std::string(text) + "\n" + marker;
    return marker + "\n" + std::string(text);
}

std::optional<std::pair<std::string, IntentTag::Label>> strip_tag(std::string_view rendered, Placement placement) {
    for (auto [marker, label] : {std::pair{kSarcasticMarker, IntentTag::Label::Sarcastic},
                                 std::pair{kNotSarcasticMarker, IntentTag::Label::NotSarcastic}}) {
        const std::string with_nl = placement == Placement::After ? "\n" + std::string(marker) : std::string(marker) + "\n";
        if (rendered.size() < with_nl.size()) continue;
        if (placement == Placement::After && rendered.substr(rendered.size() - with_nl.size()) == with_nl) {
            return std::pair{std::string(rendered.substr(0, rendered.size() - with_nl.size())), label};
        }
        if (placement == Placement::Before && rendered.substr(0, with_nl.size()) == with_nl) {
            return std::pair{std::string(rendered.substr(with_nl.size())), label};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

ClassifierTable evaluate_classifier(std::span<const ClassifierSample> samples) {
    ClassifierTable t;
    for (const auto& s : samples) {
        auto& cell = t.cells[s.sarcastic ? 0 : 1][s.fact_distorted ? 0 : 1];
        const bool hit = s.predicted_sarcastic == s.sarcastic;
        ++cell.total;
        ++t.overall.total;
        if (hit) {
            ++cell.correct;
            ++t.overall.correct;
        }
    }
    return t;
}

json ClassifierTable::to_json() const {
    auto cell_json = [](const ClassifierCell& c) {
        json j{{"correct", c.correct}, {"total", c.total}};
        j["accuracy"] = c.accuracy() ? json(*c.accuracy()) : json(nullptr);
        return j;
    };
    return json{{"sarcastic_fact_distorted", cell_json(cells[0][0])},
                {"sarcastic_no_distortion", cell_json(cells[0][1])},
                {"not_sarcastic_fact_distorted", cell_json(cells[1][0])},
                {"not_sarcastic_no_distortion", cell_json(cells[1][1])},
                {"overall", cell_json(overall)}};
}

std::vector<ClassifierSample> classifier_samples(std::span<const ReadingContext> contexts) {
    std::vector<ClassifierSample> out;
    for (const auto& c : contexts) {
        for (const auto& e : c.entries) {
            if (!e.intent_tag) continue;
            ClassifierSample s;
            s.sarcastic = e.provenance && e.provenance->emotion.is_sarcasm();
            s.fact_distorted = e.provenance && e.provenance->fact_distorted;
            s.predicted_sarcastic = e.intent_tag->sarcastic();
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace intentrag
