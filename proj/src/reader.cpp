#include "intentrag/reader.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace intentrag {

namespace {

struct RegimeName {
    PromptRegime regime;
    const char* name;
};

constexpr RegimeName kRegimes[] = {
    {PromptRegime::Base, "base"},
    {PromptRegime::Rwi, "rwi"},
    {PromptRegime::RwiTagsOracle, "rwi_tags_oracle"},
    {PromptRegime::RwiTagsPredicted, "rwi_tags_predicted"},
    {PromptRegime::RwiNeutralizedZeroshot, "rwi_neutralized_zeroshot"},
    {PromptRegime::RwiNeutralizedTranslator, "rwi_neutralized_translator"},
};

}  // namespace

std::string to_string(PromptRegime r) {
    for (const auto& [regime, name] : kRegimes) {
        if (regime == r) return name;
    }
    return "unknown";
}

PromptRegime parse_regime(std::string_view s) {
    for (const auto& [regime, name] : kRegimes) {
        if (s == name) return regime;
    }
    throw ValidationError("unknown prompt regime \"" + std::string(s) + "\"");
}

const std::vector<PromptRegime>& all_regimes() {
    static const std::vector<PromptRegime> all = [] {
        std::vector<PromptRegime> v;
        for (const auto& r : kRegimes) v.push_back(r.regime);
        return v;
    }();
    return all;
}

bool uses_tags(PromptRegime r) {
    return r == PromptRegime::RwiTagsOracle || r == PromptRegime::RwiTagsPredicted;
}

bool uses_neutralization(PromptRegime r) {
    return r == PromptRegime::RwiNeutralizedZeroshot || r == PromptRegime::RwiNeutralizedTranslator;
}

// ---------------------------------------------------------------------------

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.base_instruction =
        "Answer the question using the passages below. Reply with a short answer only.";
    t.rwi_instruction =
        "Answer the question using the passages below. Read each passage for its intent and connotation, "
        "not only its literal wording. A passage may be sarcastic, in which case it can mean the opposite "
        "of what it says, and some passages may contain false statements. Weigh the passages against each "
        "other before answering. Reply with a short answer only.";
    t.tags_instruction =
        "Each passage carries an intent tag stating whether it was judged sarcastic. Use the tag when "
        "interpreting that passage.";
    return t;
}

PromptTemplates PromptTemplates::from_json(const json& j) {
    PromptTemplates t = defaults();
    auto take = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    take("base_instruction", t.base_instruction);
    take("rwi_instruction", t.rwi_instruction);
    take("tags_instruction", t.tags_instruction);
    take("passage_label", t.passage_label);
    take("question_label", t.question_label);
    take("answer_cue", t.answer_cue);
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
    try {
        return from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

json PromptTemplates::to_json() const {
    return json{{"base_instruction", base_instruction}, {"rwi_instruction", rwi_instruction},
                {"tags_instruction", tags_instruction}, {"passage_label", passage_label},
                {"question_label", question_label},     {"answer_cue", answer_cue}};
}

ChatRequest assemble_prompt(const ReadingContext& context, std::string_view question, PromptRegime regime,
                            const ReaderOptions& options) {
    const auto& t = options.templates;
    const bool tags = uses_tags(regime);

    ChatRequest req;
    req.model = options.model;
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    if (regime == PromptRegime::Base) {
        req.system = t.base_instruction;
    } else {
        req.system = tags ? t.rwi_instruction + "\n" + t.tags_instruction : t.rwi_instruction;
    }

    std::string user;
    for (std::size_t i = 0; i < context.entries.size(); ++i) {
        const auto& e = context.entries[i];
        std::string body = e.text;
        if (tags) {
            if (!e.intent_tag) {
                throw ValidationError("regime " + to_string(regime) + " needs intent tags but passage " + e.pid +
                                      " of query " + context.qid + " has none");
            }
            body = render_tag(body, *e.intent_tag, options.placement);
        }
        user += t.passage_label + " " + std::to_string(i + 1) + ":\n" + body + "\n\n";
    }
    user += t.question_label + ": " + std::string(question) + "\n" + t.answer_cue;
    req.user = std::move(user);
    return req;
}

ReadingContext with_oracle_tags(ReadingContext context) {
    for (auto& e : context.entries) e.intent_tag = tag_oracle(e);
    return context;
}

ReadingContext neutralize_context(const ReadingContext& context, const Translator& translator, bool fail_hard,
                                  NeutralizeStats* stats) {
    ReadingContext out = context;
    for (auto& e : out.entries) {
        e.intent_tag.reset();
        e.neutralized = true;
        try {
            e.text = translator.translate(e.text, std::nullopt, Emotion::neutral());
            if (stats) ++stats->translated;
        } catch (const Error& err) {
            if (fail_hard) throw;
            spdlog::warn("neutralisation failed for {} in query {}, keeping original text: {}", e.pid, context.qid,
                         err.what());
            if (stats) ++stats->failed;
        }
    }
    return out;
}

std::string context_fingerprint(const ReadingContext& context) {
    return sha256_hex(to_json(context).dump());
}

std::vector<AnswerRecord> answer_all(std::span<const ReadingContext> contexts, const QuerySet& queries,
                                     PromptRegime regime, Gateway& gateway, const ReaderOptions& options,
                                     std::size_t parallelism) {
    std::vector<const ReadingContext*> ordered;
    for (const auto& c : contexts) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->qid < b->qid; });

    std::vector<ChatRequest> reqs;
    std::vector<const Query*> qs;
    for (const auto* c : ordered) {
        const Query* q = queries.find(c->qid);
        if (!q) throw ValidationError("context for unknown query " + c->qid);
        qs.push_back(q);
        reqs.push_back(assemble_prompt(*c, q->question, regime, options));
    }

    const auto outcomes = gateway.complete_many(reqs, parallelism);
    std::vector<AnswerRecord> out;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        AnswerRecord r;
        r.qid = ordered[i]->qid;
        r.regime = regime;
        r.variant = ordered[i]->variant;
        r.model = options.model;
        r.fingerprint = context_fingerprint(*ordered[i]);
        if (outcomes[i].ok()) {
            r.generation = trim(outcomes[i].response->text);
            r.correct = is_correct(r.generation, qs[i]->answers);
        } else {
            r.error = outcomes[i].error;
        }
        out.push_back(std::move(r));
    }
    return out;
}

AccuracySummary summarize(std::span<const AnswerRecord> records, bool exclude_errors) {
    AccuracySummary s;
    for (const auto& r : records) {
        if (r.error) {
            ++s.errors;
            if (exclude_errors) continue;
        }
        ++s.answered;
        if (r.correct) ++s.correct;
    }
    if (s.answered) s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.answered);
    return s;
}

json to_json(const AnswerRecord& r) {
    json j{{"qid", r.qid},
           {"regime", to_string(r.regime)},
           {"generation", r.generation},
           {"correct", r.correct},
           {"fingerprint", r.fingerprint},
           {"variant", to_string(r.variant)},
           {"model", r.model}};
    if (r.error) j["error"] = *r.error;
    return j;
}

AnswerRecord answer_record_from_json(const json& j) {
    AnswerRecord r;
    r.qid = j.at("qid").get<std::string>();
    r.regime = parse_regime(j.at("regime").get<std::string>());
    r.generation = j.at("generation").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.variant = parse_variant(j.value("variant", std::string("base")));
    r.model = j.value("model", std::string());
    if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    return r;
}

void save_answers(const std::filesystem::path& path, std::span<const AnswerRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<AnswerRecord> load_answers(const std::filesystem::path& path) {
    std::vector<AnswerRecord> out;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        try {
            out.push_back(answer_record_from_json(j));
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + " line " + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace intentrag
