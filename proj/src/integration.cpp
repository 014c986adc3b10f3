#include "intentrag/integration.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace intentrag {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Base: return "base";
        case Variant::FS: return "fs";
        case Variant::PsmPre: return "psm-pre";
        case Variant::PsmPost: return "psm-post";
        case Variant::PSA: return "psa";
    }
    return "base";
}

Variant parse_variant(std::string_view s) {
    if (s == "base" || s == "nq") return Variant::Base;
    if (s == "fs") return Variant::FS;
    if (s == "psm-pre" || s == "psm") return Variant::PsmPre;
    if (s == "psm-post") return Variant::PsmPost;
    if (s == "psa") return Variant::PSA;
    throw ValidationError("unknown dataset variant \"" + std::string(s) + "\" (base|fs|psm-pre|psm-post|psa)");
}

json to_json(const IntentTag& tag) {
    json j{{"label", tag.sarcastic() ? "sarcastic" : "not_sarcastic"},
           {"source", tag.source == IntentTag::Source::Oracle   ? "oracle"
                      : tag.source == IntentTag::Source::Remote ? "remote"
                                                                : "lexical"}};
    if (tag.confidence) j["confidence"] = *tag.confidence;
    return j;
}

IntentTag intent_tag_from_json(const json& j) {
    IntentTag tag;
    const auto label = j.at("label").get<std::string>();
    if (label == "sarcastic") {
        tag.label = IntentTag::Label::Sarcastic;
    } else if (label == "not_sarcastic") {
        tag.label = IntentTag::Label::NotSarcastic;
    } else {
        throw ValidationError("unknown intent label \"" + label + "\"");
    }
    const auto source = j.value("source", std::string("oracle"));
    if (source == "oracle") {
        tag.source = IntentTag::Source::Oracle;
    } else if (source == "remote") {
        tag.source = IntentTag::Source::Remote;
    } else if (source == "lexical") {
        tag.source = IntentTag::Source::Lexical;
    } else {
        throw ValidationError("unknown intent tag source \"" + source + "\"");
    }
    if (j.contains("confidence") && !j.at("confidence").is_null()) tag.confidence = j.at("confidence").get<double>();
    return tag;
}

namespace {

void renumber(ReadingContext& ctx) {
    for (std::size_t i = 0; i < ctx.entries.size(); ++i) ctx.entries[i].position = i;
}

ContextEntry synthetic_entry(const SyntheticPassage& s, std::size_t position) {
    return ContextEntry{s.id, s.text, position, s.provenance, std::nullopt, false};
}

std::string join_missing(const std::vector<std::string>& missing) {
    std::string out;
    for (std::size_t i = 0; i < missing.size() && i < 50; ++i) {
        if (i) out += ", ";
        out += missing[i];
    }
    if (missing.size() > 50) out += ", ...";
    return out;
}

}  // namespace

std::vector<ReadingContext> build_base(std::span<const RankedList> rankings, const Corpus& corpus, std::size_t k) {
    std::vector<ReadingContext> out;
    out.reserve(rankings.size());
    for (const auto& r : rankings) {
        ReadingContext ctx{r.qid, Variant::Base, {}};
        for (std::size_t i = 0; i < r.entries.size() && i < k; ++i) {
            const auto& p = corpus.at(r.entries[i].pid);
            ctx.entries.push_back({p.id, p.text, i, std::nullopt, std::nullopt, false});
        }
        out.push_back(std::move(ctx));
    }
    return out;
}

std::vector<ReadingContext> build_fs(std::span<const ReadingContext> base, const SyntheticSet& synthetic) {
    std::vector<ReadingContext> out;
    std::vector<std::string> missing;
    for (const auto& b : base) {
        ReadingContext ctx{b.qid, Variant::FS, {}};
        for (const auto& e : b.entries) {
            const auto* s = synthetic.counterpart(e.pid, Emotion::sarcasm(), false);
            if (!s) {
                missing.push_back(e.pid);
                continue;
            }
            ctx.entries.push_back(synthetic_entry(*s, e.position));
        }
        out.push_back(std::move(ctx));
    }
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        throw ValidationError("no factually correct sarcastic counterpart for: " + join_missing(missing));
    }
    return out;
}

bool psm_replaces(std::uint64_t seed, std::string_view qid, std::string_view pid, double probability) {
    return unit_interval(keyed_hash(seed, {"psm-replace", qid, pid})) < probability;
}

std::vector<ReadingContext> build_psm(std::span<const ReadingContext> base, const SyntheticSet& synthetic,
                                      const QuerySet& queries, const PsmOptions& options, PsmStats* stats) {
    PsmStats local;
    std::vector<ReadingContext> out;
    std::vector<std::string> missing;
    for (const auto& b : base) {
        const auto& query = queries.at(b.qid);
        ReadingContext ctx{b.qid, options.prefix ? Variant::PsmPre : Variant::PsmPost, {}};
        std::size_t paired = 0;
        for (const auto& e : b.entries) {
            if (!is_correct(e.text, query.answers)) {
                ++local.incorrect_seen;
                if (psm_replaces(options.seed, b.qid, e.pid, options.replace_probability)) {
                    const auto* s = synthetic.counterpart(e.pid, Emotion::sarcasm(), false);
                    if (!s) {
                        missing.push_back(e.pid + " (sarcasm)");
                        continue;
                    }
                    ++local.replaced;
                    ctx.entries.push_back(synthetic_entry(*s, 0));
                } else {
                    ctx.entries.push_back(e);
                }
                continue;
            }
            if (paired >= options.paired_correct) {
                ctx.entries.push_back(e);
                continue;
            }
            ++paired;
            const auto* d = synthetic.counterpart(e.pid, Emotion::sarcasm(), true);
            if (!d) {
                missing.push_back(e.pid + " (fact-distorted sarcasm)");
                ctx.entries.push_back(e);
                continue;
            }
            ++local.inserted;
            if (options.prefix) {
                ctx.entries.push_back(synthetic_entry(*d, 0));
                ctx.entries.push_back(e);
            } else {
                ctx.entries.push_back(e);
                ctx.entries.push_back(synthetic_entry(*d, 0));
            }
        }
        if (options.truncate_to_reading_depth && ctx.entries.size() > kReadingDepth) ctx.entries.resize(kReadingDepth);
        renumber(ctx);
        out.push_back(std::move(ctx));
    }
    if (!missing.empty()) throw ValidationError("missing synthetic counterparts: " + join_missing(missing));
    if (stats) *stats = local;
    spdlog::info("PS-M: replaced {} of {} incorrect passages, inserted {} distorted passages", local.replaced,
                 local.incorrect_seen, local.inserted);
    return out;
}

std::vector<SyntheticPassage> psa_injection_set(const SyntheticSet& synthetic, bool include_correct_sarcastic) {
    std::vector<SyntheticPassage> out;
    for (const auto& s : synthetic.records()) {
        if (!s.provenance.emotion.is_sarcasm()) continue;
        if (s.provenance.fact_distorted || include_correct_sarcastic) out.push_back(s);
    }
    return out;
}

PsaResult build_psa(const FlatIndex& index, std::span<const SyntheticPassage> inject_set, const QuerySet& queries,
                    Embedder& embedder, const Corpus& corpus, std::size_t k, std::size_t workers) {
    const FlatIndex injected = inject(index, inject_set, embedder);
    std::unordered_map<std::string, const SyntheticPassage*> by_id;
    for (const auto& s : inject_set) by_id.emplace(s.id, &s);

    PsaResult result;
    result.index_size = injected.size();
    result.injected = inject_set.size();
    result.rankings = retrieve_all(injected, queries, embedder, k, workers);
    for (const auto& r : result.rankings) {
        ReadingContext ctx{r.qid, Variant::PSA, {}};
        for (std::size_t i = 0; i < r.entries.size(); ++i) {
            const auto& pid = r.entries[i].pid;
            if (auto it = by_id.find(pid); it != by_id.end()) {
                ctx.entries.push_back(synthetic_entry(*it->second, i));
            } else {
                const auto& p = corpus.at(pid);
                ctx.entries.push_back({p.id, p.text, i, std::nullopt, std::nullopt, false});
            }
        }
        result.contexts.push_back(std::move(ctx));
    }
    return result;
}

// ---------------------------------------------------------------------------

json to_json(const ContextEntry& e) {
    json j{{"pid", e.pid}, {"text", e.text}, {"position", e.position}};
    if (e.provenance) j["provenance"] = to_json(*e.provenance);
    if (e.intent_tag) j["intent_tag"] = to_json(*e.intent_tag);
    if (e.neutralized) j["neutralized"] = true;
    return j;
}

json to_json(const ReadingContext& c) {
    json entries = json::array();
    for (const auto& e : c.entries) entries.push_back(to_json(e));
    return json{{"qid", c.qid}, {"variant", to_string(c.variant)}, {"entries", std::move(entries)}};
}

ReadingContext reading_context_from_json(const json& j) {
    ReadingContext c;
    c.qid = j.at("qid").get<std::string>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    for (const auto& e : j.at("entries")) {
        ContextEntry entry;
        entry.pid = e.at("pid").get<std::string>();
        entry.text = e.at("text").get<std::string>();
        entry.position = e.at("position").get<std::size_t>();
        if (e.contains("provenance") && !e.at("provenance").is_null()) entry.provenance = provenance_from_json(e.at("provenance"));
        if (e.contains("intent_tag") && !e.at("intent_tag").is_null()) entry.intent_tag = intent_tag_from_json(e.at("intent_tag"));
        entry.neutralized = e.value("neutralized", false);
        c.entries.push_back(std::move(entry));
    }
    if (c.entries.size() > kReadingDepth + 2) {
        throw ValidationError("context for " + c.qid + " has " + std::to_string(c.entries.size()) + " entries (max 12)");
    }
    return c;
}

void save_contexts(const std::filesystem::path& path, std::vector<ReadingContext> contexts) {
    std::stable_sort(contexts.begin(), contexts.end(),
                     [](const ReadingContext& a, const ReadingContext& b) { return a.qid < b.qid; });
    std::string out;
    for (const auto& c : contexts) {
        out += to_json(c).dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<ReadingContext> load_contexts(const std::filesystem::path& path) {
    std::vector<ReadingContext> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(reading_context_from_json(j)); });
    return out;
}

}  // namespace intentrag
