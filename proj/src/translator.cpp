#include "intentrag/translator.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "intentrag/metrics.hpp"

namespace intentrag {

std::string translation_prompt(const std::optional<Emotion>& source, const Emotion& target) {
    const std::string src = source ? source->name() : "unknown";
    return "Source emotion: " + src + "\nTarget emotion: " + target.name() +
           "\nRewrite the text so that it expresses the target emotion instead of the source emotion. "
           "Preserve its meaning and every factual detail. Reply with the rewritten text only.";
}

json TrainingManifest::to_json() const {
    return json{{"examples", examples},
                {"self_mappings", self_mappings},
                {"cross_mappings", cross_mappings},
                {"groups", groups},
                {"groups_without_cross", groups_without_cross},
                {"self_ratio", self_ratio},
                {"seed", seed}};
}

namespace {

// Index into `weights` drawn proportionally to weight.
std::size_t weighted_pick(Rng& rng, const std::vector<std::size_t>& cumulative) {
    const std::size_t r = rng.below(cumulative.back());
    return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
}

}  // namespace

TrainingSet build_training_set(std::span<const ParallelGroup> groups, std::size_t n_examples, double self_ratio,
                               std::uint64_t seed) {
    if (groups.empty()) throw ValidationError("build_training_set: no parallel groups");
    if (!(self_ratio >= 0.0 && self_ratio <= 1.0)) throw ValidationError("self_ratio must lie in [0, 1]");

    // Each group contributes k self triples and k(k-1) cross triples.
    std::vector<std::size_t> self_cum, cross_cum;
    std::size_t self_total = 0, cross_total = 0, without_cross = 0;
    std::vector<std::vector<const std::pair<const Emotion, std::string>*>> entries(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& kv : groups[g].texts) entries[g].push_back(&kv);
        const std::size_t k = entries[g].size();
        self_total += k;
        cross_total += k >= 2 ? k * (k - 1) : 0;
        if (k < 2) ++without_cross;
        self_cum.push_back(self_total);
        cross_cum.push_back(cross_total);
    }
    if (without_cross) {
        spdlog::warn("{} parallel groups have fewer than two emotions and are skipped for cross mappings", without_cross);
    }

    TrainingSet out;
    out.manifest.groups = groups.size();
    out.manifest.groups_without_cross = without_cross;
    out.manifest.self_ratio = self_ratio;
    out.manifest.seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i < n_examples; ++i) {
        const bool self = rng.bernoulli(self_ratio);
        TranslationExample ex;
        if (self) {
            if (self_total == 0) throw ValidationError("no group has any text to self-map");
            const std::size_t g = weighted_pick(rng, self_cum);
            const auto* e = entries[g][rng.below(entries[g].size())];
            ex = {groups[g].source_id, e->first, e->first, "", e->second, e->second};
        } else {
            if (cross_total == 0) throw ValidationError("no group has two emotions for a cross mapping");
            const std::size_t g = weighted_pick(rng, cross_cum);
            const std::size_t k = entries[g].size();
            const std::size_t s = rng.below(k);
            std::size_t t = rng.below(k - 1);
            if (t >= s) ++t;
            ex = {groups[g].source_id, entries[g][s]->first, entries[g][t]->first, "", entries[g][s]->second,
                  entries[g][t]->second};
        }
        ex.prompt = translation_prompt(ex.source, ex.target);
        ++(ex.self_mapping() ? out.manifest.self_mappings : out.manifest.cross_mappings);
        out.examples.push_back(std::move(ex));
    }
    out.manifest.examples = out.examples.size();
    return out;
}

std::vector<ParallelGroup> groups_from_corpus(const Corpus& corpus, const SyntheticSet& synthetic) {
    std::map<std::string, ParallelGroup> by_source;
    for (const auto& s : synthetic.records()) {
        if (s.provenance.fact_distorted) continue;
        const auto* p = corpus.find(s.provenance.source_id);
        if (!p) continue;
        auto& g = by_source[p->id];
        g.source_id = p->id;
        g.texts[Emotion::neutral()] = p->text;
        g.texts[s.provenance.emotion] = s.text;
    }
    std::vector<ParallelGroup> out;
    for (const auto& p : corpus.passages()) {
        if (auto it = by_source.find(p.id); it != by_source.end()) out.push_back(std::move(it->second));
    }
    return out;
}

std::vector<ParallelGroup> load_groups(const std::filesystem::path& path) {
    std::vector<ParallelGroup> out;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        ParallelGroup g;
        g.source_id = j.at("source_id").get<std::string>();
        for (const auto& [k, v] : j.at("texts").items()) g.texts[Emotion::parse(k)] = v.get<std::string>();
        if (g.texts.empty()) throw ValidationError("line " + std::to_string(line) + ": group has no texts");
        out.push_back(std::move(g));
    });
    return out;
}

void save_groups(const std::filesystem::path& path, std::span<const ParallelGroup> groups) {
    std::string out;
    for (const auto& g : groups) {
        json texts = json::object();
        for (const auto& [e, t] : g.texts) texts[e.name()] = t;
        out += json{{"source_id", g.source_id}, {"texts", texts}}.dump();
        out += '\n';
    }
    write_file(path, out);
}

std::string training_jsonl(std::span<const TranslationExample> examples) {
    std::string out;
    for (const auto& ex : examples) {
        out += json{{"prompt", ex.prompt},
                    {"input", ex.input},
                    {"output", ex.output},
                    {"source_emotion", ex.source.name()},
                    {"target_emotion", ex.target.name()}}
                   .dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

Translator::Translator(Gateway& gateway, std::string model, TranslatorOptions options)
    : gateway_(gateway), model_(std::move(model)), options_(options) {}

ChatRequest Translator::request(std::string_view text, const std::optional<Emotion>& source,
                                const Emotion& target) const {
    ChatRequest req;
    req.model = model_;
    req.system = translation_prompt(source, target);
    req.user = std::string(text);
    req.temperature = options_.temperature;
    req.max_tokens = options_.max_tokens;
    return req;
}

std::string Translator::translate(std::string_view text, const std::optional<Emotion>& source,
                                  const Emotion& target) const {
    return trim(gateway_.complete(request(text, source, target)).text);
}

HttpReferenceScorer::HttpReferenceScorer(HttpEndpoint endpoint, std::string path, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), retry_(retry) {}

std::vector<double> HttpReferenceScorer::score(std::span<const std::string> references,
                                               std::span<const std::string> candidates) {
    json body{{"references", std::vector<std::string>(references.begin(), references.end())},
              {"candidates", std::vector<std::string>(candidates.begin(), candidates.end())}};
    const json reply = with_retries(retry_, [&] { return post_json(endpoint_, path_, body); });
    auto scores = reply.at("scores").get<std::vector<double>>();
    if (scores.size() != candidates.size()) throw BackendError("reference scorer returned the wrong number of scores");
    return scores;
}

Emotion PivotPolicy::pivot_for(const RoundTripSample& sample, std::size_t index) const {
    if (fixed) return *fixed;
    std::vector<Emotion> pool = candidates;
    if (pool.empty()) {
        pool = Emotion::canonical();
        pool.push_back(Emotion::neutral());
    }
    pool.erase(std::remove(pool.begin(), pool.end(), sample.emotion), pool.end());
    if (pool.empty()) throw ValidationError("no pivot emotion available for " + sample.emotion.name());
    const auto h = keyed_hash(seed, {"pivot", std::to_string(index), sample.text});
    return pool[static_cast<std::size_t>(unit_interval(h) * static_cast<double>(pool.size()))];
}

json RoundTripRow::to_json() const {
    json j{{"emotion", emotion}, {"n", n}, {"bleu_mean", bleu_mean}, {"failures", failures}};
    if (bleurt_mean) j["bleurt_mean"] = *bleurt_mean;
    return j;
}

json RoundTripReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) rows_json.push_back(r.to_json());
    return json{{"system", system}, {"rows", std::move(rows_json)}, {"overall", overall.to_json()}};
}

namespace {

RoundTripRow round_trip_row_from_json(const json& j) {
    RoundTripRow r;
    r.emotion = j.at("emotion").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.bleu_mean = j.at("bleu_mean").get<double>();
    r.failures = j.at("failures").get<std::size_t>();
    if (j.contains("bleurt_mean") && !j.at("bleurt_mean").is_null()) r.bleurt_mean = j.at("bleurt_mean").get<double>();
    return r;
}

}  // namespace

RoundTripReport round_trip_report_from_json(const json& j) {
    try {
        RoundTripReport r;
        r.system = j.at("system").get<std::string>();
        for (const auto& row : j.at("rows")) r.rows.push_back(round_trip_row_from_json(row));
        r.overall = round_trip_row_from_json(j.at("overall"));
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("round-trip report: ") + e.what());
    }
}

RoundTripReport round_trip_eval(std::span<const RoundTripSample> samples, const PivotPolicy& pivots,
                                const Translator& translator, ReferenceScorer* scorer, std::size_t parallelism) {
    struct Outcome {
        std::optional<std::string> back;
        double bleu = 0.0;
    };
    std::vector<Outcome> outcomes(samples.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) {
            const auto& s = samples[i];
            try {
                const Emotion pivot = pivots.pivot_for(s, i);
                const std::string there = translator.translate(s.text, s.emotion, pivot);
                const std::string back = translator.translate(there, pivot, s.emotion);
                outcomes[i].bleu = bleu(back, s.text);
                outcomes[i].back = back;
            } catch (const std::exception& e) {
                spdlog::warn("round trip failed for sample {} ({}): {}", i, s.emotion.name(), e.what());
            }
        }
    };
    parallelism = std::max<std::size_t>(1, std::min(parallelism, samples.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < parallelism; ++t) threads.emplace_back(work);
    if (!samples.empty()) work();
    for (auto& t : threads) t.join();

    std::vector<std::optional<double>> learned(samples.size());
    if (scorer) {
        std::vector<std::string> refs, cands;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!outcomes[i].back) continue;
            refs.push_back(samples[i].text);
            cands.push_back(*outcomes[i].back);
            idx.push_back(i);
        }
        if (!refs.empty()) {
            const auto scores = scorer->score(refs, cands);
            for (std::size_t j = 0; j < idx.size(); ++j) learned[idx[j]] = scores[j];
        }
    }

    struct Acc {
        std::size_t n = 0, failures = 0, learned_n = 0;
        double bleu_sum = 0.0, learned_sum = 0.0;
    };
    std::map<std::string, Acc> per;
    Acc all;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (Acc* a : {&per[samples[i].emotion.name()], &all}) {
            if (!outcomes[i].back) {
                ++a->failures;
                continue;
            }
            ++a->n;
            a->bleu_sum += outcomes[i].bleu;
            if (learned[i]) {
                ++a->learned_n;
                a->learned_sum += *learned[i];
            }
        }
    }
    auto row = [](const std::string& name, const Acc& a) {
        RoundTripRow r;
        r.emotion = name;
        r.n = a.n;
        r.failures = a.failures;
        r.bleu_mean = a.n ? a.bleu_sum / static_cast<double>(a.n) : 0.0;
        if (a.learned_n) r.bleurt_mean = a.learned_sum / static_cast<double>(a.learned_n);
        return r;
    };
    RoundTripReport report;
    report.system = translator.model();
    for (const auto& [name, a] : per) report.rows.push_back(row(name, a));
    report.overall = row("all", all);
    return report;
}

std::vector<RoundTripSample> load_round_trip_samples(const std::filesystem::path& path) {
    std::vector<RoundTripSample> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        out.push_back({j.at("text").get<std::string>(), Emotion::parse(j.at("emotion").get<std::string>())});
    });
    return out;
}

}  // namespace intentrag
