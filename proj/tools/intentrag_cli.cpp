// intentrag: command-line driver for the corpus, retrieval, perturbation,
// reading and evaluation stages. Data goes to files, logs to stderr.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <set>

#include "intentrag/config.hpp"
#include "intentrag/eval.hpp"
#include "intentrag/integration.hpp"
#include "intentrag/reader.hpp"
#include "intentrag/report.hpp"

namespace fs = std::filesystem;
using namespace intentrag;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
    std::string cache_dir;
    std::string log_level = "info";
};

RunConfig load_run_config(const Globals& g) {
    json raw = json::object();
    fs::path base = fs::current_path();
    if (!g.config_path.empty()) {
        try {
            raw = json::parse(read_file(g.config_path));
        } catch (const json::exception& e) {
            throw ValidationError(g.config_path + ": " + e.what());
        }
        base = fs::path(g.config_path).parent_path();
        if (base.empty()) base = ".";
    }
    // Flags override the file and therefore count towards the digest.
    if (g.seed) set_config_value(raw, "seed", *g.seed);
    if (g.parallelism) set_config_value(raw, "parallelism", *g.parallelism);
    if (!g.cache_dir.empty()) set_config_value(raw, "cache_dir", fs::absolute(g.cache_dir).string());
    return parse_config(raw, base);
}

template <typename T>
T unwrap(Loaded<T> loaded, const std::string& what) {
    for (const auto& w : loaded.warnings) spdlog::warn("{}: {}", what, w);
    return std::move(loaded.value);
}

Corpus corpus_from(const std::string& p) { return unwrap(load_corpus(p), p); }
QuerySet queries_from(const std::string& p) { return unwrap(load_queries(p), p); }
SyntheticSet synthetic_from(const std::string& p, const Corpus* base) { return unwrap(load_synthetic(p, base), p); }

json input_digest(const std::string& p) { return json{{"file", fs::path(p).filename().string()}, {"sha256", sha256_file(p)}}; }

std::vector<Emotion> parse_emotions(const std::string& list, const PromptRegistry& registry) {
    if (list == "all") return Emotion::canonical();
    if (list == "registry") return registry.emotions();
    std::vector<Emotion> out;
    for (const auto& part : split(list, ',')) {
        if (!trim(part).empty()) out.push_back(Emotion::parse(trim(part)));
    }
    if (out.empty()) throw ValidationError("--emotions selects nothing");
    return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string passages, queries, synthetic, out_dir;
};

int run_ingest(const Globals& g, const IngestArgs& a) {
    const auto cfg = load_run_config(g);
    const fs::path out(a.out_dir);
    json details{{"inputs", json::array()}};
    const Corpus corpus = corpus_from(a.passages);
    save_corpus(out / "passages.jsonl", corpus);
    details["inputs"].push_back(input_digest(a.passages));
    details["passages"] = corpus.size();
    if (!a.queries.empty()) {
        const QuerySet queries = queries_from(a.queries);
        save_queries(out / "queries.jsonl", queries);
        details["inputs"].push_back(input_digest(a.queries));
        details["queries"] = queries.size();
    }
    if (!a.synthetic.empty()) {
        const SyntheticSet synthetic = synthetic_from(a.synthetic, &corpus);
        save_synthetic(out / "synthetic.jsonl", synthetic.records());
        details["inputs"].push_back(input_digest(a.synthetic));
        details["synthetic"] = synthetic.size();
    }
    write_manifest(out / "ingest", stage_manifest(cfg, "ingest", details));
    spdlog::info("ingested {} passages into {}", corpus.size(), out.string());
    return 0;
}

struct EmbedArgs {
    std::string corpus, out;
    std::size_t batch = 256;
};

int run_embed(const Globals& g, const EmbedArgs& a) {
    const auto cfg = load_run_config(g);
    const Corpus corpus = corpus_from(a.corpus);
    auto embedder = make_embedder(cfg);
    const FlatIndex index = index_corpus(corpus, *embedder, a.batch);
    index.save(a.out);
    write_manifest(a.out, stage_manifest(cfg, "embed",
                                         {{"inputs", {input_digest(a.corpus)}},
                                          {"embedder", embedder->name()},
                                          {"dim", index.dim()},
                                          {"count", index.size()}}));
    spdlog::info("indexed {} passages (dim {}) into {}", index.size(), index.dim(), a.out);
    return 0;
}

struct RetrieveArgs {
    std::string index, queries, out;
    std::size_t k = kConstructionDepth;
};

int run_retrieve(const Globals& g, const RetrieveArgs& a) {
    const auto cfg = load_run_config(g);
    const FlatIndex index = FlatIndex::load(a.index);
    const QuerySet queries = queries_from(a.queries);
    auto embedder = make_embedder(cfg);
    const auto rankings = retrieve_all(index, queries, *embedder, a.k, cfg.parallelism);
    save_rankings(a.out, rankings);
    write_manifest(a.out, stage_manifest(cfg, "retrieve",
                                         {{"inputs", {input_digest(a.index), input_digest(a.queries)}},
                                          {"k", a.k},
                                          {"queries", rankings.size()}}));
    spdlog::info("retrieved top-{} for {} queries", a.k, rankings.size());
    return 0;
}

struct DistortArgs {
    std::string corpus, emotions = "all", queries, rankings, pool, templates, out;
    bool fact_distorted = false;
    std::size_t top = kReadingDepth;
};

int run_distort(const Globals& g, const DistortArgs& a) {
    const auto cfg = load_run_config(g);
    const std::uint64_t seed = cfg.require_seed("distort");
    const Corpus full = corpus_from(a.corpus);
    json inputs = json::array({input_digest(a.corpus)});

    std::vector<std::string> models = cfg.distortion.pool;
    std::uint64_t pool_seed = cfg.distortion.pool_seed.value_or(seed);
    if (!a.pool.empty()) {
        const json p = json::parse(read_file(a.pool));
        models = p.at("models").get<std::vector<std::string>>();
        if (p.contains("seed")) pool_seed = p.at("seed").get<std::uint64_t>();
        inputs.push_back(input_digest(a.pool));
    }
    if (models.empty()) throw ValidationError("no generator models: set distortion.pool or pass --pool");

    PromptRegistry registry = PromptRegistry::defaults();
    if (!a.templates.empty()) {
        registry = PromptRegistry::load(a.templates);
        inputs.push_back(input_digest(a.templates));
    } else if (cfg.distortion.templates) {
        registry = PromptRegistry::load(*cfg.distortion.templates);
    }
    const auto emotions = parse_emotions(a.emotions, registry);

    // Restrict to passages that some query actually retrieves, when asked.
    std::vector<Passage> selected;
    if (!a.rankings.empty()) {
        std::set<std::string> keep;
        for (const auto& r : load_rankings(a.rankings)) {
            for (std::size_t i = 0; i < std::min(a.top, r.entries.size()); ++i) keep.insert(r.entries[i].pid);
        }
        for (const auto& p : full.passages()) {
            if (keep.count(p.id)) selected.push_back(p);
        }
        inputs.push_back(input_digest(a.rankings));
    } else {
        selected.assign(full.passages().begin(), full.passages().end());
    }
    const Corpus corpus(selected);

    std::map<std::string, std::vector<std::string>> fd_answers;
    if (a.fact_distorted) {
        std::vector<std::string> answers;
        if (!a.queries.empty()) {
            const QuerySet queries = queries_from(a.queries);
            for (const auto& q : queries.queries()) answers.insert(answers.end(), q.answers.begin(), q.answers.end());
            inputs.push_back(input_digest(a.queries));
        }
        for (const auto& p : corpus.passages()) fd_answers[p.id] = answers;
    }

    auto gateway = make_gateway(cfg);
    DistortionOptions opts;
    opts.temperature = cfg.distortion.temperature;
    opts.seed = static_cast<std::int64_t>(seed);
    const Distorter distorter(*gateway, registry, ModelPool(models, pool_seed), opts);
    const auto result =
        distorter.transform_corpus(corpus, emotions, a.fact_distorted ? &fd_answers : nullptr, cfg.parallelism);
    save_synthetic(a.out, result.records);

    json details = result.manifest.to_json();
    details["inputs"] = inputs;
    details["emotions"] = json::array();
    for (const auto& e : emotions) details["emotions"].push_back(e.name());
    details["pool"] = {{"models", models}, {"seed", pool_seed}};
    write_manifest(a.out, stage_manifest(cfg, "distort", details));
    if (!result.manifest.failures.empty()) {
        spdlog::warn("{} of {} transformations failed; see the manifest", result.manifest.failures.size(),
                     result.manifest.requested);
    }
    spdlog::info("wrote {} synthetic passages", result.records.size());
    return 0;
}

struct IntegrateArgs {
    std::string variant, rankings, corpus, synthetic, queries, index, out, rankings_out, index_out;
    std::size_t k = kReadingDepth;
    std::size_t rankings_k = kConstructionDepth;
    bool truncate = false;
    bool inject_correct = false;
};

int run_integrate(const Globals& g, const IntegrateArgs& a) {
    const auto cfg = load_run_config(g);
    const Variant variant = parse_variant(a.variant);
    const Corpus corpus = corpus_from(a.corpus);
    json details{{"variant", to_string(variant)}, {"inputs", json::array({input_digest(a.corpus)})}};
    auto need = [&](const std::string& v, const char* flag) {
        if (v.empty()) throw ValidationError(std::string("--variant ") + a.variant + " needs " + flag);
    };

    std::vector<ReadingContext> contexts;
    if (variant == Variant::PSA) {
        need(a.index, "--index");
        need(a.synthetic, "--synthetic");
        need(a.queries, "--queries");
        const FlatIndex index = FlatIndex::load(a.index);
        const SyntheticSet synthetic = synthetic_from(a.synthetic, &corpus);
        const QuerySet queries = queries_from(a.queries);
        const auto inject_set = psa_injection_set(synthetic, a.inject_correct);
        auto embedder = make_embedder(cfg);
        auto result = build_psa(index, inject_set, queries, *embedder, corpus, a.k, cfg.parallelism);
        contexts = std::move(result.contexts);
        details["injected"] = result.injected;
        details["index_size"] = result.index_size;
        if (!a.rankings_out.empty() || !a.index_out.empty()) {
            const FlatIndex injected = inject(index, inject_set, *embedder);
            if (!a.index_out.empty()) injected.save(a.index_out);
            if (!a.rankings_out.empty()) {
                save_rankings(a.rankings_out, retrieve_all(injected, queries, *embedder, a.rankings_k, cfg.parallelism));
            }
        }
        for (const auto& p : {a.index, a.synthetic, a.queries}) details["inputs"].push_back(input_digest(p));
    } else {
        need(a.rankings, "--rankings");
        const auto rankings = load_rankings(a.rankings);
        details["inputs"].push_back(input_digest(a.rankings));
        auto base = build_base(rankings, corpus, a.k);
        if (variant == Variant::Base) {
            contexts = std::move(base);
        } else {
            need(a.synthetic, "--synthetic");
            const SyntheticSet synthetic = synthetic_from(a.synthetic, &corpus);
            details["inputs"].push_back(input_digest(a.synthetic));
            if (variant == Variant::FS) {
                contexts = build_fs(base, synthetic);
            } else {
                need(a.queries, "--queries");
                const QuerySet queries = queries_from(a.queries);
                details["inputs"].push_back(input_digest(a.queries));
                PsmOptions opts;
                opts.prefix = variant == Variant::PsmPre;
                opts.seed = cfg.require_seed("integrate --variant " + a.variant);
                opts.truncate_to_reading_depth = a.truncate;
                PsmStats stats;
                contexts = build_psm(base, synthetic, queries, opts, &stats);
                details["psm"] = {{"incorrect_seen", stats.incorrect_seen},
                                  {"replaced", stats.replaced},
                                  {"inserted", stats.inserted},
                                  {"truncated", a.truncate}};
            }
        }
    }
    details["contexts"] = contexts.size();
    save_contexts(a.out, contexts);
    write_manifest(a.out, stage_manifest(cfg, "integrate", details));
    spdlog::info("wrote {} {} contexts", contexts.size(), to_string(variant));
    return 0;
}

struct TagArgs {
    std::string contexts, mode, out;
};

int run_tag(const Globals& g, const TagArgs& a) {
    const auto cfg = load_run_config(g);
    const std::string mode = a.mode.empty() ? cfg.tagger.mode : a.mode;
    auto contexts = load_contexts(a.contexts);
    if (mode == "oracle") {
        for (auto& c : contexts) c = with_oracle_tags(std::move(c));
    } else if (mode == "lexical") {
        for (auto& c : contexts) {
            for (auto& e : c.entries) e.intent_tag = tag_lexical(e.text);
        }
    } else if (mode == "remote") {
        const auto fallback = cfg.tagger.fallback == "error" ? FallbackPolicy::Error : FallbackPolicy::NotSarcastic;
        RemoteTagger tagger(make_classifier(cfg), fallback, cfg.tagger.batch_size);
        std::vector<std::string> texts;
        for (const auto& c : contexts) {
            for (const auto& e : c.entries) texts.push_back(e.text);
        }
        const auto tags = tagger.tag_batch(texts);
        std::size_t i = 0;
        for (auto& c : contexts) {
            for (auto& e : c.entries) e.intent_tag = tags[i++];
        }
    } else {
        throw ValidationError("--mode must be oracle, remote or lexical");
    }
    const auto table = evaluate_classifier(classifier_samples(contexts));
    save_contexts(a.out, contexts);
    write_manifest(a.out, stage_manifest(cfg, "tag",
                                         {{"inputs", {input_digest(a.contexts)}},
                                          {"mode", mode},
                                          {"agreement_with_provenance", table.to_json()}}));
    spdlog::info("tagged {} passages ({})", table.overall.total, mode);
    return 0;
}

struct ReadArgs {
    std::string contexts, queries, regime = "base", placement, model, templates, out;
    bool fail_hard = false;
};

int run_read(const Globals& g, const ReadArgs& a) {
    const auto cfg = load_run_config(g);
    const PromptRegime regime = parse_regime(a.regime);
    auto contexts = load_contexts(a.contexts);
    const QuerySet queries = queries_from(a.queries);

    ReaderOptions opts;
    opts.model = !a.model.empty() ? a.model : cfg.reader.models.empty() ? "" : cfg.reader.models.front();
    if (opts.model.empty()) throw ValidationError("no reader model: pass --model or set reader.model");
    opts.placement = parse_placement(a.placement.empty() ? cfg.reader.placement : a.placement);
    opts.max_tokens = cfg.reader.max_tokens;
    if (!a.templates.empty()) {
        opts.templates = PromptTemplates::load(a.templates);
    } else if (cfg.reader.templates) {
        opts.templates = PromptTemplates::load(*cfg.reader.templates);
    }

    auto gateway = make_gateway(cfg);
    json details{{"inputs", {input_digest(a.contexts), input_digest(a.queries)}},
                 {"regime", to_string(regime)},
                 {"placement", to_string(opts.placement)},
                 {"model", opts.model},
                 {"templates", opts.templates.to_json()}};

    if (regime == PromptRegime::RwiTagsOracle) {
        for (auto& c : contexts) c = with_oracle_tags(std::move(c));
    }
    if (uses_neutralization(regime)) {
        const std::string tmodel = regime == PromptRegime::RwiNeutralizedZeroshot ? cfg.translator.zeroshot_model
                                                                                  : cfg.translator.finetuned_model;
        if (tmodel.empty()) {
            throw ValidationError(std::string("regime ") + a.regime + " needs translator." +
                                  (regime == PromptRegime::RwiNeutralizedZeroshot ? "zeroshot_model" : "finetuned_model"));
        }
        const Translator translator(*gateway, tmodel);
        NeutralizeStats stats;
        for (auto& c : contexts) c = neutralize_context(c, translator, a.fail_hard, &stats);
        details["neutralization"] = {{"model", tmodel}, {"translated", stats.translated}, {"failed", stats.failed}};
    }

    const auto records = answer_all(contexts, queries, regime, *gateway, opts, cfg.parallelism);
    save_answers(a.out, records);
    const auto summary = summarize(records);
    details["answered"] = summary.answered;
    details["correct"] = summary.correct;
    details["errors"] = summary.errors;
    details["accuracy"] = summary.accuracy ? json(*summary.accuracy) : json(nullptr);
    write_manifest(a.out, stage_manifest(cfg, "read", details));
    spdlog::info("{} / {}: {} of {} correct", to_string(regime), opts.model, summary.correct, summary.answered);
    if (summary.errors) spdlog::warn("{} reader calls failed", summary.errors);
    return 0;
}

struct TranslateArgs {
    // build-training
    std::string corpus, synthetic, groups, groups_out, out;
    std::size_t n = 10000;
    double self_ratio = 0.10;
    // round-trip
    std::string samples, model, pivot = "neutral";
    // text
    std::string text, source, target = "neutral";
};

int run_build_training(const Globals& g, const TranslateArgs& a) {
    const auto cfg = load_run_config(g);
    const std::uint64_t seed = cfg.require_seed("translate build-training");
    std::vector<ParallelGroup> groups;
    json inputs = json::array();
    if (!a.groups.empty()) {
        groups = load_groups(a.groups);
        inputs.push_back(input_digest(a.groups));
    } else {
        if (a.corpus.empty() || a.synthetic.empty()) throw ValidationError("pass --groups, or --corpus and --synthetic");
        const Corpus corpus = corpus_from(a.corpus);
        groups = groups_from_corpus(corpus, synthetic_from(a.synthetic, &corpus));
        inputs.push_back(input_digest(a.corpus));
        inputs.push_back(input_digest(a.synthetic));
    }
    if (!a.groups_out.empty()) save_groups(a.groups_out, groups);
    const auto set = build_training_set(groups, a.n, a.self_ratio, seed);
    write_file(a.out, training_jsonl(set.examples));
    json details = set.manifest.to_json();
    details["inputs"] = inputs;
    write_manifest(a.out, stage_manifest(cfg, "translate build-training", details));
    spdlog::info("wrote {} training examples ({} self-mappings)", set.manifest.examples, set.manifest.self_mappings);
    return 0;
}

int run_round_trip(const Globals& g, const TranslateArgs& a) {
    const auto cfg = load_run_config(g);
    std::vector<RoundTripSample> samples;
    json inputs = json::array();
    if (!a.samples.empty()) {
        samples = load_round_trip_samples(a.samples);
        inputs.push_back(input_digest(a.samples));
    } else {
        if (a.synthetic.empty()) throw ValidationError("pass --samples or --synthetic");
        const SyntheticSet synthetic = synthetic_from(a.synthetic, nullptr);
        for (const auto& s : synthetic.records()) {
            if (!s.provenance.fact_distorted) samples.push_back({s.text, s.provenance.emotion});
        }
        inputs.push_back(input_digest(a.synthetic));
    }
    const std::string model = !a.model.empty() ? a.model : cfg.translator.finetuned_model;
    if (model.empty()) throw ValidationError("no translator model: pass --model or set translator.finetuned_model");

    PivotPolicy pivots;
    if (a.pivot == "random") {
        pivots.seed = cfg.require_seed("translate round-trip --pivot random");
    } else {
        pivots.fixed = Emotion::parse(a.pivot);
    }
    auto gateway = make_gateway(cfg);
    const Translator translator(*gateway, model);
    auto scorer = make_scorer(cfg);
    const auto report = round_trip_eval(samples, pivots, translator, scorer.get(), cfg.parallelism);
    write_file(a.out, report.to_json().dump(2) + "\n");
    write_manifest(a.out, stage_manifest(cfg, "translate round-trip",
                                         {{"inputs", inputs}, {"model", model}, {"pivot", a.pivot},
                                          {"samples", samples.size()}}));
    spdlog::info("round trip over {} samples: mean BLEU {:.4f}", samples.size(), report.overall.bleu_mean);
    return 0;
}

int run_translate_text(const Globals& g, const TranslateArgs& a) {
    const auto cfg = load_run_config(g);
    const std::string model = !a.model.empty() ? a.model : cfg.translator.finetuned_model;
    if (model.empty()) throw ValidationError("no translator model: pass --model or set translator.finetuned_model");
    auto gateway = make_gateway(cfg);
    const Translator translator(*gateway, model);
    const std::optional<Emotion> source =
        a.source.empty() || a.source == "unknown" ? std::nullopt : std::optional<Emotion>(Emotion::parse(a.source));
    const std::string out = translator.translate(a.text, source, Emotion::parse(a.target));
    if (a.out.empty() || a.out == "-") {
        std::cout << out << "\n";
    } else {
        write_file(a.out, out + "\n");
    }
    return 0;
}

struct EvaluateArgs {
    std::string corpus, queries, synthetic, out;
    std::vector<std::string> answers, retrieval, tagged, round_trip;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
    const auto cfg = load_run_config(g);
    json inputs = json::array();
    std::optional<Corpus> corpus;
    std::optional<QuerySet> queries;
    std::optional<SyntheticSet> synthetic;
    if (!a.corpus.empty()) {
        corpus = corpus_from(a.corpus);
        inputs.push_back(input_digest(a.corpus));
    }
    if (!a.queries.empty()) {
        queries = queries_from(a.queries);
        inputs.push_back(input_digest(a.queries));
    }
    if (!a.synthetic.empty()) {
        synthetic = synthetic_from(a.synthetic, corpus ? &*corpus : nullptr);
        inputs.push_back(input_digest(a.synthetic));
    }

    EvalInputs in;
    in.corpus = corpus ? &*corpus : nullptr;
    in.queries = queries ? &*queries : nullptr;
    in.synthetic = synthetic ? &*synthetic : nullptr;
    for (const auto& p : a.answers) {
        auto recs = load_answers(p);
        in.answers.insert(in.answers.end(), recs.begin(), recs.end());
        inputs.push_back(input_digest(p));
    }
    for (const auto& spec : a.retrieval) {
        // retriever:corpus:rankings.jsonl:index.bin
        const auto parts = split(spec, ':');
        if (parts.size() != 4) throw ValidationError("--retrieval expects RETRIEVER:CORPUS:RANKINGS:INDEX, got " + spec);
        RetrievalRun run;
        run.retriever = parts[0];
        run.corpus = parts[1];
        run.rankings = load_rankings(parts[2]);
        const FlatIndex index = FlatIndex::load(parts[3]);
        run.index_ids.assign(index.ids().begin(), index.ids().end());
        in.retrieval.push_back(std::move(run));
        inputs.push_back(input_digest(parts[2]));
        inputs.push_back(input_digest(parts[3]));
    }
    for (const auto& p : a.tagged) {
        auto cs = load_contexts(p);
        in.tagged_contexts.insert(in.tagged_contexts.end(), cs.begin(), cs.end());
        inputs.push_back(input_digest(p));
    }
    for (const auto& p : a.round_trip) {
        try {
            in.round_trips.push_back(round_trip_report_from_json(json::parse(read_file(p))));
        } catch (const json::exception& e) {
            throw ValidationError(p + ": " + e.what());
        }
        inputs.push_back(input_digest(p));
    }
    in.metadata = {{"tool_version", kToolVersion},
                   {"config_digest", cfg.digest},
                   {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)},
                   {"inputs", inputs}};
    if (corpus) in.metadata["corpus_size"] = corpus->size();
    if (queries) in.metadata["queries"] = queries->size();
    if (synthetic) in.metadata["synthetic_size"] = synthetic->size();

    const json report = build_report(in);
    write_file(a.out, report.dump(2) + "\n");
    spdlog::info("wrote {}", a.out);
    return 0;
}

struct ReportArgs {
    std::string report, out = "-", section = "all";
};

int run_report(const Globals&, const ReportArgs& a) {
    json report;
    try {
        report = json::parse(read_file(a.report));
    } catch (const json::exception& e) {
        throw ValidationError(a.report + ": " + e.what());
    }
    std::string text;
    if (a.section == "all") text = render_report(report);
    else if (a.section == "qa") text = render_qa_grid(report);
    else if (a.section == "psm") text = render_psm_grid(report);
    else if (a.section == "retrieval") text = render_retrieval_grid(report);
    else if (a.section == "round-trip") text = render_round_trip(report);
    else if (a.section == "classifier") text = render_classifier(report);
    else if (a.section == "corpus") text = render_corpus_stats(report);
    else throw ValidationError("unknown --section " + a.section);
    if (a.out == "-") {
        std::cout << text;
    } else {
        write_file(a.out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"intentrag: retrieval, perturbation and intent-aware reading experiments"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Global seed; overrides the config");
    app.add_option("--parallelism", g.parallelism, "Concurrent backend requests; overrides the config")
        ->check(CLI::PositiveNumber);
    app.add_option("--cache-dir", g.cache_dir, "On-disk completion cache; overrides the config");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    std::function<int()> action;

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate and canonicalise passages, queries and synthetic records");
    c_ingest->add_option("--passages", ingest.passages, "passages.jsonl")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--queries", ingest.queries, "queries.jsonl")->check(CLI::ExistingFile);
    c_ingest->add_option("--synthetic", ingest.synthetic, "synthetic.jsonl")->check(CLI::ExistingFile);
    c_ingest->add_option("--out-dir", ingest.out_dir, "Output directory")->required();
    c_ingest->callback([&] { action = [&] { return run_ingest(g, ingest); }; });

    EmbedArgs embed;
    auto* c_embed = app.add_subcommand("embed", "Embed a corpus with the passage encoder and write a flat index");
    c_embed->add_option("--corpus", embed.corpus, "passages.jsonl")->required()->check(CLI::ExistingFile);
    c_embed->add_option("--out", embed.out, "Index file")->required();
    c_embed->add_option("--batch", embed.batch, "Embedding batch size")->capture_default_str()->check(CLI::PositiveNumber);
    c_embed->callback([&] { action = [&] { return run_embed(g, embed); }; });

    RetrieveArgs retrieve;
    auto* c_retrieve = app.add_subcommand("retrieve", "Exact top-k inner-product retrieval for every query");
    c_retrieve->add_option("--index", retrieve.index, "Index file")->required()->check(CLI::ExistingFile);
    c_retrieve->add_option("--queries", retrieve.queries, "queries.jsonl")->required()->check(CLI::ExistingFile);
    c_retrieve->add_option("--k", retrieve.k, "Ranking depth")->capture_default_str()->check(CLI::PositiveNumber);
    c_retrieve->add_option("--out", retrieve.out, "rankings.jsonl")->required();
    c_retrieve->callback([&] { action = [&] { return run_retrieve(g, retrieve); }; });

    DistortArgs distort;
    auto* c_distort = app.add_subcommand("distort", "Rewrite passages in other emotions, optionally with fact distortion");
    c_distort->add_option("--corpus", distort.corpus, "passages.jsonl")->required()->check(CLI::ExistingFile);
    c_distort->add_option("--emotions", distort.emotions, "Comma list, \"all\" (the eleven) or \"registry\"")
        ->capture_default_str();
    c_distort->add_flag("--fact-distorted", distort.fact_distorted, "Also produce fact-distorted sarcastic passages");
    c_distort->add_option("--queries", distort.queries, "Gold answers to target during fact distortion")
        ->check(CLI::ExistingFile);
    c_distort->add_option("--rankings", distort.rankings, "Only transform passages retrieved in the top --top")
        ->check(CLI::ExistingFile);
    c_distort->add_option("--top", distort.top, "Depth used with --rankings")->capture_default_str();
    c_distort->add_option("--pool", distort.pool, "Generator pool file {\"models\":[...],\"seed\":N}")
        ->check(CLI::ExistingFile);
    c_distort->add_option("--templates", distort.templates, "Emotion prompt registry file")->check(CLI::ExistingFile);
    c_distort->add_option("--out", distort.out, "synthetic.jsonl")->required();
    c_distort->callback([&] { action = [&] { return run_distort(g, distort); }; });

    IntegrateArgs integrate;
    auto* c_integrate = app.add_subcommand("integrate", "Build reading contexts for one corpus variant");
    c_integrate->add_option("--variant", integrate.variant, "base, fs, psm-pre, psm-post or psa")
        ->required()
        ->check(CLI::IsMember({"base", "fs", "psm-pre", "psm-post", "psa"}));
    c_integrate->add_option("--corpus", integrate.corpus, "passages.jsonl")->required()->check(CLI::ExistingFile);
    c_integrate->add_option("--rankings", integrate.rankings, "Base rankings (all but psa)")->check(CLI::ExistingFile);
    c_integrate->add_option("--synthetic", integrate.synthetic, "synthetic.jsonl")->check(CLI::ExistingFile);
    c_integrate->add_option("--queries", integrate.queries, "queries.jsonl")->check(CLI::ExistingFile);
    c_integrate->add_option("--index", integrate.index, "Base index (psa)")->check(CLI::ExistingFile);
    c_integrate->add_option("--k", integrate.k, "Reading depth")->capture_default_str()->check(CLI::PositiveNumber);
    c_integrate->add_flag("--truncate-to-10", integrate.truncate, "Trim PS-M contexts back to the reading depth");
    c_integrate->add_flag("--inject-correct-sarcastic", integrate.inject_correct,
                          "PS-A: also inject factually correct sarcastic passages");
    c_integrate->add_option("--rankings-out", integrate.rankings_out, "PS-A: write rankings over the injected index");
    c_integrate->add_option("--rankings-k", integrate.rankings_k, "Depth for --rankings-out")->capture_default_str();
    c_integrate->add_option("--index-out", integrate.index_out, "PS-A: write the injected index");
    c_integrate->add_option("--out", integrate.out, "contexts.jsonl")->required();
    c_integrate->callback([&] { action = [&] { return run_integrate(g, integrate); }; });

    TagArgs tag;
    auto* c_tag = app.add_subcommand("tag", "Attach intent tags to every context passage");
    c_tag->add_option("--contexts", tag.contexts, "contexts.jsonl")->required()->check(CLI::ExistingFile);
    c_tag->add_option("--mode", tag.mode, "oracle, remote or lexical (default from config)");
    c_tag->add_option("--out", tag.out, "Tagged contexts.jsonl")->required();
    c_tag->callback([&] { action = [&] { return run_tag(g, tag); }; });

    ReadArgs read;
    auto* c_read = app.add_subcommand("read", "Answer every query from its context under one prompt regime");
    c_read->add_option("--contexts", read.contexts, "contexts.jsonl")->required()->check(CLI::ExistingFile);
    c_read->add_option("--queries", read.queries, "queries.jsonl")->required()->check(CLI::ExistingFile);
    c_read->add_option("--regime", read.regime,
                       "base, rwi, rwi_tags_oracle, rwi_tags_predicted, rwi_neutralized_zeroshot, "
                       "rwi_neutralized_translator")
        ->capture_default_str();
    c_read->add_option("--placement", read.placement, "Tag placement: before or after (default from config)");
    c_read->add_option("--model", read.model, "Reader model (default from config)");
    c_read->add_option("--templates", read.templates, "Prompt template overrides (JSON)")->check(CLI::ExistingFile);
    c_read->add_flag("--fail-hard", read.fail_hard, "Abort when a passage cannot be neutralised");
    c_read->add_option("--out", read.out, "answers.jsonl")->required();
    c_read->callback([&] { action = [&] { return run_read(g, read); }; });

    TranslateArgs tr;
    auto* c_translate = app.add_subcommand("translate", "Intent-translator data preparation and evaluation");
    c_translate->require_subcommand(1);
    auto* c_train = c_translate->add_subcommand("build-training", "Write the translator fine-tuning file");
    c_train->add_option("--groups", tr.groups, "Parallel groups JSONL")->check(CLI::ExistingFile);
    c_train->add_option("--corpus", tr.corpus, "passages.jsonl (with --synthetic)")->check(CLI::ExistingFile);
    c_train->add_option("--synthetic", tr.synthetic, "synthetic.jsonl (with --corpus)")->check(CLI::ExistingFile);
    c_train->add_option("--groups-out", tr.groups_out, "Also write the parallel groups");
    c_train->add_option("--n", tr.n, "Examples to draw")->capture_default_str();
    c_train->add_option("--self-ratio", tr.self_ratio, "Share of self-mappings")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    c_train->add_option("--out", tr.out, "training.jsonl")->required();
    c_train->callback([&] { action = [&] { return run_build_training(g, tr); }; });

    auto* c_rt = c_translate->add_subcommand("round-trip", "Round-trip translation BLEU per emotion");
    c_rt->add_option("--samples", tr.samples, "JSONL of {\"text\",\"emotion\"}")->check(CLI::ExistingFile);
    c_rt->add_option("--synthetic", tr.synthetic, "Use non-distorted synthetic passages as samples")->check(CLI::ExistingFile);
    c_rt->add_option("--model", tr.model, "Translator model (default translator.finetuned_model)");
    c_rt->add_option("--pivot", tr.pivot, "Pivot emotion, or \"random\" for a seeded per-sample pivot")->capture_default_str();
    c_rt->add_option("--out", tr.out, "Round-trip report JSON")->required();
    c_rt->callback([&] { action = [&] { return run_round_trip(g, tr); }; });

    auto* c_text = c_translate->add_subcommand("text", "Translate one text");
    c_text->add_option("--text", tr.text, "Input text")->required();
    c_text->add_option("--source", tr.source, "Source emotion or \"unknown\"");
    c_text->add_option("--target", tr.target, "Target emotion")->capture_default_str();
    c_text->add_option("--model", tr.model, "Translator model (default translator.finetuned_model)");
    c_text->add_option("--out", tr.out, "Output file (default stdout)");
    c_text->callback([&] { action = [&] { return run_translate_text(g, tr); }; });

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "Compute every metric into report.json");
    c_eval->add_option("--corpus", ev.corpus, "passages.jsonl")->check(CLI::ExistingFile);
    c_eval->add_option("--queries", ev.queries, "queries.jsonl")->check(CLI::ExistingFile);
    c_eval->add_option("--synthetic", ev.synthetic, "synthetic.jsonl")->check(CLI::ExistingFile);
    c_eval->add_option("--answers", ev.answers, "answers.jsonl files")->check(CLI::ExistingFile);
    c_eval->add_option("--retrieval", ev.retrieval, "RETRIEVER:CORPUS:RANKINGS:INDEX, repeatable");
    c_eval->add_option("--tagged", ev.tagged, "Tagged contexts for the classifier table")->check(CLI::ExistingFile);
    c_eval->add_option("--round-trip", ev.round_trip, "Round-trip report files")->check(CLI::ExistingFile);
    c_eval->add_option("--out", ev.out, "report.json")->required();
    c_eval->callback([&] { action = [&] { return run_evaluate(g, ev); }; });

    ReportArgs rep;
    auto* c_report = app.add_subcommand("report", "Render report.json as text tables");
    c_report->add_option("--report", rep.report, "report.json")->required()->check(CLI::ExistingFile);
    c_report->add_option("--section", rep.section, "all, qa, psm, retrieval, round-trip, classifier or corpus")
        ->capture_default_str();
    c_report->add_option("--out", rep.out, "Output file, - for stdout")->capture_default_str();
    c_report->callback([&] { action = [&] { return run_report(g, rep); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    auto logger = spdlog::stderr_color_mt("intentrag");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        return action();
    } catch (const BackendError& e) {
        spdlog::error("{}", e.what());
        return 3;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const json::exception& e) {
        spdlog::error("malformed JSON: {}", e.what());
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
}
