#include "intentrag/eval.hpp"

#include <map>

namespace intentrag {

double qa_accuracy(std::span<const AnswerRecord> records) {
    if (records.empty()) throw ValidationError("qa_accuracy of an empty record set");
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

json MetricReport::to_json() const {
    return json{{"name", name}, {"dimensions", dimensions}, {"values", values}, {"metadata", metadata}};
}

CorrectnessOracle make_correctness_oracle(const Corpus& corpus, const SyntheticSet* synthetic,
                                          const QuerySet& queries) {
    return [&corpus, synthetic, &queries](const std::string& qid, const std::string& pid) {
        const Query* q = queries.find(qid);
        if (!q) return false;
        if (const Passage* p = corpus.find(pid)) return is_correct(p->text, q->answers);
        if (synthetic) {
            if (const SyntheticPassage* s = synthetic->find(pid)) return is_correct(s->text, q->answers);
        }
        return false;
    };
}

std::unordered_set<std::string> sarcastic_ids(const SyntheticSet& synthetic) {
    std::unordered_set<std::string> out;
    for (const auto& s : synthetic.records()) {
        if (s.provenance.emotion.is_sarcasm()) out.insert(s.id);
    }
    return out;
}

MetricReport retrieval_report(const RetrievalRun& run, const CorrectnessOracle& correct,
                              const std::unordered_set<std::string>& sarcastic, std::span<const std::size_t> depths) {
    MetricReport m;
    m.name = "retrieval";
    m.dimensions = {{"retriever", run.retriever}, {"corpus", run.corpus}};
    std::size_t in_index = 0;
    for (const auto& id : run.index_ids) in_index += sarcastic.count(id);
    const double fraction =
        run.index_ids.empty() ? 0.0 : static_cast<double>(in_index) / static_cast<double>(run.index_ids.size());
    for (std::size_t k : depths) {
        const std::string ks = std::to_string(k);
        m.values["R@" + ks] = recall_at_k(run.rankings, correct, k);
        const double share = sarcastic_share_at_k(run.rankings, sarcastic, k);
        m.values["S@" + ks] = share;
        m.values["over@" + ks] = fraction > 0 ? json(overrepresentation(share, fraction)) : json(nullptr);
    }
    m.metadata = {{"queries", run.rankings.size()},
                  {"index_size", run.index_ids.size()},
                  {"sarcastic_in_index", in_index},
                  {"sarcastic_fraction", run.index_ids.empty() ? json(nullptr) : json(fraction)}};
    return m;
}

MetricReport qa_report(std::span<const AnswerRecord> records) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<AnswerRecord>> cells;
    for (const auto& r : records) cells[{to_string(r.regime), r.model, to_string(r.variant)}].push_back(r);
    MetricReport m;
    m.name = "qa_accuracy";
    m.dimensions = {{"axes", {"regime", "model", "variant"}}};
    json rows = json::array();
    for (const auto& [key, recs] : cells) {
        const auto s = summarize(recs);
        rows.push_back({{"regime", std::get<0>(key)},
                        {"model", std::get<1>(key)},
                        {"variant", std::get<2>(key)},
                        {"n", recs.size()},
                        {"correct", s.correct},
                        {"errors", s.errors},
                        {"accuracy", qa_accuracy(recs)}});
    }
    m.values["cells"] = std::move(rows);
    return m;
}

MetricReport corpus_stats_report(const Corpus& corpus, const SyntheticSet& synthetic) {
    std::vector<std::string> original;
    for (const auto& p : corpus.passages()) original.push_back(p.text);
    std::map<std::string, std::vector<std::string>> by_model;
    std::vector<std::string> combined;
    for (const auto& s : synthetic.records()) {
        by_model[s.provenance.generator_model].push_back(s.text);
        combined.push_back(s.text);
    }

    MetricReport m;
    m.name = "corpus_stats";
    m.dimensions = {{"reference", "original"}};
    if (original.empty()) return m;
    m.values["avg_length"]["original"] = avg_length(original);
    auto kl_block = [&](const std::vector<std::string>& texts) {
        return json{{"unigram", ngram_kl(original, texts, 1)},
                    {"bigram", ngram_kl(original, texts, 2)},
                    {"trigram", ngram_kl(original, texts, 3)}};
    };
    for (const auto& [model, texts] : by_model) {
        m.values["avg_length"][model] = avg_length(texts);
        m.values["kl"][model] = kl_block(texts);
    }
    if (!combined.empty()) {
        m.values["avg_length"]["combined"] = avg_length(combined);
        m.values["kl"]["combined"] = kl_block(combined);
    }
    m.metadata = {{"original_passages", original.size()}, {"synthetic_passages", combined.size()}};
    return m;
}

json build_report(const EvalInputs& in) {
    json report = json::object();
    report["metadata"] = in.metadata;

    if (!in.answers.empty()) report["qa"] = qa_report(in.answers).to_json();

    if (!in.retrieval.empty()) {
        if (!in.corpus || !in.queries) throw ValidationError("retrieval metrics need the corpus and queries");
        const auto oracle = make_correctness_oracle(*in.corpus, in.synthetic, *in.queries);
        const auto sarcastic = in.synthetic ? sarcastic_ids(*in.synthetic) : std::unordered_set<std::string>{};
        json runs = json::array();
        for (const auto& run : in.retrieval) runs.push_back(retrieval_report(run, oracle, sarcastic).to_json());
        report["retrieval"] = std::move(runs);
    }

    if (in.corpus && in.synthetic && in.synthetic->size() > 0) {
        report["corpus_stats"] = corpus_stats_report(*in.corpus, *in.synthetic).to_json();
    }

    if (!in.tagged_contexts.empty()) {
        const auto samples = classifier_samples(in.tagged_contexts);
        report["classifier"] = evaluate_classifier(samples).to_json();
    }

    if (!in.round_trips.empty()) {
        json rt = json::array();
        for (const auto& r : in.round_trips) rt.push_back(r.to_json());
        report["round_trip"] = std::move(rt);
    }
    return report;
}

}  // namespace intentrag
