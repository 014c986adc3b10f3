#pragma once

// Aggregates pipeline artifacts into report.json: QA accuracy grid,
// retrieval recall and sarcastic share, over-representation, corpus
// statistics, classifier accuracy and round-trip translation scores.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrag/corpus.hpp"
#include "intentrag/intent.hpp"
#include "intentrag/metrics.hpp"
#include "intentrag/reader.hpp"
#include "intentrag/translator.hpp"

namespace intentrag {

/// Fraction of records marked correct. Throws ValidationError when empty.
double qa_accuracy(std::span<const AnswerRecord> records);

struct MetricReport {
    std::string name;
    json dimensions = json::object();
    json values = json::object();
    json metadata = json::object();

    json to_json() const;
};

inline const std::vector<std::size_t> kReportDepths = {1, 5, 20, 50, 100};

/// One retrieval run over one corpus (e.g. the base index or the index with
/// sarcastic passages injected).
struct RetrievalRun {
    std::string retriever;
    std::string corpus;
    std::vector<RankedList> rankings;
    std::vector<std::string> index_ids;  // everything that could be retrieved
};

/// Correct when the passage text (base or synthetic) contains a gold answer.
CorrectnessOracle make_correctness_oracle(const Corpus& corpus, const SyntheticSet* synthetic,
                                          const QuerySet& queries);

/// Synthetic ids whose emotion is sarcasm, fact-distorted or not.
std::unordered_set<std::string> sarcastic_ids(const SyntheticSet& synthetic);

MetricReport retrieval_report(const RetrievalRun& run, const CorrectnessOracle& correct,
                              const std::unordered_set<std::string>& sarcastic,
                              std::span<const std::size_t> depths = kReportDepths);

/// Accuracy per (regime, model, variant).
MetricReport qa_report(std::span<const AnswerRecord> records);

/// Average length per generator model, the original passages and all
/// synthetic passages combined; KL(original || model) for n = 1, 2, 3.
MetricReport corpus_stats_report(const Corpus& corpus, const SyntheticSet& synthetic);

struct EvalInputs {
    const Corpus* corpus = nullptr;
    const QuerySet* queries = nullptr;
    const SyntheticSet* synthetic = nullptr;
    std::vector<AnswerRecord> answers;
    std::vector<RetrievalRun> retrieval;
    std::vector<ReadingContext> tagged_contexts;
    std::vector<RoundTripReport> round_trips;
    json metadata = json::object();
};

/// Sections are emitted only for inputs that are present.
json build_report(const EvalInputs& inputs);

}  // namespace intentrag
