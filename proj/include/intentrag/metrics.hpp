#pragma once

// Pure metric functions. Text metrics share one tokenizer: ASCII lowercase,
// punctuation split into standalone tokens, whitespace separation.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "intentrag/vectorstore.hpp"

namespace intentrag {

std::vector<std::string> metric_tokens(std::string_view text);

/// Sentence BLEU in [0, 1]: geometric mean of clipped n-gram precisions for
/// n = 1..max_n times the brevity penalty. A zero count at n >= 2 is smoothed
/// to (0 + 1) / (total + 1); a zero unigram precision gives 0.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

/// KL(P || Q) in nats between the n-gram distributions of two corpora, with
/// add-`alpha` smoothing over the union vocabulary. Throws ValidationError if
/// either corpus is empty.
double ngram_kl(std::span<const std::string> corpus_p, std::span<const std::string> corpus_q, int n,
                double alpha = 1.0);

/// Mean token count per text. Throws ValidationError on an empty corpus.
double avg_length(std::span<const std::string> corpus);

struct AgreementResult {
    std::vector<double> per_item;
    double mean = 0.0;
};

/// Per item: share of votes held by the most chosen label.
AgreementResult agreement(std::span<const std::vector<std::size_t>> votes);

using CorrectnessOracle = std::function<bool(const std::string& qid, const std::string& pid)>;

/// Fraction of rankings with a correct passage among their first k entries.
double recall_at_k(std::span<const RankedList> rankings, const CorrectnessOracle& correct, std::size_t k);

/// Sarcastic entries among every ranking's top-k, divided by the number of
/// entries considered (queries x k when every list is at least k long).
double sarcastic_share_at_k(std::span<const RankedList> rankings, const std::unordered_set<std::string>& sarcastic,
                            std::size_t k);

/// share / corpus_fraction. Throws ValidationError when corpus_fraction <= 0.
double overrepresentation(double share, double corpus_fraction);

}  // namespace intentrag
