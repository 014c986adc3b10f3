#include "intentrag/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace intentrag {

std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (unsigned char c : text) {
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            flush();
            out.emplace_back(1, static_cast<char>(c));
        } else {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        }
    }
    flush();
    return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
    NgramCounts counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                          toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
    if (max_n < 1) throw ValidationError("bleu: max_n must be at least 1");
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto c_counts = count_ngrams(cand, static_cast<std::size_t>(n));
        const auto r_counts = count_ngrams(ref, static_cast<std::size_t>(n));
        std::size_t matched = 0, total = 0;
        for (const auto& [gram, count] : c_counts) {
            total += count;
            auto it = r_counts.find(gram);
            if (it != r_counts.end()) matched += std::min(count, it->second);
        }
        double precision;
        if (matched > 0) {
            precision = static_cast<double>(matched) / static_cast<double>(total);
        } else if (n == 1) {
            return 0.0;
        } else {
            precision = 1.0 / static_cast<double>(total + 1);
        }
        log_sum += std::log(precision);
    }
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / max_n);
}

double ngram_kl(std::span<const std::string> corpus_p, std::span<const std::string> corpus_q, int n, double alpha) {
    if (corpus_p.empty() || corpus_q.empty()) throw ValidationError("ngram_kl needs two nonempty corpora");
    if (n < 1) throw ValidationError("ngram_kl: n must be at least 1");
    if (alpha <= 0) throw ValidationError("ngram_kl: smoothing alpha must be positive");

    auto accumulate = [n](std::span<const std::string> corpus, std::size_t& total) {
        NgramCounts counts;
        for (const auto& text : corpus) {
            for (auto& [gram, c] : count_ngrams(metric_tokens(text), static_cast<std::size_t>(n))) {
                counts[gram] += c;
                total += c;
            }
        }
        return counts;
    };
    std::size_t total_p = 0, total_q = 0;
    const auto p = accumulate(corpus_p, total_p);
    const auto q = accumulate(corpus_q, total_q);

    std::vector<const std::vector<std::string>*> vocab;
    for (const auto& [g, _] : p) vocab.push_back(&g);
    for (const auto& [g, _] : q) {
        if (!p.count(g)) vocab.push_back(&g);
    }
    if (vocab.empty()) return 0.0;

    const double v = static_cast<double>(vocab.size());
    const double denom_p = static_cast<double>(total_p) + alpha * v;
    const double denom_q = static_cast<double>(total_q) + alpha * v;
    double kl = 0.0;
    for (const auto* g : vocab) {
        auto ip = p.find(*g);
        auto iq = q.find(*g);
        const double pp = ((ip == p.end() ? 0.0 : static_cast<double>(ip->second)) + alpha) / denom_p;
        const double qq = ((iq == q.end() ? 0.0 : static_cast<double>(iq->second)) + alpha) / denom_q;
        kl += pp * std::log(pp / qq);
    }
    return std::max(0.0, kl);
}

double avg_length(std::span<const std::string> corpus) {
    if (corpus.empty()) throw ValidationError("avg_length of an empty corpus");
    std::size_t tokens = 0;
    for (const auto& t : corpus) tokens += metric_tokens(t).size();
    return static_cast<double>(tokens) / static_cast<double>(corpus.size());
}

AgreementResult agreement(std::span<const std::vector<std::size_t>> votes) {
    AgreementResult out;
    for (std::size_t i = 0; i < votes.size(); ++i) {
        const auto& v = votes[i];
        const std::size_t sum = std::accumulate(v.begin(), v.end(), std::size_t{0});
        if (sum == 0) throw ValidationError("agreement: item " + std::to_string(i) + " has no votes");
        out.per_item.push_back(static_cast<double>(*std::max_element(v.begin(), v.end())) / static_cast<double>(sum));
    }
    if (!out.per_item.empty()) {
        out.mean = std::accumulate(out.per_item.begin(), out.per_item.end(), 0.0) /
                   static_cast<double>(out.per_item.size());
    }
    return out;
}

double recall_at_k(std::span<const RankedList> rankings, const CorrectnessOracle& correct, std::size_t k) {
    if (k == 0) throw ValidationError("recall_at_k: k must be at least 1");
    if (rankings.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : rankings) {
        const std::size_t depth = std::min(k, r.entries.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (correct(r.qid, r.entries[i].pid)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double sarcastic_share_at_k(std::span<const RankedList> rankings, const std::unordered_set<std::string>& sarcastic,
                            std::size_t k) {
    if (k == 0) throw ValidationError("sarcastic_share_at_k: k must be at least 1");
    std::size_t hits = 0, considered = 0;
    for (const auto& r : rankings) {
        const std::size_t depth = std::min(k, r.entries.size());
        considered += depth;
        for (std::size_t i = 0; i < depth; ++i) hits += sarcastic.count(r.entries[i].pid);
    }
    return considered ? static_cast<double>(hits) / static_cast<double>(considered) : 0.0;
}

double overrepresentation(double share, double corpus_fraction) {
    if (!(corpus_fraction > 0)) throw ValidationError("overrepresentation: corpus fraction must be positive");
    return share / corpus_fraction;
}

}  // namespace intentrag
