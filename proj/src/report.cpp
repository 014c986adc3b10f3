#include "intentrag/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>

#include "intentrag/eval.hpp"
#include "intentrag/reader.hpp"

namespace intentrag {

namespace {

std::string pct(const json& v, int digits = 1) {
    if (v.is_null()) return "-";
    return fmt::format("{:.{}f}", v.get<double>() * 100.0, digits);
}

struct QaIndex {
    std::set<std::string> models;
    std::map<std::tuple<std::string, std::string, std::string>, json> acc;
};

QaIndex index_qa(const json& report) {
    QaIndex out;
    if (!report.contains("qa")) return out;
    for (const auto& c : report.at("qa").at("values").at("cells")) {
        const auto model = c.at("model").get<std::string>();
        out.models.insert(model);
        out.acc[{c.at("regime").get<std::string>(), model, c.at("variant").get<std::string>()}] = c.at("accuracy");
    }
    return out;
}

}  // namespace

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        if (width.size() < r.size()) width.resize(r.size(), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        std::string line;
        for (std::size_t i = 0; i < rows[ri].size(); ++i) {
            if (i) line += "  ";
            // first column left-aligned, numbers right-aligned
            line += i == 0 ? fmt::format("{:<{}}", rows[ri][i], width[i]) : fmt::format("{:>{}}", rows[ri][i], width[i]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (ri == 0) {
            std::size_t total = 0;
            for (std::size_t w : width) total += w;
            total += width.empty() ? 0 : 2 * (width.size() - 1);
            out += std::string(total, '-') + "\n";
        }
    }
    return out;
}

std::string render_qa_grid(const json& report) {
    const auto qa = index_qa(report);
    const std::vector<std::pair<std::string, std::string>> columns = {
        {"base", "NQ"}, {"fs", "FS NQ"}, {"psm-pre", "PS-M NQ"}, {"psa", "PS-A NQ"}};
    std::string out = "QA accuracy (%)\n";
    for (const auto regime : all_regimes()) {
        const std::string name = to_string(regime);
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{"model"};
        for (const auto& [_, label] : columns) header.push_back(label);
        rows.push_back(header);
        if (qa.models.empty()) rows.push_back({"-", "-", "-", "-", "-"});
        for (const auto& model : qa.models) {
            std::vector<std::string> row{model};
            for (const auto& [variant, _] : columns) {
                auto it = qa.acc.find({name, model, variant});
                row.push_back(it == qa.acc.end() ? "-" : pct(it->second));
            }
            rows.push_back(std::move(row));
        }
        out += "\n" + name + "\n" + render_table(rows);
    }
    return out;
}

std::string render_psm_grid(const json& report) {
    const auto qa = index_qa(report);
    std::vector<std::vector<std::string>> rows{{"regime", "model", "PS-M pre-fix", "PS-M post-fix"}};
    for (const auto regime : all_regimes()) {
        const std::string name = to_string(regime);
        for (const auto& model : qa.models) {
            auto pre = qa.acc.find({name, model, "psm-pre"});
            auto post = qa.acc.find({name, model, "psm-post"});
            if (pre == qa.acc.end() && post == qa.acc.end()) continue;
            rows.push_back({name, model, pre == qa.acc.end() ? "-" : pct(pre->second),
                            post == qa.acc.end() ? "-" : pct(post->second)});
        }
    }
    return "PS-M placement (%)\n\n" + render_table(rows);
}

std::string render_retrieval_grid(const json& report) {
    std::vector<std::string> header{"retriever", "corpus"};
    for (auto k : kReportDepths) header.push_back("R@" + std::to_string(k));
    for (auto k : kReportDepths) header.push_back("S@" + std::to_string(k));
    std::vector<std::vector<std::string>> rows{header};
    if (report.contains("retrieval")) {
        for (const auto& run : report.at("retrieval")) {
            std::vector<std::string> row{run.at("dimensions").at("retriever").get<std::string>(),
                                         run.at("dimensions").at("corpus").get<std::string>()};
            const auto& v = run.at("values");
            for (const char* m : {"R@", "S@"}) {
                for (auto k : kReportDepths) {
                    const std::string key = m + std::to_string(k);
                    row.push_back(v.contains(key) ? pct(v.at(key)) : "-");
                }
            }
            rows.push_back(std::move(row));
        }
    }
    std::string out = "Retrieval (%)\n\n" + render_table(rows);
    if (report.contains("retrieval")) {
        std::vector<std::vector<std::string>> over{{"retriever", "corpus", "sarcastic share of index", "over@1",
                                                    "over@5", "over@20"}};
        for (const auto& run : report.at("retrieval")) {
            const auto& v = run.at("values");
            auto times = [&](const char* key) {
                return v.contains(key) && !v.at(key).is_null() ? fmt::format("{:.2f}x", v.at(key).get<double>())
                                                               : std::string("-");
            };
            over.push_back({run.at("dimensions").at("retriever").get<std::string>(),
                            run.at("dimensions").at("corpus").get<std::string>(),
                            pct(run.at("metadata").at("sarcastic_fraction")), times("over@1"), times("over@5"),
                            times("over@20")});
        }
        out += "\nOver-representation\n\n" + render_table(over);
    }
    return out;
}

std::string render_round_trip(const json& report) {
    std::vector<std::string> header{"metric"};
    std::vector<std::string> bleu_row{"Average BLEU"};
    std::vector<std::string> bleurt_row{"Average BLEURT"};
    if (report.contains("round_trip")) {
        for (const auto& sys : report.at("round_trip")) {
            header.push_back(sys.at("system").get<std::string>());
            const auto& overall = sys.at("overall");
            bleu_row.push_back(pct(overall.at("bleu_mean"), 2));
            bleurt_row.push_back(overall.contains("bleurt_mean") ? pct(overall.at("bleurt_mean"), 2) : "-");
        }
    }
    return "Round-trip translation (0-100)\n\n" + render_table({header, bleu_row, bleurt_row});
}

std::string render_classifier(const json& report) {
    if (!report.contains("classifier")) return "Intent classifier accuracy (%)\n\n(no tagged contexts)\n";
    const auto& c = report.at("classifier");
    auto cell = [&](const char* key) {
        const auto& j = c.at(key);
        return fmt::format("{} ({}/{})", pct(j.at("accuracy")), j.at("correct").get<std::size_t>(),
                           j.at("total").get<std::size_t>());
    };
    return "Intent classifier accuracy (%)\n\n" +
           render_table({{"", "fact distorted", "no distortion"},
                         {"sarcastic", cell("sarcastic_fact_distorted"), cell("sarcastic_no_distortion")},
                         {"not sarcastic", cell("not_sarcastic_fact_distorted"), cell("not_sarcastic_no_distortion")},
                         {"overall", cell("overall"), ""}});
}

std::string render_corpus_stats(const json& report) {
    if (!report.contains("corpus_stats")) return "";
    const auto& v = report.at("corpus_stats").at("values");
    std::vector<std::vector<std::string>> rows{{"source", "avg length", "KL uni", "KL bi", "KL tri"}};
    for (const auto& [name, len] : v.at("avg_length").items()) {
        std::vector<std::string> row{name, fmt::format("{:.1f}", len.get<double>())};
        if (v.contains("kl") && v.at("kl").contains(name)) {
            const auto& kl = v.at("kl").at(name);
            for (const char* n : {"unigram", "bigram", "trigram"}) row.push_back(fmt::format("{:.3f}", kl.at(n).get<double>()));
        } else {
            row.insert(row.end(), {"-", "-", "-"});
        }
        rows.push_back(std::move(row));
    }
    return "Corpus statistics (KL against the original passages)\n\n" + render_table(rows);
}

std::string render_report(const json& report) {
    std::vector<std::string> parts{render_qa_grid(report), render_psm_grid(report), render_retrieval_grid(report),
                                   render_round_trip(report), render_classifier(report)};
    if (auto s = render_corpus_stats(report); !s.empty()) parts.push_back(s);
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "\n";
        out += parts[i];
    }
    return out;
}

}  // namespace intentrag
