#pragma once

// Plain-text tables rendered from report.json.

#include <string>
#include <vector>

#include "intentrag/common.hpp"

namespace intentrag {

/// Column-aligned table; the first row is the header.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

/// One block per prompt regime (all six, always); rows are reader models,
/// columns the base, FS, PS-M (pre-fix) and PS-A corpora. Missing cells "-".
std::string render_qa_grid(const json& report);

/// PS-M pre-fix against post-fix per regime and model.
std::string render_psm_grid(const json& report);

/// Retriever x corpus rows, R@K then S@K columns for K in 1, 5, 20, 50, 100.
std::string render_retrieval_grid(const json& report);

/// One column per translation system, rows Average BLEU and Average BLEURT,
/// both scaled to 0-100.
std::string render_round_trip(const json& report);

/// Sarcastic / not sarcastic by fact distorted / not distorted accuracy.
std::string render_classifier(const json& report);

std::string render_corpus_stats(const json& report);

/// Every section whose data is present, separated by blank lines.
std::string render_report(const json& report);

}  // namespace intentrag
