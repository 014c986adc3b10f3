#include <doctest.h>

#include "intentrag/reader.hpp"
#include "test_support.hpp"

using namespace intentrag;

namespace {

ReadingContext two_entry_context(std::string qid = "q1") {
    ReadingContext c{std::move(qid), Variant::PsmPre, {}};
    c.entries.push_back({"p1#sarcasm#fd", "Oh sure, it was 1972.", 0, Provenance{"p1", Emotion::sarcasm(), "m", true},
                         std::nullopt, false});
    c.entries.push_back({"p1", "It happened in 1969.", 1, std::nullopt, std::nullopt, false});
    return c;
}

}  // namespace

TEST_SUITE("reader") {

TEST_CASE("regime names round trip") {
    CHECK(all_regimes().size() == 6);
    for (auto r : all_regimes()) CHECK(parse_regime(to_string(r)) == r);
    CHECK(uses_tags(PromptRegime::RwiTagsOracle));
    CHECK(uses_tags(PromptRegime::RwiTagsPredicted));
    CHECK_FALSE(uses_tags(PromptRegime::Rwi));
    CHECK(uses_neutralization(PromptRegime::RwiNeutralizedZeroshot));
    CHECK_THROWS_AS(parse_regime("shouting"), ValidationError);
}

TEST_CASE("base and rwi prompts differ only in the instruction") {
    ReaderOptions o;
    o.model = "r";
    auto ctx = two_entry_context();
    auto base = assemble_prompt(ctx, "When?", PromptRegime::Base, o);
    auto rwi = assemble_prompt(ctx, "When?", PromptRegime::Rwi, o);
    CHECK(base.user == rwi.user);
    CHECK(*base.system == o.templates.base_instruction);
    CHECK(*rwi.system == o.templates.rwi_instruction);
    CHECK(base.user == "Passage 1:\nOh sure, it was 1972.\n\nPassage 2:\nIt happened in 1969.\n\nQuestion: When?\nAnswer:");
    CHECK(assemble_prompt(ctx, "When?", PromptRegime::Base, o).user == base.user);
}

TEST_CASE("tag regimes render markers and demand tags") {
    ReaderOptions o;
    auto ctx = two_entry_context();
    CHECK_THROWS_AS(assemble_prompt(ctx, "When?", PromptRegime::RwiTagsOracle, o), ValidationError);
    auto tagged = with_oracle_tags(ctx);
    auto req = assemble_prompt(tagged, "When?", PromptRegime::RwiTagsOracle, o);
    CHECK(req.system->find(o.templates.tags_instruction) != std::string::npos);
    CHECK(req.user.find("Oh sure, it was 1972.\n[Intent: sarcastic]") != std::string::npos);
    CHECK(req.user.find("It happened in 1969.\n[Intent: not sarcastic]") != std::string::npos);
    o.placement = Placement::Before;
    req = assemble_prompt(tagged, "When?", PromptRegime::RwiTagsOracle, o);
    CHECK(req.user.find("Passage 1:\n[Intent: sarcastic]\nOh sure") != std::string::npos);
    // Untagged regimes ignore tags that are present.
    CHECK(assemble_prompt(tagged, "When?", PromptRegime::Rwi, o).user ==
          assemble_prompt(ctx, "When?", PromptRegime::Rwi, o).user);
}

TEST_CASE("templates load from JSON with defaults for missing keys") {
    testing::ScratchDir dir("reader");
    auto p = dir.write("t.json", R"J({"answer_cue": "A:", "passage_label": "Doc"})J");
    auto t = PromptTemplates::load(p);
    CHECK(t.answer_cue == "A:");
    CHECK(t.passage_label == "Doc");
    CHECK(t.base_instruction == PromptTemplates::defaults().base_instruction);
    CHECK(PromptTemplates::from_json(t.to_json()).to_json() == t.to_json());
}

TEST_CASE("neutralisation keeps order and provenance and drops tags") {
    Gateway g;
    g.set_default_backend(CannedMapBackend::from_json(json::parse(R"J({"rules": [
        {"contains": ["Target emotion: neutral", "Oh sure"], "response": "It was 1972."},
        {"contains": ["Target emotion: neutral"], "pattern": "\\n\\n([\\s\\S]*)$", "response": "$1"}]})J")));
    Translator tr(g, "t");
    auto ctx = with_oracle_tags(two_entry_context());
    NeutralizeStats stats;
    auto n = neutralize_context(ctx, tr, false, &stats);
    REQUIRE(n.entries.size() == 2);
    CHECK(n.entries[0].text == "It was 1972.");
    CHECK(n.entries[1].text == "It happened in 1969.");
    CHECK(n.entries[0].provenance == ctx.entries[0].provenance);
    CHECK(n.entries[0].neutralized);
    CHECK_FALSE(n.entries[0].intent_tag);
    CHECK(stats.translated == 2);
}

TEST_CASE("neutralisation failure keeps text unless fail_hard") {
    Gateway g(testing::gateway_options(0));
    g.set_default_backend(std::make_shared<testing::FlakyBackend>(100, false));
    Translator tr(g, "t");
    auto ctx = two_entry_context();
    NeutralizeStats stats;
    auto n = neutralize_context(ctx, tr, false, &stats);
    CHECK(n.entries[0].text == ctx.entries[0].text);
    CHECK(stats.failed == 2);
    CHECK_THROWS_AS(neutralize_context(ctx, tr, true), BackendError);
}

TEST_CASE("answer_all scores containment and sorts by qid") {
    QuerySet qs({{"q1", "When?", {"1969"}}, {"q2", "Who?", {"Eiffel"}}});
    Gateway g;
    g.set_default_backend(CannedMapBackend::from_json(json::parse(R"J({"rules": [
        {"contains": ["When?"], "response": " 1969 \n"},
        {"contains": ["Who?"], "response": "Someone else"}]})J")));
    ReaderOptions o;
    o.model = "reader";
    std::vector<ReadingContext> ctxs{two_entry_context("q2"), two_entry_context("q1")};
    auto recs = answer_all(ctxs, qs, PromptRegime::Rwi, g, o, 2);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].qid == "q1");
    CHECK(recs[0].generation == "1969");
    CHECK(recs[0].correct);
    CHECK_FALSE(recs[1].correct);
    CHECK(recs[0].variant == Variant::PsmPre);
    CHECK(recs[0].model == "reader");
    CHECK(recs[0].fingerprint == context_fingerprint(ctxs[1]));
    auto s = summarize(recs);
    CHECK(*s.accuracy == doctest::Approx(0.5));

    std::vector<ReadingContext> unknown{two_entry_context("q9")};
    CHECK_THROWS_AS(answer_all(unknown, qs, PromptRegime::Rwi, g, o), ValidationError);
    CHECK(answer_all({}, qs, PromptRegime::Rwi, g, o).empty());
}

TEST_CASE("backend failures become error records") {
    QuerySet qs({{"q1", "When?", {"1969"}}});
    Gateway g(testing::gateway_options(0));
    g.set_default_backend(std::make_shared<testing::FlakyBackend>(100, false));
    std::vector<ReadingContext> ctxs{two_entry_context("q1")};
    auto recs = answer_all(ctxs, qs, PromptRegime::Base, g, ReaderOptions{});
    REQUIRE(recs[0].error);
    CHECK_FALSE(recs[0].correct);
    CHECK(summarize(recs).errors == 1);
    CHECK_FALSE(summarize(recs, true).accuracy);
}

TEST_CASE("answer records round trip") {
    testing::ScratchDir dir("reader");
    std::vector<AnswerRecord> recs{{"q1", PromptRegime::RwiTagsPredicted, "x", true, "f", Variant::PSA, "m", std::nullopt},
                                   {"q2", PromptRegime::Base, "", false, "g", Variant::Base, "m", "boom"}};
    save_answers(dir / "a.jsonl", recs);
    CHECK(load_answers(dir / "a.jsonl") == recs);
}

}
