#include <doctest.h>

#include "intentrag/eval.hpp"
#include "intentrag/report.hpp"
#include "test_support.hpp"

using namespace intentrag;

namespace {

struct Small {
    Corpus corpus{{{"p1", std::nullopt, "Paris has the tower."},
                   {"p2", std::nullopt, "Rome has a colosseum."},
                   {"p3", std::nullopt, "Berlin has a gate."}}};
    QuerySet queries{{{"q1", "Which city has the tower?", {"Paris"}}}};
    SyntheticSet synthetic{{{"p1#sarcasm", {"p1", Emotion::sarcasm(), "gen-a", false}, "Oh sure, Paris, obviously."},
                            {"p2#anger", {"p2", Emotion::parse("anger"), "gen-b", false}, "Rome. Ugh."}}};
};

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("retrieval report values and metadata") {
    Small s;
    RetrievalRun run{"hash", "psa", {{"q1", {{"p1#sarcasm", 1}, {"p2", 0.5}, {"p1", 0.4}}}}, {"p1", "p2", "p3", "p1#sarcasm"}};
    auto oracle = make_correctness_oracle(s.corpus, &s.synthetic, s.queries);
    CHECK(oracle("q1", "p1"));
    CHECK(oracle("q1", "p1#sarcasm"));
    CHECK_FALSE(oracle("q1", "p2"));
    CHECK_FALSE(oracle("q9", "p1"));
    auto m = retrieval_report(run, oracle, sarcastic_ids(s.synthetic)).to_json();
    CHECK(m["values"]["R@1"] == 1.0);
    CHECK(m["values"]["S@1"] == 1.0);
    CHECK(m["values"]["S@5"].get<double>() == doctest::Approx(1.0 / 3));
    CHECK(m["values"]["over@1"].get<double>() == doctest::Approx(4.0));
    CHECK(m["metadata"]["sarcastic_fraction"].get<double>() == doctest::Approx(0.25));
    for (auto k : kReportDepths) CHECK(m["values"].contains("R@" + std::to_string(k)));

    RetrievalRun plain{"hash", "base", {{"q1", {{"p2", 1}}}}, {"p1", "p2", "p3"}};
    CHECK(retrieval_report(plain, oracle, sarcastic_ids(s.synthetic)).to_json()["values"]["over@1"].is_null());
}

TEST_CASE("qa cells group by regime, model and variant") {
    std::vector<AnswerRecord> recs{
        {"q1", PromptRegime::Base, "", true, "", Variant::Base, "a", std::nullopt},
        {"q2", PromptRegime::Base, "", false, "", Variant::Base, "a", std::nullopt},
        {"q1", PromptRegime::Rwi, "", true, "", Variant::FS, "a", std::nullopt},
        {"q1", PromptRegime::Base, "", false, "", Variant::Base, "b", "err"},
    };
    auto cells = qa_report(recs).to_json()["values"]["cells"];
    REQUIRE(cells.size() == 3);
    CHECK(cells[0]["regime"] == "base");
    CHECK(cells[0]["model"] == "a");
    CHECK(cells[0]["accuracy"].get<double>() == doctest::Approx(0.5));
    CHECK(cells[1]["errors"] == 1);
}

TEST_CASE("corpus stats per generator") {
    Small s;
    auto m = corpus_stats_report(s.corpus, s.synthetic).to_json();
    CHECK(m["values"]["avg_length"].contains("gen-a"));
    CHECK(m["values"]["avg_length"].contains("combined"));
    CHECK(m["values"]["kl"]["gen-b"]["trigram"].get<double>() >= 0);
}

TEST_CASE("build_report emits only present sections") {
    EvalInputs in;
    in.metadata = {{"seed", 1}};
    auto r = build_report(in);
    CHECK(r.contains("metadata"));
    CHECK_FALSE(r.contains("qa"));
    CHECK_FALSE(r.contains("retrieval"));
    in.retrieval.push_back({});
    CHECK_THROWS_AS(build_report(in), ValidationError);
}

TEST_CASE("report tables have fixed shapes") {
    json report = json::object();
    auto qa = render_qa_grid(report);
    for (auto r : all_regimes()) CHECK(qa.find("\n" + to_string(r) + "\n") != std::string::npos);
    CHECK(qa.find("PS-A NQ") != std::string::npos);

    auto rt = render_round_trip(json{{"round_trip",
                                      {{{"system", "zero-shot"}, {"rows", json::array()}, {"overall", {{"bleu_mean", 0.0582}}}},
                                       {{"system", "tuned"}, {"rows", json::array()}, {"overall", {{"bleu_mean", 1.0}, {"bleurt_mean", 0.5}}}}}}});
    CHECK(rt.find("Average BLEU") != std::string::npos);
    CHECK(rt.find("5.82") != std::string::npos);
    CHECK(rt.find("100.00") != std::string::npos);
    CHECK(rt.find("50.00") != std::string::npos);

    auto table = render_table({{"name", "v"}, {"long name", "1"}});
    CHECK(table == "name       v\n------------\nlong name  1\n");
}

}
