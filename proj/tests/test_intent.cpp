#include <doctest.h>

#include "intentrag/intent.hpp"
#include "test_support.hpp"

using namespace intentrag;

namespace {

class FailingClassifier final : public SarcasmClassifier {
public:
    std::vector<ClassifierScore> classify(std::span<const std::string>) override {
        ++calls;
        throw BackendError("classifier down");
    }
    int calls = 0;
};

}  // namespace

TEST_SUITE("intent") {

TEST_CASE("oracle tags follow provenance") {
    CHECK_FALSE(tag_oracle(std::optional<Provenance>{}).sarcastic());
    CHECK(tag_oracle(Provenance{"p", Emotion::sarcasm(), "m", true}).sarcastic());
    CHECK(tag_oracle(Provenance{"p", Emotion::sarcasm(), "m", false}).sarcastic());
    CHECK_FALSE(tag_oracle(Provenance{"p", Emotion::parse("anger"), "m", false}).sarcastic());
    CHECK(tag_oracle(std::optional<Provenance>{}).source == IntentTag::Source::Oracle);
}

TEST_CASE("render and strip are inverse for both placements") {
    const std::vector<std::string> texts{"plain", "two\nlines", "", "ends with newline\n",
                                         "[Intent: sarcastic] looks like a marker"};
    for (auto placement : {Placement::Before, Placement::After}) {
        for (auto label : {IntentTag::Label::Sarcastic, IntentTag::Label::NotSarcastic}) {
            for (const auto& t : texts) {
                IntentTag tag{label, IntentTag::Source::Oracle, std::nullopt};
                auto back = strip_tag(render_tag(t, tag, placement), placement);
                REQUIRE(back);
                CHECK(back->first == t);
                CHECK(back->second == label);
            }
        }
    }
    CHECK(render_tag("x", {IntentTag::Label::Sarcastic, IntentTag::Source::Oracle, std::nullopt}, Placement::After) == "x\n[Intent: sarcastic]");
    CHECK(render_tag("x", {IntentTag::Label::NotSarcastic, IntentTag::Source::Oracle, std::nullopt}, Placement::Before) == "[Intent: not sarcastic]\nx");
    CHECK_FALSE(strip_tag("no marker", Placement::After));
    CHECK_THROWS_AS(parse_placement("middle"), ValidationError);
}

TEST_CASE("lexical tagger flags heavy cues only") {
    CHECK(tag_lexical("Oh sure, because everyone knows towers build themselves. Brilliant!").sarcastic());
    CHECK_FALSE(tag_lexical("The tower was completed in 1889.").sarcastic());
}

TEST_CASE("remote tagger falls back per batch") {
    auto c = std::make_shared<FailingClassifier>();
    RemoteTagger t(c, FallbackPolicy::NotSarcastic, 2);
    std::vector<std::string> texts{"a", "b", "c"};
    auto tags = t.tag_batch(texts);
    REQUIRE(tags.size() == 3);
    for (auto& tag : tags) {
        CHECK_FALSE(tag.sarcastic());
        CHECK_FALSE(tag.confidence);
    }
    CHECK(c->calls == 2);
    RemoteTagger strict(c, FallbackPolicy::Error);
    CHECK_THROWS_AS(strict.tag("a"), BackendError);
}

TEST_CASE("http classifier reads label lists") {
    testing::LocalServer local;
    auto& srv = local.server;
    srv.Post("/classify", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        json out = json::array();
        for (const auto& t : body["texts"]) {
            const bool s = t.get<std::string>().find("sure") != std::string::npos;
            out.push_back({{"label", s ? "LABEL_1" : "not sarcastic"}, {"score", s ? 0.9 : 0.2}});
        }
        res.set_content(out.dump(), "application/json");
    });
    local.start();
    auto c = std::make_shared<HttpSarcasmClassifier>(HttpEndpoint{local.url(), "", 5},
                                                     "/classify", testing::fast_retry());
    RemoteTagger t(c, FallbackPolicy::Error);
    std::vector<std::string> texts{"oh sure", "plain"};
    auto tags = t.tag_batch(texts);
    CHECK(tags[0].sarcastic());
    CHECK(*tags[0].confidence == doctest::Approx(0.9));
    CHECK_FALSE(tags[1].sarcastic());
}

TEST_CASE("classifier table cells") {
    std::vector<ClassifierSample> s{{true, true, true}, {true, true, false}, {true, false, true},
                                    {false, false, false}, {false, true, true}};
    auto t = evaluate_classifier(s);
    CHECK(*t.cells[0][0].accuracy() == doctest::Approx(0.5));
    CHECK(*t.cells[0][1].accuracy() == 1.0);
    CHECK(*t.cells[1][0].accuracy() == 0.0);
    CHECK(*t.cells[1][1].accuracy() == 1.0);
    CHECK(t.overall.correct == 3);
    CHECK(t.overall.total == 5);
    CHECK(t.to_json()["overall"]["accuracy"].get<double>() == doctest::Approx(0.6));
}

TEST_CASE("classifier samples skip untagged entries") {
    ReadingContext ctx{"q1", Variant::FS, {}};
    ctx.entries.push_back({"a", "x", 0, Provenance{"a", Emotion::sarcasm(), "m", true},
                           IntentTag{IntentTag::Label::Sarcastic, IntentTag::Source::Oracle, std::nullopt}, false});
    ctx.entries.push_back({"b", "y", 1, std::nullopt, std::nullopt, false});
    std::vector<ReadingContext> v{ctx};
    auto s = classifier_samples(v);
    REQUIRE(s.size() == 1);
    CHECK(s[0].sarcastic);
    CHECK(s[0].fact_distorted);
    CHECK(s[0].predicted_sarcastic);
}

}
