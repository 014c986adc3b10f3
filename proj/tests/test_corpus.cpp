#include <doctest.h>

#include "intentrag/corpus.hpp"
#include "test_support.hpp"

using namespace intentrag;

TEST_SUITE("corpus") {

TEST_CASE("normalize") {
    CHECK(normalize("The  Eiffel Tower!") == "eiffel tower");
    CHECK(normalize("The  Eiffel Tower!", false) == "the eiffel tower");
    CHECK(normalize("1999.99") == "1999 99");
    CHECK(normalize("  A  ") == "a");  // stripping would leave nothing
    CHECK(normalize("An apple") == "apple");
}

TEST_CASE("is_correct uses whole-token runs") {
    std::vector<std::string> tower{"tower"};
    CHECK_FALSE(is_correct("The towering spire.", tower));
    CHECK(is_correct("A tall Tower, built in 1889.", tower));

    std::vector<std::string> gold{"The Eiffel Tower"};
    CHECK(is_correct("Paris is home to the eiffel tower.", gold));
    CHECK_FALSE(is_correct("Paris is home to the eiffel.", gold));

    std::vector<std::string> many{"Nile", "the Nile River"};
    CHECK(matching_answers("The Nile flows north.", many) == std::vector<std::string>{"Nile"});
}

TEST_CASE("Emotion parsing") {
    CHECK(Emotion::parse("Sarcastic").is_sarcasm());
    CHECK(Emotion::parse("happy").name() == "happiness");
    CHECK(Emotion::canonical().size() == 11);
    CHECK(Emotion::parse("relief").name() == "relief");
    CHECK_FALSE(Emotion::parse("relief").is_canonical());
    CHECK_THROWS_AS(Emotion::parse(""), ValidationError);
}

TEST_CASE("synthetic ids") {
    CHECK(synthetic_id("p1", Emotion::sarcasm(), false) == "p1#sarcasm");
    CHECK(synthetic_id("p1", Emotion::sarcasm(), true) == "p1#sarcasm#fd");
}

TEST_CASE("duplicate ids are reported with both line numbers") {
    testing::ScratchDir dir("corpus");
    auto p = dir.write("p.jsonl",
                       "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\"}\n{\"id\":\"c\",\"text\":\"z\"}\n"
                       "{\"id\":\"d\",\"text\":\"w\"}\n{\"id\":\"b\",\"text\":\"v\"}\n");
    try {
        load_corpus(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find('2') != std::string::npos);
        CHECK(msg.find('5') != std::string::npos);
    }
}

TEST_CASE("malformed json names the line") {
    testing::ScratchDir dir("corpus");
    auto p = dir.write("p.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{oops\n");
    try {
        load_corpus(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}

TEST_CASE("an empty file loads with a warning") {
    testing::ScratchDir dir("corpus");
    auto loaded = load_corpus(dir.write("empty.jsonl", ""));
    CHECK(loaded.value.empty());
    CHECK_FALSE(loaded.warnings.empty());
}

TEST_CASE("save/load round trip") {
    testing::ScratchDir dir("corpus");
    Corpus c({{"p1", std::string("T"), "one"}, {"p2", std::nullopt, "two"}});
    save_corpus(dir / "c.jsonl", c);
    auto back = load_corpus(dir / "c.jsonl").value;
    REQUIRE(back.size() == 2);
    CHECK(back.passages()[0] == c.passages()[0]);
    CHECK(back.passages()[1] == c.passages()[1]);

    QuerySet q({{"q1", "who?", {"a", "b"}}});
    save_queries(dir / "q.jsonl", q);
    CHECK(load_queries(dir / "q.jsonl").value.at("q1") == q.at("q1"));

    std::vector<SyntheticPassage> syn{{"p1#sarcasm", {"p1", Emotion::sarcasm(), "m", false}, "oh sure"}};
    save_synthetic(dir / "s.jsonl", syn);
    auto s = load_synthetic(dir / "s.jsonl", &c).value;
    CHECK(s.records()[0] == syn[0]);
    CHECK(s.counterpart("p1", Emotion::sarcasm(), false) != nullptr);
    CHECK(s.counterpart("p1", Emotion::sarcasm(), true) == nullptr);
}

TEST_CASE("synthetic records must reference the base corpus") {
    testing::ScratchDir dir("corpus");
    Corpus c({{"p1", std::nullopt, "one"}});
    std::vector<SyntheticPassage> syn{{"p9#sarcasm", {"p9", Emotion::sarcasm(), "m", false}, "x"}};
    save_synthetic(dir / "s.jsonl", syn);
    CHECK_THROWS_AS(load_synthetic(dir / "s.jsonl", &c), ValidationError);
}

TEST_CASE("empty passage text is rejected") {
    CHECK_THROWS_AS(Corpus({{"p1", std::nullopt, ""}}), ValidationError);
}

}
