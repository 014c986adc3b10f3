#include <doctest.h>

#include <algorithm>

#include "intentrag/vectorstore.hpp"
#include "test_support.hpp"

using namespace intentrag;

namespace {

// Reference ranking: score every row in long double and sort with the
// documented tie rule.
std::vector<std::string> oracle_topk(const std::vector<std::string>& ids, const std::vector<EmbeddingVector>& vecs,
                                     const EmbeddingVector& q, std::size_t k) {
    std::vector<std::pair<long double, std::string>> scored;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        long double s = 0;
        for (std::size_t d = 0; d < q.dim(); ++d) s += (long double)vecs[i].values[d] * q.values[d];
        scored.emplace_back(s, ids[i]);
    }
    std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

std::vector<std::string> pids(const RankedList& r) {
    std::vector<std::string> out;
    for (auto& e : r.entries) out.push_back(e.pid);
    return out;
}

struct RandomSet {
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vecs;
};

RandomSet random_set(std::size_t n, std::size_t dim, std::uint64_t seed, int levels) {
    Rng rng(seed);
    RandomSet s;
    for (std::size_t i = 0; i < n; ++i) {
        // zero-padded ids keep pid order unrelated to insertion order
        s.ids.push_back("v" + std::to_string(rng.next() % 1000000) + "_" + std::to_string(i));
        EmbeddingVector v;
        for (std::size_t d = 0; d < dim; ++d) v.values.push_back(float(int(rng.below(levels)) - levels / 2));
        s.vecs.push_back(std::move(v));
    }
    return s;
}

}  // namespace

TEST_SUITE("vectorstore") {

TEST_CASE("two-way tie orders by pid") {
    std::vector<std::string> ids{"c", "a", "b"};
    std::vector<EmbeddingVector> v{{{1.0f, 0.0f}}, {{1.0f, 0.0f}}, {{0.0f, 1.0f}}};
    auto idx = FlatIndex::build(ids, v);
    auto r = idx.retrieve({{1.0f, 0.0f}}, 2);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0] == ScoredId{"a", 1.0});
    CHECK(r.entries[1] == ScoredId{"c", 1.0});
}

TEST_CASE("k larger than the index returns everything") {
    std::vector<std::string> ids{"a", "b"};
    std::vector<EmbeddingVector> v{{{1.0f}}, {{2.0f}}};
    auto r = FlatIndex::build(ids, v).retrieve({{1.0f}}, 50);
    CHECK(pids(r) == std::vector<std::string>{"b", "a"});
}

TEST_CASE("matches the brute-force oracle with many ties") {
    auto s = random_set(300, 8, 11, 3);
    auto idx = FlatIndex::build(s.ids, s.vecs);
    Rng rng(99);
    for (int q = 0; q < 30; ++q) {
        EmbeddingVector query;
        for (int d = 0; d < 8; ++d) query.values.push_back(float(int(rng.below(3)) - 1));
        CHECK(pids(idx.retrieve(query, 25)) == oracle_topk(s.ids, s.vecs, query, 25));
    }
}

TEST_CASE("parallel scan equals serial scan and top-k is a prefix of top-2k") {
    auto s = random_set(500, 16, 5, 5);
    auto idx = FlatIndex::build(s.ids, s.vecs);
    Rng rng(1);
    for (int q = 0; q < 10; ++q) {
        EmbeddingVector query;
        for (int d = 0; d < 16; ++d) query.values.push_back(float(rng.uniform() - 0.5));
        auto serial = idx.retrieve(query, 20, 1);
        CHECK(idx.retrieve(query, 20, 4) == serial);
        auto narrow = pids(serial);
        auto wide = pids(idx.retrieve(query, 40));
        CHECK(std::equal(narrow.begin(), narrow.end(), wide.begin()));
    }
}

TEST_CASE("build validation") {
    std::vector<std::string> ids{"a", "b"};
    std::vector<EmbeddingVector> bad{{{1.0f, 0.0f}}, {{1.0f}}};
    try {
        FlatIndex::build(ids, bad);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
    std::vector<std::string> dup{"a", "a"};
    std::vector<EmbeddingVector> ok{{{1.0f}}, {{1.0f}}};
    CHECK_THROWS_AS(FlatIndex::build(dup, ok), ValidationError);
    CHECK_THROWS_AS(FlatIndex::build(std::span<const std::string>{}, std::span<const EmbeddingVector>{}),
                    ValidationError);
    std::vector<EmbeddingVector> nan{{{1.0f}}, {{std::numeric_limits<float>::quiet_NaN()}}};
    CHECK_THROWS_AS(FlatIndex::build(ids, nan), ValidationError);
}

TEST_CASE("save and load preserve the index") {
    testing::ScratchDir dir("vs");
    auto s = random_set(50, 4, 2, 7);
    auto idx = FlatIndex::build(s.ids, s.vecs);
    idx.save(dir / "i.bin");
    CHECK(FlatIndex::load(dir / "i.bin") == idx);
    dir.write("junk.bin", "not an index");
    CHECK_THROWS_AS(FlatIndex::load(dir / "junk.bin"), ValidationError);
}

TEST_CASE("hash embedder is deterministic, unit-norm and role independent") {
    HashEmbedder e(32, 9);
    auto a = e.embed("Eiffel Tower in Paris");
    CHECK(a == e.embed("Eiffel Tower in Paris"));
    double norm = 0;
    for (float x : a.values) norm += double(x) * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
    std::vector<std::string> t{"Eiffel Tower in Paris"};
    CHECK(e.embed_batch(t, EmbedRole::Query)[0] == e.embed_batch(t, EmbedRole::Passage)[0]);
    CHECK_FALSE(HashEmbedder(32, 10).embed("Eiffel Tower in Paris") == a);
    CHECK_THROWS_AS(e.embed_batch({}, EmbedRole::Query), ValidationError);
}

TEST_CASE("inject leaves the source index untouched and rejects collisions") {
    Corpus corpus({{"p1", std::nullopt, "alpha"}, {"p2", std::nullopt, "beta"}});
    testing::TableEmbedder emb(2, {{"alpha", {1, 0}}, {"beta", {0, 1}}, {"gamma", {1, 1}}});
    auto idx = index_corpus(corpus, emb, 1);
    std::vector<SyntheticPassage> syn{{"p1#sarcasm", {"p1", Emotion::sarcasm(), "m", false}, "gamma"}};
    auto bigger = inject(idx, syn, emb);
    CHECK(idx.size() == 2);
    CHECK(bigger.size() == 3);
    CHECK(bigger.contains("p1#sarcasm"));
    std::vector<SyntheticPassage> clash{{"p1", {"p1", Emotion::sarcasm(), "m", false}, "gamma"}};
    CHECK_THROWS_AS(inject(idx, clash, emb), ValidationError);
}

TEST_CASE("rankings round trip through JSONL") {
    testing::ScratchDir dir("vs");
    std::vector<RankedList> r{{"q1", {{"a", 0.5}, {"b", 0.25}}}, {"q2", {}}};
    save_rankings(dir / "r.jsonl", r);
    CHECK(load_rankings(dir / "r.jsonl") == r);
}

TEST_CASE("http embedder parses the embeddings API shape") {
    testing::LocalServer local;
    auto& srv = local.server;
    srv.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        json data = json::array();
        // reply out of order to exercise the index field
        for (int i = int(body["input"].size()) - 1; i >= 0; --i)
            data.push_back({{"index", i}, {"embedding", {double(i), 1.0}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    local.start();

    HttpEmbedder::Options o;
    o.endpoint.base_url = local.url("/v1");
    o.query_model = "m";
    o.batch_size = 2;
    HttpEmbedder e(o);
    std::vector<std::string> texts{"a", "b", "c"};
    auto out = e.embed_batch(texts, EmbedRole::Passage);
    REQUIRE(out.size() == 3);
    CHECK(out[0].values == std::vector<float>{0, 1});
    CHECK(out[1].values == std::vector<float>{1, 1});
    CHECK(out[2].values == std::vector<float>{0, 1});  // second batch restarts at index 0
}

}
