#include <doctest.h>

#include "intentrag/gateway.hpp"
#include "test_support.hpp"

using namespace intentrag;

namespace {

ChatRequest req(std::string user, std::string model = "m") {
    ChatRequest r;
    r.model = std::move(model);
    r.user = std::move(user);
    return r;
}

Gateway::Options quick(std::size_t in_flight = 8) {
    Gateway::Options o;
    o.retry = testing::fast_retry();
    o.max_in_flight = in_flight;
    return o;
}

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("request digest covers every field") {
    auto a = req("hi");
    auto base = request_digest(a);
    CHECK(request_digest(a) == base);
    auto b = a;
    b.system = "s";
    CHECK(request_digest(b) != base);
    b = a;
    b.temperature = 0.5;
    CHECK(request_digest(b) != base);
    b = a;
    b.seed = 1;
    CHECK(request_digest(b) != base);
    b = a;
    b.model = "other";
    CHECK(request_digest(b) != base);
    b = a;
    b.max_tokens = 7;
    CHECK(request_digest(b) != base);
}

TEST_CASE("repeated requests are served from the memory cache") {
    auto backend = std::make_shared<testing::SlowBackend>(0);
    Gateway g(quick());
    g.set_default_backend(backend);
    CHECK_FALSE(g.complete(req("x")).cached);
    auto again = g.complete(req("x"));
    CHECK(again.cached);
    CHECK(again.text == "x");
    CHECK(backend->calls == 1);
    CHECK(g.stats().cache_hits == 1);
}

TEST_CASE("disk cache survives a new gateway") {
    testing::ScratchDir dir("gw");
    auto backend = std::make_shared<testing::SlowBackend>(0);
    auto o = quick();
    o.cache_dir = dir.path();
    {
        Gateway g(o);
        g.set_default_backend(backend);
        g.complete(req("persist me"));
    }
    Gateway g2(o);
    g2.set_default_backend(backend);
    CHECK(g2.complete(req("persist me")).cached);
    CHECK(backend->calls == 1);
}

TEST_CASE("retryable failures are retried, then succeed") {
    auto backend = std::make_shared<testing::FlakyBackend>(2);
    Gateway g(quick());
    g.set_default_backend(backend);
    CHECK(g.complete(req("ok")).text == "ok");
    CHECK(backend->calls == 3);
}

TEST_CASE("retries are bounded and non-retryable errors surface at once") {
    auto flaky = std::make_shared<testing::FlakyBackend>(10);
    Gateway g(quick());
    g.set_default_backend(flaky);
    CHECK_THROWS_AS(g.complete(req("a")), BackendError);
    CHECK(flaky->calls == 4);

    auto hard = std::make_shared<testing::FlakyBackend>(10, false);
    Gateway g2(quick());
    g2.set_default_backend(hard);
    CHECK_THROWS_AS(g2.complete(req("a")), BackendError);
    CHECK(hard->calls == 1);
    CHECK(g2.stats().failures == 1);
}

TEST_CASE("backoff honours the server hint and the cap") {
    RetryPolicy p{3, 100, 1000};
    CHECK(backoff_delay_ms(p, 0) == 100);
    CHECK(backoff_delay_ms(p, 2) == 400);
    CHECK(backoff_delay_ms(p, 10) == 1000);
    CHECK(backoff_delay_ms(p, 0, 300) == 300);
    CHECK(backoff_delay_ms(p, 0, 5000) == 1000);
}

TEST_CASE("complete_many keeps input order and bounds concurrency") {
    auto backend = std::make_shared<testing::SlowBackend>(15);
    Gateway g(quick(2));
    g.set_default_backend(backend);
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 12; ++i) reqs.push_back(req("r" + std::to_string(i)));
    auto out = g.complete_many(reqs, 6);
    REQUIRE(out.size() == 12);
    for (int i = 0; i < 12; ++i) {
        REQUIRE(out[i].ok());
        CHECK(out[i].response->text == "r" + std::to_string(i));
    }
    CHECK(backend->peak <= 2);
}

TEST_CASE("complete_many collects failures per request") {
    auto backend = std::make_shared<testing::SlowBackend>(0, "bad");
    Gateway g(quick());
    g.set_default_backend(backend);
    std::vector<ChatRequest> reqs{req("a"), req("bad"), req("c")};
    auto out = g.complete_many(reqs, 2);
    CHECK(out[0].ok());
    CHECK_FALSE(out[1].ok());
    CHECK(out[1].error.find("refused") != std::string::npos);
    CHECK(out[2].ok());
    CHECK_THROWS_AS(g.complete_many(reqs, 1, true), BackendError);
}

TEST_CASE("identical concurrent requests reach the backend once") {
    auto backend = std::make_shared<testing::SlowBackend>(30);
    Gateway g(quick());
    g.set_default_backend(backend);
    std::vector<ChatRequest> reqs(6, req("same"));
    auto out = g.complete_many(reqs, 6);
    for (auto& o : out) CHECK(o.response->text == "same");
    CHECK(backend->calls == 1);
}

TEST_CASE("routing by model name") {
    Gateway g(quick());
    g.set_default_backend(std::make_shared<EchoBackend>());
    g.route("canned", std::make_shared<CannedMapBackend>(std::vector<CannedMapBackend::Rule>{}, "fixed"));
    CHECK(g.complete(req("hello")).text == "hello");
    CHECK(g.complete(req("hello", "canned")).text == "fixed");
}

TEST_CASE("invalid requests are rejected before reaching a backend") {
    Gateway g(quick());
    g.set_default_backend(std::make_shared<EchoBackend>());
    CHECK_THROWS_AS(g.complete(req("   ")), ValidationError);
    auto r = req("x");
    r.max_tokens = 0;
    CHECK_THROWS_AS(g.complete(r), ValidationError);
    CHECK_THROWS_AS(g.complete_many(std::vector<ChatRequest>{req("x")}, 0), ValidationError);
}

TEST_CASE("canned map: first matching rule wins and groups substitute") {
    auto b = CannedMapBackend::from_json(json::parse(R"J({
        "rules": [
            {"contains": ["Question"], "pattern": "Question: (\\w+)", "response": "about $1"},
            {"contains": ["Question"], "response": "never reached"}
        ],
        "default": "fallback"})J"));
    CHECK(b->complete(req("Question: towers?")) == "about towers");
    CHECK(b->complete(req("nothing")) == "fallback");
    auto strict = CannedMapBackend::from_json(json::parse(R"J({"rules": []})J"));
    CHECK_THROWS_AS(strict->complete(req("x")), BackendError);
}

TEST_CASE("scripted backend replays exact turns") {
    auto b = ScriptedBackend::from_json(json::parse(R"J({"turns":[{"system":"s","user":"u","response":"r"}]})J"));
    auto r = req("u");
    r.system = "s";
    CHECK(b->complete(r) == "r");
    CHECK_THROWS_AS(b->complete(req("u")), BackendError);
}

TEST_CASE("http backend retries a 429 and reads the chat reply") {
    testing::LocalServer local;
    auto& srv = local.server;
    std::atomic<int> hits{0};
    srv.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
        if (hits++ == 0) {
            res.status = 429;
            res.set_header("Retry-After", "0");
            return;
        }
        auto body = json::parse(r.body);
        std::string user = body["messages"].back()["content"];
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "re: " + user}}}}}}}.dump(),
                        "application/json");
    });
    local.start();

    Gateway g(quick());
    g.set_default_backend(std::make_shared<HttpChatBackend>(
        HttpEndpoint{local.url("/v1"), "key", 5}));
    auto out = g.complete(req("ping"));
    CHECK(out.text == "re: ping");
    CHECK(hits == 2);
}

TEST_CASE("client errors are not retried") {
    testing::LocalServer local;
    auto& srv = local.server;
    std::atomic<int> hits{0};
    srv.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    local.start();
    HttpChatBackend b({local.url(), "", 5});
    try {
        with_retries(testing::fast_retry(), [&] { return b.complete(req("x")); });
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK_FALSE(e.retryable());
    }
    CHECK(hits == 1);
}

}
