#include <doctest.h>

#include <cstdlib>

#include "intentrag/config.hpp"
#include "test_support.hpp"

using namespace intentrag;

TEST_SUITE("config") {

TEST_CASE("environment interpolation") {
    ::setenv("INTENTRAG_TEST_KEY", "secret", 1);
    ::unsetenv("INTENTRAG_TEST_MISSING");
    CHECK(interpolate_env("Bearer ${INTENTRAG_TEST_KEY}") == "Bearer secret");
    CHECK(interpolate_env("x${INTENTRAG_TEST_MISSING}y") == "xy");
    CHECK(interpolate_env("$${LITERAL}") == "${LITERAL}");
    CHECK_THROWS_AS(interpolate_env("${OPEN"), ValidationError);
}

TEST_CASE("demo config parses and resolves paths") {
    auto cfg = load_config(std::string(INTENTRAG_SOURCE_DIR) + "/demo/config.json");
    CHECK(cfg.seed.value() == 20240917);
    CHECK(cfg.endpoints.at("canned").file->is_absolute());
    CHECK(cfg.reader.models.size() == 2);
    CHECK(cfg.distortion.pool.size() == 5);
    CHECK(cfg.tagger.fallback == "not_sarcastic");
    CHECK(cfg.digest.size() == 64);
    auto gw = make_gateway(cfg);
    ChatRequest r;
    r.model = "identity";
    r.user = "echo me";
    CHECK(gw->complete(r).text == "echo me");
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(parse_config(json::array(), "."), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"endpoints", {{"x", {{"type", "carrier-pigeon"}}}}}}, "."), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"endpoints", {{"x", {{"type", "canned"}}}}}}, "."), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"models", {{"m", "nowhere"}}}}, "."), ValidationError);
    CHECK_THROWS_AS(parse_config(json{{"parallelism", 0}}, "."), ValidationError);
    CHECK_THROWS_AS(parse_config(json::object(), ".").require_seed("distort"), ValidationError);
}

TEST_CASE("overrides change the digest") {
    json raw{{"seed", 1}, {"reader", {{"placement", "after"}}}};
    auto a = parse_config(raw, ".");
    set_config_value(raw, "reader.placement", "before");
    auto b = parse_config(raw, ".");
    CHECK(b.reader.placement == "before");
    CHECK(a.digest != b.digest);
    set_config_value(raw, "new.nested.key", 3);
    CHECK(raw["new"]["nested"]["key"] == 3);
}

TEST_CASE("manifests record stage, version, digest and seed") {
    testing::ScratchDir dir("cfg");
    auto cfg = parse_config(json{{"seed", 9}}, ".");
    auto m = stage_manifest(cfg, "embed", {{"rows", 3}});
    write_manifest(dir / "index.bin", m);
    auto back = json::parse(read_file(dir / "index.bin.manifest.json"));
    CHECK(back["stage"] == "embed");
    CHECK(back["seed"] == 9);
    CHECK(back["tool_version"] == kToolVersion);
    CHECK(back["config_digest"] == cfg.digest);
}

}
