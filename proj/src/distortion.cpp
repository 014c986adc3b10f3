#include "intentrag/distortion.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>

namespace intentrag {

namespace {

constexpr std::string_view kSlot = "{passage}";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool looks_like_preamble(std::string_view first_line) {
    const std::string l = lower(trim(first_line));
    static const char* kOpeners[] = {"here is", "here's", "here are", "below is", "the following is",
                                     "sure, here", "sure! here", "certainly, here", "certainly! here",
                                     "okay, here", "ok, here", "rewritten passage", "rewritten statement"};
    for (const char* o : kOpeners) {
        if (l.rfind(o, 0) == 0) return true;
    }
    return false;
}

}  // namespace

std::string EmotionPrompt::render(std::string_view passage) const {
    std::string out = text;
    auto pos = out.find(kSlot);
    if (pos == std::string::npos) throw ValidationError("template for " + emotion.name() + " lacks {passage}");
    out.replace(pos, kSlot.size(), passage);
    return out;
}

// ---------------------------------------------------------------------------

PromptRegistry PromptRegistry::defaults() {
    return parse(default_emotion_prompts());
}

PromptRegistry PromptRegistry::parse(std::string_view text) {
    PromptRegistry reg;
    std::optional<EmotionPrompt> current;
    std::string body;
    auto flush = [&] {
        if (!current) return;
        current->text = trim(body);
        if (current->text.empty()) throw ValidationError("empty template for " + current->emotion.name());
        if (current->text.find(kSlot) == std::string::npos) {
            throw ValidationError("template for " + current->emotion.name() + " lacks the {passage} slot");
        }
        reg.set(std::move(*current));
        current.reset();
        body.clear();
    };

    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.size() > 2 && t.front() == '[' && t.back() == ']') {
            flush();
            auto words = split(t.substr(1, t.size() - 2), ' ');
            words.erase(std::remove(words.begin(), words.end(), std::string()), words.end());
            if (words.empty() || words.size() > 2 || (words.size() == 2 && words[1] != "placeholder")) {
                throw ValidationError("bad template header: " + t);
            }
            current = EmotionPrompt{Emotion::parse(words[0]), "", words.size() == 2};
            continue;
        }
        if (!current) {
            if (t.empty() || t.front() == '#') continue;
            throw ValidationError("template text outside a section: " + t);
        }
        body += line;
        body += '\n';
    }
    flush();
    return reg;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

std::string PromptRegistry::serialize() const {
    std::string out;
    for (const auto& [emotion, prompt] : prompts_) {
        if (!out.empty()) out += '\n';
        out += "[" + emotion.name() + (prompt.placeholder ? " placeholder]\n" : "]\n");
        out += prompt.text;
        out += '\n';
    }
    return out;
}

void PromptRegistry::set(EmotionPrompt prompt) {
    if (trim(prompt.text).empty()) throw ValidationError("empty template for " + prompt.emotion.name());
    if (prompt.text.find(kSlot) == std::string::npos) {
        throw ValidationError("template for " + prompt.emotion.name() + " lacks the {passage} slot");
    }
    auto key = prompt.emotion;
    prompts_[key] = std::move(prompt);
}

const EmotionPrompt* PromptRegistry::find(const Emotion& emotion) const {
    auto it = prompts_.find(emotion);
    return it == prompts_.end() ? nullptr : &it->second;
}

std::vector<Emotion> PromptRegistry::emotions() const {
    std::vector<Emotion> out;
    for (const auto& [e, _] : prompts_) out.push_back(e);
    return out;
}

// ---------------------------------------------------------------------------

ModelPool::ModelPool(std::vector<std::string> models, std::uint64_t seed)
    : models_(std::move(models)), seed_(seed) {
    if (models_.empty()) throw ValidationError("model pool must name at least one model");
}

const std::string& ModelPool::assign(std::string_view passage_id) const {
    const std::uint64_t h = keyed_hash(seed_, {"model-pool", passage_id});
    return models_[static_cast<std::size_t>(unit_interval(h) * static_cast<double>(models_.size()))];
}

std::pair<std::string, bool> strip_preamble(std::string_view text) {
    const auto first_nl = text.find('\n');
    const std::string_view first_line = text.substr(0, first_nl);
    if (!looks_like_preamble(first_line)) return {std::string(text), false};
    // First blank line: two newlines separated only by spaces or tabs.
    std::size_t pos = first_nl;
    while (pos != std::string_view::npos) {
        std::size_t next = text.find('\n', pos + 1);
        const auto between = text.substr(pos + 1, next == std::string_view::npos ? text.size() - pos - 1 : next - pos - 1);
        if (next != std::string_view::npos && trim(between).empty()) {
            auto rest = trim(text.substr(next + 1));
            if (rest.empty()) break;
            return {rest, true};
        }
        pos = next;
    }
    return {std::string(text), false};
}

json DistortionManifest::to_json() const {
    json failures_json = json::array();
    for (const auto& f : failures) {
        failures_json.push_back({{"source_id", f.source_id},
                                 {"emotion", f.emotion.name()},
                                 {"fact_distorted", f.fact_distorted},
                                 {"error", f.error}});
    }
    return json{{"requested", requested},
                {"produced", produced},
                {"preambles_stripped", preambles_stripped},
                {"per_model", per_model},
                {"per_emotion", per_emotion},
                {"fact_distorted", fact_distorted},
                {"failures", std::move(failures_json)}};
}

// ---------------------------------------------------------------------------

Distorter::Distorter(Gateway& gateway, PromptRegistry registry, ModelPool pool, DistortionOptions options)
    : gateway_(gateway), registry_(std::move(registry)), pool_(std::move(pool)), options_(options) {}

ChatRequest Distorter::transform_request(std::string_view passage_text, const Emotion& emotion,
                                         const std::string& model) const {
    const auto* prompt = registry_.find(emotion);
    if (!prompt) throw ValidationError("no transformation template registered for emotion \"" + emotion.name() + "\"");
    ChatRequest req;
    req.model = model;
    req.user = prompt->render(passage_text);
    req.temperature = options_.temperature;
    req.max_tokens = options_.max_tokens;
    req.seed = options_.seed;
    return req;
}

ChatRequest Distorter::distortion_request(std::string_view passage_text, std::span<const std::string> answers,
                                          const std::string& model) const {
    std::string prompt =
        "Rewrite the following passage so that its factual details, such as names, dates, numbers and places, "
        "are changed to be incorrect. Keep the writing style, tone and length similar to the original. "
        "Reply with the rewritten passage only.";
    const auto hits = matching_answers(passage_text, answers);
    for (const auto& a : hits) {
        prompt += "\nThe passage contains the fact \"" + a + "\". You must alter this specific fact so that the "
                  "passage no longer states \"" + a + "\".";
    }
    prompt += "\n\nPassage:\n";
    prompt += passage_text;

    ChatRequest req;
    req.model = model;
    req.user = std::move(prompt);
    req.temperature = options_.temperature;
    req.max_tokens = options_.max_tokens;
    req.seed = options_.seed;
    return req;
}

std::string Distorter::run(ChatRequest req, bool* stripped) const {
    auto text = trim(gateway_.complete(req).text);
    if (text.empty()) {
        // An identical retry would be served from the cache, so perturb the seed.
        req.seed = req.seed.value_or(0) + 1;
        text = trim(gateway_.complete(req).text);
        if (text.empty()) throw BackendError("model " + req.model + " returned empty output twice");
    }
    auto [clean, fired] = strip_preamble(text);
    if (fired) {
        spdlog::info("stripped a meta preamble from {} output", req.model);
        if (stripped) *stripped = true;
    }
    return clean;
}

SyntheticPassage Distorter::transform(const Passage& passage, const Emotion& emotion) const {
    const auto& model = pool_.assign(passage.id);
    auto req = transform_request(passage.text, emotion, model);
    SyntheticPassage out;
    out.id = synthetic_id(passage.id, emotion, false);
    out.provenance = {passage.id, emotion, model, false};
    out.text = run(std::move(req), nullptr);
    return out;
}

std::string Distorter::distort_facts(const Passage& passage, std::span<const std::string> answers) const {
    return run(distortion_request(passage.text, answers, pool_.assign(passage.id)), nullptr);
}

SyntheticPassage Distorter::make_fact_distorted_sarcastic(const Passage& passage,
                                                          std::span<const std::string> answers) const {
    const auto& model = pool_.assign(passage.id);
    const std::string distorted = distort_facts(passage, answers);
    SyntheticPassage out;
    out.id = synthetic_id(passage.id, Emotion::sarcasm(), true);
    out.provenance = {passage.id, Emotion::sarcasm(), model, true};
    out.text = run(transform_request(distorted, Emotion::sarcasm(), model), nullptr);
    return out;
}

DistortionResult Distorter::transform_corpus(const Corpus& corpus, std::span<const Emotion> emotions,
                                             const std::map<std::string, std::vector<std::string>>* fd_answers,
                                             std::size_t parallelism) const {
    for (const auto& e : emotions) {
        if (!registry_.find(e)) throw ValidationError("no transformation template registered for emotion \"" + e.name() + "\"");
    }
    struct Job {
        const Passage* passage;
        Emotion emotion;
        const std::vector<std::string>* answers;  // set for fact-distorted jobs
    };
    std::vector<Job> jobs;
    for (const auto& p : corpus.passages()) {
        for (const auto& e : emotions) jobs.push_back({&p, e, nullptr});
        if (fd_answers) {
            if (auto it = fd_answers->find(p.id); it != fd_answers->end()) jobs.push_back({&p, Emotion::sarcasm(), &it->second});
        }
    }

    struct Slot {
        std::optional<SyntheticPassage> record;
        std::string error;
        bool stripped = false;
    };
    std::vector<Slot> slots(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& job = jobs[i];
            try {
                if (job.answers) {
                    slots[i].record = make_fact_distorted_sarcastic(*job.passage, *job.answers);
                } else {
                    const auto& model = pool_.assign(job.passage->id);
                    SyntheticPassage s;
                    s.id = synthetic_id(job.passage->id, job.emotion, false);
                    s.provenance = {job.passage->id, job.emotion, model, false};
                    s.text = run(transform_request(job.passage->text, job.emotion, model), &slots[i].stripped);
                    slots[i].record = std::move(s);
                }
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };
    parallelism = std::max<std::size_t>(1, std::min(parallelism, jobs.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < parallelism; ++t) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();

    DistortionResult result;
    result.manifest.requested = jobs.size();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto& slot = slots[i];
        if (!slot.record) {
            result.manifest.failures.push_back({jobs[i].passage->id, jobs[i].emotion, jobs[i].answers != nullptr, slot.error});
            spdlog::warn("transform failed for {} / {}: {}", jobs[i].passage->id, jobs[i].emotion.name(), slot.error);
            continue;
        }
        auto& m = result.manifest;
        ++m.produced;
        ++m.per_model[slot.record->provenance.generator_model];
        ++m.per_emotion[slot.record->provenance.emotion.name()];
        if (slot.record->provenance.fact_distorted) ++m.fact_distorted;
        if (slot.stripped) ++m.preambles_stripped;
        result.records.push_back(std::move(*slot.record));
    }
    return result;
}

}  // namespace intentrag
