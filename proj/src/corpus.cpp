#include "intentrag/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace intentrag {

namespace {

const std::map<std::string, std::string, std::less<>>& emotion_aliases() {
    static const std::map<std::string, std::string, std::less<>> aliases = {
        {"sarcastic", "sarcasm"}, {"happy", "happiness"},  {"joy", "happiness"},
        {"sad", "sadness"},       {"angry", "anger"},       {"condescending", "condescension"},
        {"disgusted", "disgust"}, {"envious", "envy"},      {"excited", "excitement"},
        {"afraid", "fear"},       {"humorous", "humor"},    {"humour", "humor"},
        {"surprised", "surprise"}, {"none", "neutral"},
    };
    return aliases;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError("line " + std::to_string(line) + ": missing string field \"" + key + "\"");
    }
    return it->get<std::string>();
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Emotion

Emotion Emotion::parse(std::string_view text) {
    std::string name = trim(text);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::replace(name.begin(), name.end(), ' ', '_');
    if (name.empty()) throw ValidationError("empty emotion label");
    const auto& aliases = emotion_aliases();
    if (auto it = aliases.find(name); it != aliases.end()) name = it->second;
    return Emotion(std::move(name));
}

const std::vector<Emotion>& Emotion::canonical() {
    static const std::vector<Emotion> labels = [] {
        std::vector<Emotion> v;
        for (const char* n : {"anger", "condescension", "disgust", "envy", "excitement", "fear",
                              "happiness", "humor", "sadness", "sarcasm", "surprise"}) {
            v.push_back(Emotion(n));
        }
        return v;
    }();
    return labels;
}

bool Emotion::is_canonical() const {
    const auto& c = canonical();
    return std::find(c.begin(), c.end(), *this) != c.end();
}

std::string synthetic_id(std::string_view source_id, const Emotion& emotion, bool fact_distorted) {
    std::string id(source_id);
    id += '#';
    id += emotion.name();
    if (fact_distorted) id += "#fd";
    return id;
}

json to_json(const Provenance& p) {
    return json{{"source_id", p.source_id},
                {"emotion", p.emotion.name()},
                {"generator_model", p.generator_model},
                {"fact_distorted", p.fact_distorted}};
}

Provenance provenance_from_json(const json& j) {
    Provenance p;
    p.source_id = j.at("source_id").get<std::string>();
    p.emotion = Emotion::parse(j.at("emotion").get<std::string>());
    p.generator_model = j.value("generator_model", std::string());
    p.fact_distorted = j.value("fact_distorted", false);
    return p;
}

// ---------------------------------------------------------------------------
// Collections

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
    by_id_.reserve(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        const auto& p = passages_[i];
        if (p.id.empty()) throw ValidationError("passage " + std::to_string(i) + " has an empty id");
        if (trim(p.text).empty()) throw ValidationError("passage \"" + p.id + "\" has empty text");
        if (!by_id_.emplace(p.id, i).second) throw ValidationError("duplicate passage id \"" + p.id + "\"");
    }
}

const Passage* Corpus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

const Passage& Corpus::at(std::string_view id) const {
    if (auto* p = find(id)) return *p;
    throw ValidationError("unknown passage id \"" + std::string(id) + "\"");
}

QuerySet::QuerySet(std::vector<Query> queries) : queries_(std::move(queries)) {
    for (std::size_t i = 0; i < queries_.size(); ++i) {
        const auto& q = queries_[i];
        if (q.qid.empty()) throw ValidationError("query " + std::to_string(i) + " has an empty qid");
        if (trim(q.question).empty()) throw ValidationError("query \"" + q.qid + "\" has an empty question");
        if (q.answers.empty()) throw ValidationError("query \"" + q.qid + "\" has no gold answers");
        if (!by_qid_.emplace(q.qid, i).second) throw ValidationError("duplicate qid \"" + q.qid + "\"");
    }
}

const Query* QuerySet::find(std::string_view qid) const {
    auto it = by_qid_.find(std::string(qid));
    return it == by_qid_.end() ? nullptr : &queries_[it->second];
}

const Query& QuerySet::at(std::string_view qid) const {
    if (auto* q = find(qid)) return *q;
    throw ValidationError("unknown qid \"" + std::string(qid) + "\"");
}

SyntheticSet::SyntheticSet(std::vector<SyntheticPassage> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.id.empty()) throw ValidationError("synthetic record " + std::to_string(i) + " has an empty id");
        if (trim(r.text).empty()) throw ValidationError("synthetic passage \"" + r.id + "\" has empty text");
        if (!by_id_.emplace(r.id, i).second) throw ValidationError("duplicate synthetic id \"" + r.id + "\"");
    }
}

const SyntheticPassage* SyntheticSet::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

const SyntheticPassage* SyntheticSet::counterpart(std::string_view source_id, const Emotion& emotion,
                                                  bool fact_distorted) const {
    const auto* r = find(synthetic_id(source_id, emotion, fact_distorted));
    if (r && r->provenance.source_id == source_id && r->provenance.emotion == emotion &&
        r->provenance.fact_distorted == fact_distorted) {
        return r;
    }
    // Records written by other tools may use their own id scheme.
    for (const auto& rec : records_) {
        if (rec.provenance.source_id == source_id && rec.provenance.emotion == emotion &&
            rec.provenance.fact_distorted == fact_distorted) {
            return &rec;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// JSONL

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) +
                                  ": malformed JSON (" + e.what() + ")");
        }
        if (!record.is_object()) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": expected a JSON object");
        }
        try {
            fn(record, line_no);
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw ValidationError(path.string() + ": " + msg);
            throw;
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

namespace {

// Tracks first occurrence of each id so duplicates cite both lines.
class DuplicateTracker {
public:
    explicit DuplicateTracker(const char* what) : what_(what) {}
    void add(const std::string& id, std::size_t line) {
        auto [it, inserted] = first_line_.emplace(id, line);
        if (!inserted) {
            throw ValidationError("duplicate " + std::string(what_) + " \"" + id + "\" on lines " +
                                  std::to_string(it->second) + " and " + std::to_string(line));
        }
    }

private:
    const char* what_;
    std::unordered_map<std::string, std::size_t> first_line_;
};

void warn_if_empty(std::size_t n, const std::filesystem::path& path, std::vector<std::string>& warnings) {
    if (n == 0) {
        warnings.push_back(path.string() + " contains no records");
        spdlog::warn("{} contains no records", path.string());
    }
}

}  // namespace

Loaded<Corpus> load_corpus(const std::filesystem::path& path) {
    std::vector<Passage> passages;
    DuplicateTracker seen("passage id");
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        Passage p;
        p.id = require_string(j, "id", line);
        p.text = require_string(j, "text", line);
        if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) throw ValidationError("line " + std::to_string(line) + ": title must be a string");
            p.title = it->get<std::string>();
        }
        if (p.id.empty()) throw ValidationError("line " + std::to_string(line) + ": empty id");
        if (trim(p.text).empty()) throw ValidationError("line " + std::to_string(line) + ": empty text");
        seen.add(p.id, line);
        passages.push_back(std::move(p));
    });
    Loaded<Corpus> out{Corpus(std::move(passages)), {}};
    warn_if_empty(out.value.size(), path, out.warnings);
    spdlog::info("loaded {} passages from {}", out.value.size(), path.string());
    return out;
}

Loaded<QuerySet> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    DuplicateTracker seen("qid");
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        Query q;
        q.qid = require_string(j, "qid", line);
        q.question = require_string(j, "question", line);
        auto it = j.find("answers");
        if (it == j.end() || !it->is_array() || it->empty()) {
            throw ValidationError("line " + std::to_string(line) + ": \"answers\" must be a nonempty array");
        }
        for (const auto& a : *it) {
            if (!a.is_string()) throw ValidationError("line " + std::to_string(line) + ": answers must be strings");
            q.answers.push_back(a.get<std::string>());
        }
        if (trim(q.question).empty()) throw ValidationError("line " + std::to_string(line) + ": empty question");
        seen.add(q.qid, line);
        queries.push_back(std::move(q));
    });
    Loaded<QuerySet> out{QuerySet(std::move(queries)), {}};
    warn_if_empty(out.value.size(), path, out.warnings);
    return out;
}

Loaded<SyntheticSet> load_synthetic(const std::filesystem::path& path, const Corpus* base) {
    std::vector<SyntheticPassage> records;
    DuplicateTracker seen("synthetic id");
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        SyntheticPassage s;
        s.id = require_string(j, "id", line);
        s.text = require_string(j, "text", line);
        s.provenance.source_id = require_string(j, "source_id", line);
        s.provenance.emotion = Emotion::parse(require_string(j, "emotion", line));
        s.provenance.generator_model = j.value("generator_model", std::string());
        auto fd = j.find("fact_distorted");
        if (fd == j.end() || !fd->is_boolean()) {
            throw ValidationError("line " + std::to_string(line) + ": \"fact_distorted\" must be a boolean");
        }
        s.provenance.fact_distorted = fd->get<bool>();
        if (s.provenance.fact_distorted && !s.provenance.emotion.is_sarcasm()) {
            throw ValidationError("line " + std::to_string(line) + ": fact_distorted record \"" + s.id +
                                  "\" must have emotion sarcasm");
        }
        if (trim(s.text).empty()) throw ValidationError("line " + std::to_string(line) + ": empty text");
        if (base) {
            if (!base->contains(s.provenance.source_id)) {
                throw ValidationError("line " + std::to_string(line) + ": source_id \"" +
                                      s.provenance.source_id + "\" does not resolve in the base corpus");
            }
            if (base->contains(s.id)) {
                throw ValidationError("line " + std::to_string(line) + ": synthetic id \"" + s.id +
                                      "\" collides with a base passage id");
            }
        }
        seen.add(s.id, line);
        records.push_back(std::move(s));
    });
    Loaded<SyntheticSet> out{SyntheticSet(std::move(records)), {}};
    warn_if_empty(out.value.size(), path, out.warnings);
    return out;
}

std::string to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& p : corpus.passages()) {
        json j{{"id", p.id}, {"text", p.text}};
        if (p.title) j["title"] = *p.title;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string to_jsonl(const QuerySet& queries) {
    std::string out;
    for (const auto& q : queries.queries()) {
        out += json{{"qid", q.qid}, {"question", q.question}, {"answers", q.answers}}.dump();
        out += '\n';
    }
    return out;
}

std::string to_jsonl(std::span<const SyntheticPassage> records) {
    std::string out;
    for (const auto& s : records) {
        json j{{"id", s.id},
               {"source_id", s.provenance.source_id},
               {"emotion", s.provenance.emotion.name()},
               {"generator_model", s.provenance.generator_model},
               {"fact_distorted", s.provenance.fact_distorted},
               {"text", s.text}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    write_file(path, to_jsonl(corpus));
}

void save_queries(const std::filesystem::path& path, const QuerySet& queries) {
    write_file(path, to_jsonl(queries));
}

void save_synthetic(const std::filesystem::path& path, std::span<const SyntheticPassage> records) {
    write_file(path, to_jsonl(records));
}

// ---------------------------------------------------------------------------
// Answer matching

namespace {

std::vector<std::string> tokens_of(std::string_view normalized) {
    std::vector<std::string> out;
    std::istringstream ss{std::string(normalized)};
    std::string tok;
    while (ss >> tok) out.push_back(std::move(tok));
    return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string normalize(std::string_view text, bool strip_leading_articles) {
    std::string buf;
    buf.reserve(text.size());
    for (unsigned char c : text) {
        if (c < 0x80 && std::ispunct(c)) {
            buf.push_back(' ');
        } else if (c < 0x80) {
            buf.push_back(static_cast<char>(std::tolower(c)));
        } else {
            buf.push_back(static_cast<char>(c));
        }
    }
    auto toks = tokens_of(buf);
    std::size_t start = 0;
    if (strip_leading_articles) {
        while (start < toks.size() && (toks[start] == "a" || toks[start] == "an" || toks[start] == "the")) {
            ++start;
        }
        if (start == toks.size()) start = 0;
    }
    std::string out;
    for (std::size_t i = start; i < toks.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += toks[i];
    }
    return out;
}

std::vector<std::string> matching_answers(std::string_view passage_text, std::span<const std::string> answers) {
    const auto hay = tokens_of(normalize(passage_text, false));
    std::vector<std::string> hits;
    for (const auto& a : answers) {
        if (contains_run(hay, tokens_of(normalize(a, true)))) hits.push_back(a);
    }
    return hits;
}

bool is_correct(std::string_view passage_text, std::span<const std::string> answers) {
    return !matching_answers(passage_text, answers).empty();
}

}  // namespace intentrag
