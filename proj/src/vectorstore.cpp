#include "intentrag/vectorstore.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace intentrag {

namespace {

constexpr char kMagic[8] = {'I', 'R', 'A', 'G', 'F', 'L', 'A', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

struct Candidate {
    double score;
    std::uint32_t row;
};

// Little-endian scalar IO. The host may be big-endian, so bytes are swapped
// explicitly rather than relying on memcpy layout.
template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::string_view in, std::size_t& pos, const std::string& what) {
    if (pos + sizeof(T) > in.size()) throw ValidationError("index file truncated reading " + what);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void FlatIndex::append(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors) {
    if (ids.size() != vectors.size()) {
        throw ValidationError("id count " + std::to_string(ids.size()) + " differs from vector count " +
                              std::to_string(vectors.size()));
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& v = vectors[i];
        if (dim_ == 0) {
            if (v.dim() == 0) throw ValidationError("vector for \"" + ids[i] + "\" is empty");
            dim_ = v.dim();
        }
        if (v.dim() != dim_) {
            throw ValidationError("vector for \"" + ids[i] + "\" has dim " + std::to_string(v.dim()) +
                                  ", index dim is " + std::to_string(dim_));
        }
        if (!std::all_of(v.values.begin(), v.values.end(), [](float x) { return std::isfinite(x); })) {
            throw ValidationError("vector for \"" + ids[i] + "\" has non-finite values");
        }
        if (!pos_.emplace(ids[i], ids_.size()).second) {
            throw ValidationError("id \"" + ids[i] + "\" is already present in the index");
        }
        ids_.push_back(ids[i]);
        data_.insert(data_.end(), v.values.begin(), v.values.end());
    }
}

FlatIndex FlatIndex::build(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors) {
    if (ids.empty()) throw ValidationError("cannot build an index from zero vectors");
    FlatIndex index;
    index.append(ids, vectors);
    return index;
}

FlatIndex FlatIndex::build(const std::map<std::string, EmbeddingVector>& vectors) {
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vecs;
    for (const auto& [id, v] : vectors) {
        ids.push_back(id);
        vecs.push_back(v);
    }
    return build(ids, vecs);
}

bool FlatIndex::contains(const std::string& id) const {
    return pos_.count(id) != 0;
}

FlatIndex FlatIndex::with_rows(std::span<const std::string> ids, std::span<const EmbeddingVector> vectors) const {
    FlatIndex copy = *this;
    copy.append(ids, vectors);
    return copy;
}

RankedList FlatIndex::retrieve(const EmbeddingVector& query, std::size_t k, std::size_t workers) const {
    if (k == 0) throw ValidationError("retrieve: k must be positive");
    if (query.dim() != dim_) {
        throw ValidationError("query dim " + std::to_string(query.dim()) + " does not match index dim " +
                              std::to_string(dim_));
    }
    const std::size_t n = size();
    const std::size_t take = std::min(k, n);
    auto better = [this](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return ids_[a.row] < ids_[b.row];
    };

    // Each partition keeps its own top-`take`; the global top-`take` is a
    // subset of their union, so merging them reproduces the serial result.
    auto scan = [&](std::size_t begin, std::size_t end) {
        std::vector<Candidate> local;
        local.reserve(end - begin);
        const float* q = query.values.data();
        for (std::size_t r = begin; r < end; ++r) {
            const float* row_ptr = data_.data() + r * dim_;
            double dot = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) dot += static_cast<double>(q[j]) * static_cast<double>(row_ptr[j]);
            local.push_back({dot, static_cast<std::uint32_t>(r)});
        }
        const std::size_t keep = std::min(take, local.size());
        std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(), better);
        local.resize(keep);
        return local;
    };

    std::vector<Candidate> merged;
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        merged = scan(0, n);
    } else {
        std::vector<std::vector<Candidate>> parts(workers);
        std::vector<std::thread> threads;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk, end = std::min(n, begin + chunk);
            if (begin >= end) break;
            threads.emplace_back([&, w, begin, end] { parts[w] = scan(begin, end); });
        }
        for (auto& t : threads) t.join();
        for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
        std::partial_sort(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(take), merged.end(), better);
        merged.resize(take);
    }

    RankedList out;
    out.entries.reserve(merged.size());
    for (const auto& c : merged) out.entries.push_back({ids_[c.row], c.score});
    return out;
}

void FlatIndex::save(const std::filesystem::path& path) const {
    std::string out;
    out.reserve(24 + data_.size() * 4 + ids_.size() * 16);
    out.append(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    put_le<std::uint64_t>(out, ids_.size());
    for (float v : data_) put_le<float>(out, v);
    for (const auto& id : ids_) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out += id;
    }
    write_file(path, out);
}

FlatIndex FlatIndex::load(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError(path.string() + " is not an index file (bad magic)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = get_le<std::uint32_t>(bytes, pos, "version");
    if (version != kFormatVersion) {
        throw ValidationError(path.string() + ": unsupported index version " + std::to_string(version));
    }
    const auto dim = get_le<std::uint32_t>(bytes, pos, "dim");
    const auto count = get_le<std::uint64_t>(bytes, pos, "count");
    if (dim == 0 || count == 0) throw ValidationError(path.string() + ": empty index");
    if ((bytes.size() - pos) / 4 / dim < count) throw ValidationError(path.string() + ": truncated vector block");

    std::vector<EmbeddingVector> vecs(count);
    for (auto& v : vecs) {
        v.values.resize(dim);
        for (auto& x : v.values) x = get_le<float>(bytes, pos, "vectors");
    }
    std::vector<std::string> ids(count);
    for (auto& id : ids) {
        const auto len = get_le<std::uint32_t>(bytes, pos, "id table");
        if (pos + len > bytes.size()) throw ValidationError(path.string() + ": truncated id table");
        id.assign(bytes, pos, len);
        pos += len;
    }
    if (pos != bytes.size()) throw ValidationError(path.string() + ": trailing bytes after id table");
    return build(ids, vecs);
}

FlatIndex inject(const FlatIndex& index, std::span<const SyntheticPassage> synthetic, Embedder& embedder) {
    if (synthetic.empty()) return index;
    std::vector<std::string> ids, texts;
    for (const auto& s : synthetic) {
        if (index.contains(s.id)) throw ValidationError("synthetic id \"" + s.id + "\" collides with an indexed id");
        ids.push_back(s.id);
        texts.push_back(s.text);
    }
    auto vecs = embedder.embed_batch(texts, EmbedRole::Passage);
    return index.with_rows(ids, vecs);
}

FlatIndex index_corpus(const Corpus& corpus, Embedder& embedder, std::size_t batch_size) {
    if (corpus.empty()) throw ValidationError("cannot index an empty corpus");
    batch_size = std::max<std::size_t>(1, batch_size);
    std::vector<std::string> ids;
    std::vector<EmbeddingVector> vecs;
    std::vector<std::string> texts;
    const auto passages = corpus.passages();
    for (std::size_t start = 0; start < passages.size(); start += batch_size) {
        const std::size_t end = std::min(passages.size(), start + batch_size);
        texts.clear();
        for (std::size_t i = start; i < end; ++i) {
            ids.push_back(passages[i].id);
            texts.push_back(passages[i].text);
        }
        auto batch = embedder.embed_batch(texts, EmbedRole::Passage);
        for (auto& v : batch) vecs.push_back(std::move(v));
    }
    return FlatIndex::build(ids, vecs);
}

std::vector<RankedList> retrieve_all(const FlatIndex& index, const QuerySet& queries, Embedder& embedder,
                                     std::size_t k, std::size_t workers) {
    std::vector<RankedList> out(queries.size());
    if (queries.size() == 0) return out;
    std::vector<std::string> texts;
    for (const auto& q : queries.queries()) texts.push_back(q.question);
    const auto vecs = embedder.embed_batch(texts, EmbedRole::Query);

    workers = std::max<std::size_t>(1, std::min(workers, out.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < out.size(); i = next++) {
            out[i] = index.retrieve(vecs[i], k);
            out[i].qid = queries.queries()[i].qid;
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();
    return out;
}

json to_json(const RankedList& ranking) {
    json entries = json::array();
    for (const auto& e : ranking.entries) entries.push_back({{"pid", e.pid}, {"score", e.score}});
    return json{{"qid", ranking.qid}, {"entries", std::move(entries)}};
}

RankedList ranked_list_from_json(const json& j) {
    RankedList r;
    r.qid = j.at("qid").get<std::string>();
    for (const auto& e : j.at("entries")) r.entries.push_back({e.at("pid").get<std::string>(), e.at("score").get<double>()});
    return r;
}

void save_rankings(const std::filesystem::path& path, std::span<const RankedList> rankings) {
    std::string out;
    for (const auto& r : rankings) {
        out += to_json(r).dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<RankedList> load_rankings(const std::filesystem::path& path) {
    std::vector<RankedList> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(ranked_list_from_json(j)); });
    return out;
}

}  // namespace intentrag
