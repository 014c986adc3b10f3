#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace intentrag {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = INTENTRAG_VERSION;

// Error hierarchy. The CLI maps each kind onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed records, broken invariants, dimension mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A model, embedding or classifier backend failed.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& what, bool retryable = false,
                          bool rate_limited = false, int retry_after_ms = -1)
        : Error(what),
          retryable_(retryable),
          rate_limited_(rate_limited),
          retry_after_ms_(retry_after_ms) {}

    bool retryable() const noexcept { return retryable_; }
    bool rate_limited() const noexcept { return rate_limited_; }
    int retry_after_ms() const noexcept { return retry_after_ms_; }

private:
    bool retryable_;
    bool rate_limited_;
    int retry_after_ms_;
};

// ---------------------------------------------------------------------------
// Digests and hashing

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Hash of a seed and a list of string keys, with separators so ("ab","c")
/// and ("a","bc") differ.
std::uint64_t keyed_hash(std::uint64_t seed, std::initializer_list<std::string_view> keys);

/// Maps a 64-bit hash onto [0, 1) using its top 53 bits.
inline double unit_interval(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Deterministic random source. The standard distributions are
/// implementation-defined, so sampling helpers are spelled out here to keep
/// seeded outputs identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64(state_);
    }
    double uniform() { return unit_interval(next()); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Trims ASCII whitespace on both ends.
std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace intentrag
