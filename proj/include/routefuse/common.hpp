#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace routefuse {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Error type for every validation / contract failure in the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Cosine similarity; zero vectors compare as similarity 0.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        fail("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()) + ")");
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

// FNV-1a 64-bit. Stable across platforms, unlike std::hash.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a_hex(std::string_view s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return std::string(buf);
}

// Uniform double in [0,1) from the top 53 bits of an mt19937_64 draw.
// Used instead of std::uniform_real_distribution so streams are
// reproducible across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Fisher-Yates with an explicit modulo draw; std::shuffle is
// implementation-defined and would break cross-platform determinism.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail("write failed: " + path);
}

// Atomic replace: write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    write_file(tmp, content);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) fail("rename failed: " + tmp + " -> " + path);
}

inline bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

// Locale-independent fixed formatting, used everywhere a report or CSV
// needs byte-stable floats.
inline std::string format_fixed(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return std::string(buf);
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

}  // namespace detail
}  // namespace routefuse
