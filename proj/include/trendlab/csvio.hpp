#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>

#include "trendlab/common.hpp"

namespace trendlab {

/// Shortest round-trip decimal form of a double (locale-free).
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed significant-digit form used by report tables.
inline std::string format_double(double v, int significant) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, significant);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& field, const std::string& context) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError(context + ": bad number '" + field + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& field, const std::string& context) {
    std::int64_t v = 0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError(context + ": bad integer '" + field + "'");
    return v;
}

/// Line reader that strips a trailing '\r' (CRLF input) and tracks line numbers.
class LineReader {
public:
    explicit LineReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw ParseError(path + ": cannot open file");
    }

    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno_;
        return true;
    }

    std::string where() const { return path_ + ":" + std::to_string(lineno_); }
    int lineno() const { return lineno_; }

private:
    std::string path_;
    std::ifstream in_;
    int lineno_ = 0;
};

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open for writing");
    return out;
}

}  // namespace trendlab
