#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "gridweave/core.hpp"

namespace gridweave::io {

/// Shortest round-trip decimal form, locale-independent. All emitted files
/// go through this so reruns are byte-identical.
inline std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw RunError("failed to format double");
    return std::string(buf, ptr);
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw RunError("failed writing: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Column series as "t,value" rows.
inline std::string series_csv(std::span<const double> values) {
    std::string out = "t,value\n";
    for (size_t t = 0; t < values.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += fmt(values[t]);
        out += '\n';
    }
    return out;
}

} // namespace gridweave::io
