// SPDX-License-Identifier: MIT
#pragma once

#include "mfj/error.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>

namespace mfj {

/// Shortest-safe round-trip form: 17 significant digits.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

[[nodiscard]] inline std::string format_uint(std::uint64_t x) { return std::to_string(x); }

/// Row builder: join(a, b, c) -> "a,b,c".
class CsvRow {
public:
    CsvRow& add(std::string_view s) {
        if (!first_) line_ += ',';
        line_ += s;
        first_ = false;
        return *this;
    }
    CsvRow& add(double x) { return add(format_double(x)); }
    CsvRow& add(std::uint64_t x) { return add(format_uint(x)); }
    CsvRow& add(long x) { return add(std::to_string(x)); }
    CsvRow& add(int x) { return add(std::to_string(x)); }

    [[nodiscard]] std::string str() const { return line_ + '\n'; }

private:
    std::string line_;
    bool first_ = true;
};

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot move output into place at " + path.string());
    }
}

}  // namespace mfj
