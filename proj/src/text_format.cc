#include "giglite/text_format.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "giglite/error.h"

namespace giglite {

void append_float(std::string& out, float v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::string format_float(float v) {
    std::string s;
    append_float(s, v);
    return s;
}

float parse_float(std::string_view s) {
    if (s == "nan") {
        return std::nanf("");
    }
    float v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("bad float '" + std::string(s) + "'");
    }
    return v;
}

double parse_double(std::string_view s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("bad number '" + std::string(s) + "'");
    }
    return v;
}

uint64_t parse_u64(std::string_view s) {
    uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("bad unsigned integer '" + std::string(s) + "'");
    }
    return v;
}

int64_t parse_i64(std::string_view s) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError("bad integer '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool read_line(std::istream& in, std::string& line, bool* had_newline) {
    line.clear();
    if (!in.good() || in.peek() == std::char_traits<char>::eof()) {
        return false;
    }
    std::getline(in, line);
    if (had_newline) {
        *had_newline = !in.eof();
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

double canonical_double(float v) {
    if (!std::isfinite(v)) {
        return static_cast<double>(v);
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    double d = 0;
    std::from_chars(buf, res.ptr, d);
    return d;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LookupError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw LookupError("cannot write '" + path + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace giglite
