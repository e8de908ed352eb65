#include "tsens/csv.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <istream>

#include "tsens/errors.hpp"

namespace tsens {

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    assert(res.ec == std::errc());
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_double(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    double v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    long long v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    std::string current;
    for (char c : value) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!current.empty()) out.push_back(std::move(current)), current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<double> parse_grid(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw ParseError("empty grid specification");
    // colon form a:b:step
    std::size_t c1 = text.find(':');
    if (c1 != std::string_view::npos) {
        std::size_t c2 = text.find(':', c1 + 1);
        if (c2 == std::string_view::npos) throw ParseError("grid must be a:b:step");
        auto a = parse_double(text.substr(0, c1));
        auto b = parse_double(text.substr(c1 + 1, c2 - c1 - 1));
        auto step = parse_double(text.substr(c2 + 1));
        if (!a || !b || !step) throw ParseError("bad number in grid '" + std::string(text) + "'");
        if (*step <= 0) throw ParseError("grid step must be positive");
        if (*b < *a) throw ParseError("grid upper bound below lower bound");
        std::vector<double> grid;
        // i*step keeps endpoints exact for decimal steps; the half-step pad
        // admits b itself despite rounding.
        for (int i = 0;; ++i) {
            double v = *a + i * *step;
            if (v > *b + *step / 2) break;
            grid.push_back(v);
        }
        if (!grid.empty() && std::abs(grid.back() - *b) < *step * 1e-9) grid.back() = *b;
        return grid;
    }
    std::vector<double> grid;
    for (const auto& tok : split_list(text)) {
        auto v = parse_double(tok);
        if (!v) throw ParseError("bad number in grid '" + std::string(text) + "'");
        grid.push_back(*v);
    }
    return grid;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

bool LineReader::next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace tsens
