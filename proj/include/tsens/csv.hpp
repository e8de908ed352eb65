#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsens {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Strict numeric field parsers; std::nullopt on any violation.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

std::string_view trim(std::string_view s);

// Split one CSV line on commas. No quoting: the formats used here never
// embed commas in fields.
std::vector<std::string_view> split_csv_line(std::string_view line);

// Comma- or whitespace-separated tokens of a config value.
std::vector<std::string> split_list(std::string_view value);

// "a:b:step" -> inclusive grid; also accepts a single number or a
// comma-separated list.
std::vector<double> parse_grid(std::string_view text);

// FNV-1a 64-bit, used for config fingerprints in output metadata.
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

// Reads lines from a stream, tracking 1-based line numbers and skipping
// '#'-prefixed comment/metadata lines when asked.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    // Next line; returns false at EOF. Strips a trailing '\r'.
    bool next(std::string& line);

    int line_number() const { return line_number_; }

private:
    std::istream& in_;
    int line_number_ = 0;
};

}  // namespace tsens
