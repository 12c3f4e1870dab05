#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace plfsi::csv {

// Shortest round-trip decimal representation; stable across runs.
std::string format(double value);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view line, char delim = ',');

struct Row {
    std::size_t line = 0; // 1-based line number in the source
    std::vector<std::string> fields;
};

// Minimal comma-separated reader. Lines starting with '#' are returned as
// comments; blank lines are skipped. No quoting support.
struct Document {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Column index by name; throws InputError naming the source if absent.
    std::size_t column(const std::string& name, const std::string& source) const;
};

Document read(std::istream& in, const std::string& source, bool has_header = true);
Document read_file(const std::string& path, bool has_header = true);

// Parses a finite double, throwing InputError with "<source>:<line>" context.
double parse_double(const std::string& field, const std::string& source, std::size_t line);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace plfsi::csv
