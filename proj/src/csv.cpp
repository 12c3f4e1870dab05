#include "plfsi/csv.hpp"

#include "plfsi/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace plfsi::csv {

std::string format(double value)
{
    if (value == 0.0) {
        return "0"; // collapses -0
    }
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("failed to format double");
    }
    return std::string(buf.data(), ptr);
}

std::string trim(std::string_view s)
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char delim)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::size_t Document::column(const std::string& name, const std::string& source) const
{
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) {
            return j;
        }
    }
    throw InputError(source + ": missing column '" + name + "'");
}

Document read(std::istream& in, const std::string& source, bool has_header)
{
    Document doc;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = !has_header;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '#') {
            doc.comments.push_back(t);
            continue;
        }
        auto fields = split(t);
        if (!header_seen) {
            doc.header = std::move(fields);
            header_seen = true;
            continue;
        }
        if (has_header && fields.size() != doc.header.size()) {
            throw InputError(source + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(doc.header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        doc.rows.push_back({lineno, std::move(fields)});
    }
    if (!header_seen) {
        throw InputError(source + ": missing header line");
    }
    return doc;
}

Document read_file(const std::string& path, bool has_header)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    return read(in, path, has_header);
}

double parse_double(const std::string& field, const std::string& source, std::size_t line)
{
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw InputError(source + ":" + std::to_string(line) + ": invalid number '" + field + "'");
    }
    return v;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t j = 0; j < fields.size(); ++j) {
        if (j) {
            out << ',';
        }
        out << fields[j];
    }
    out << '\n';
}

} // namespace plfsi::csv
