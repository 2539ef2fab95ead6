#include "ammlab/csv.hpp"

#include <charconv>
#include <cstdio>

namespace amm::io {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

CsvReader::CsvReader(const std::string& file, const std::vector<std::string>& expected_header)
    : file_(file), in_(file) {
    if (!in_)
        throw SchemaError(file + ": cannot open");
    std::string line;
    do {
        if (!std::getline(in_, line))
            throw SchemaError(file + ": missing header row");
    } while (!line.empty() && line[0] == '#');
    const auto header = split_csv_line(line);
    if (header.size() != expected_header.size())
        throw SchemaError(file + ": expected " + std::to_string(expected_header.size()) +
                          " columns in header, got " + std::to_string(header.size()));
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != expected_header[i])
            throw SchemaError(file + ": header column " + std::to_string(i + 1) +
                              " is '" + header[i] + "', expected '" + expected_header[i] + "'");
    n_cols_ = expected_header.size();
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++row_;
        fields = split_csv_line(line);
        if (fields.size() != n_cols_)
            throw SchemaError(file_ + " row " + std::to_string(row_) + ": expected " +
                              std::to_string(n_cols_) + " fields, got " +
                              std::to_string(fields.size()));
        return true;
    }
    return false;
}

double parse_double(const std::string& field, const std::string& file,
                    std::size_t row, const std::string& column) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw SchemaError(file + " row " + std::to_string(row) +
                          ": bad value '" + field + "' in column '" + column + "'");
    return v;
}

std::int64_t parse_int(const std::string& field, const std::string& file,
                       std::size_t row, const std::string& column) {
    std::int64_t v = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw SchemaError(file + " row " + std::to_string(row) +
                          ": bad value '" + field + "' in column '" + column + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace amm::io
