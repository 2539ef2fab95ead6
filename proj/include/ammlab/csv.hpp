#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace amm::io {

// Malformed input file; message names file, row and column.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_csv_line(const std::string& line);

// Line-oriented reader for headered numeric CSVs. Skips '#' comment lines,
// validates the header on open, reports 1-based data row numbers.
class CsvReader {
public:
    CsvReader(const std::string& file, const std::vector<std::string>& expected_header);

    bool next(std::vector<std::string>& fields); // false at EOF
    std::size_t row() const { return row_; }     // current data row
    const std::string& file() const { return file_; }

private:
    std::string file_;
    std::ifstream in_;
    std::size_t row_ = 0;
    std::size_t n_cols_ = 0;
};

double parse_double(const std::string& field, const std::string& file,
                    std::size_t row, const std::string& column);
std::int64_t parse_int(const std::string& field, const std::string& file,
                       std::size_t row, const std::string& column);

// full round-trip precision ("%.17g")
std::string format_double(double v);

} // namespace amm::io
