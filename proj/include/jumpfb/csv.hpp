// csv.hpp: fixed-format CSV writing (17 significant digits, LF endings).

#pragma once

#include <fmt/format.h>

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace jumpfb {

inline std::string format_number(double x) { return fmt::format("{:.17g}", x); }

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void header(const std::vector<std::string>& columns) { row_strings(columns); }

    void row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) line += ',';
            line += format_number(values[i]);
        }
        line += '\n';
        out_ << line;
    }

    void row_strings(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) line += ',';
            line += cells[i];
        }
        line += '\n';
        out_ << line;
    }

private:
    std::ostream& out_;
};

}  // namespace jumpfb
