#include "ptloop/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptloop::csv {

std::string format_double(double value) {
    char buffer[40];
    const int n = std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return {buffer, static_cast<std::size_t>(n)};
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::runtime_error("CSV table has no column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, const std::string& line) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw std::runtime_error("CSV: cell '" + cell + "' in line '" + line +
                                 "' is not a number");
    }
    return value;
}

} // namespace

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open CSV file '" + path + "'");
    }
    Table table;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("CSV file '" + path + "' is empty (header expected)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw std::runtime_error("CSV file '" + path + "': line '" + line + "' has " +
                                     std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(table.header.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& cell : cells) row.push_back(parse_cell(cell, line));
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_table(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write CSV file '" + path + "'");
    }
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i > 0) out << ',';
        out << table.header[i];
    }
    out << '\n';
    for (const std::vector<double>& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw std::runtime_error("CSV write: row width does not match header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("CSV write to '" + path + "' failed");
    }
}

} // namespace ptloop::csv
