#pragma once

#include <string>
#include <vector>

namespace ptloop::csv {

/**
 * @brief Format a double with 17 significant digits (round-trip exact).
 */
[[nodiscard]] std::string format_double(double value);

/**
 * @brief A parsed CSV table: one header row plus numeric data rows.
 *
 * All data cells must parse as doubles; the loader throws std::runtime_error
 * otherwise, quoting the offending line.
 */
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// @brief Column index for @p name; throws std::runtime_error if absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

/// @brief Read a comma-separated table with a mandatory header row.
[[nodiscard]] Table read_table(const std::string& path);

/// @brief Write a table; all values formatted via format_double.
void write_table(const std::string& path, const Table& table);

} // namespace ptloop::csv
