#pragma once

#include <string>
#include <vector>

namespace dfr {

// Integer series table: one column per variable, header row with variable
// names, one row per time point.
struct SeriesTable {
    std::vector<std::string> names;
    std::vector<std::vector<int>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return names.size(); }

    // Column as a contiguous series.
    std::vector<int> column(std::size_t c) const;

    static SeriesTable read_csv(const std::string& path);
    void write_csv(const std::string& path) const;
};

}  // namespace dfr
