#include "csv.hpp"

#include <fstream>
#include <sstream>

#include "error.hpp"

namespace dfr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace.
        std::size_t b = cell.find_first_not_of(" \t\r");
        std::size_t e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::vector<int> SeriesTable::column(std::size_t c) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
}

SeriesTable SeriesTable::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open " + path);
    SeriesTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: empty file " + path);
    t.names = split_line(line);
    if (t.names.empty()) throw DataError("csv: missing header in " + path);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != t.names.size())
            throw DataError("csv: row " + std::to_string(lineno) + " in " + path + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.names.size()));
        std::vector<int> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                std::size_t used = 0;
                row[c] = std::stoi(cells[c], &used);
                if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
            } catch (const std::exception&) {
                throw DataError("csv: non-integer cell '" + cells[c] + "' at row " +
                                std::to_string(lineno) + " of " + path);
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void SeriesTable::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write " + path);
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c) out << ',';
        out << names[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
}

}  // namespace dfr
