#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oee/errors.hpp"

namespace oee {

// Minimal CSV: no quoting, cells must not contain commas or newlines.
// Doubles are written with 17 significant digits so files round-trip.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    static std::string cell(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size())
            throw ArgumentError("csv: row width " + std::to_string(row.size()) +
                                " != header width " + std::to_string(header_.size()));
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    void write(std::ostream& os) const {
        for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
        os << "\n";
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
            os << "\n";
        }
    }

    void write_file(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError("cannot open for writing: " + path);
        write(os);
        if (!os) throw IoError("write failed: " + path);
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ArgumentError("csv: no column '" + name + "'");
    }

    double number(std::size_t row, int col) const {
        const std::string& s = rows.at(row).at(col);
        try {
            return std::stod(s);
        } catch (const std::exception&) {
            throw IoError("csv: not a number: '" + s + "'");
        }
    }

    double number(std::size_t row, const std::string& col) const {
        return number(row, column(col));
    }

    const std::string& text(std::size_t row, const std::string& col) const {
        return rows.at(row).at(column(col));
    }
};

inline CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(cur);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size())
                throw IoError("csv: ragged row of width " + std::to_string(cells.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw IoError("csv: empty input");
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_csv(is);
}

}  // namespace oee
