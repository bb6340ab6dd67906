#ifndef ARMSIM_CSV_HPP
#define ARMSIM_CSV_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace armsim {

/// Shortest round-trippable decimal form; identical input bits give
/// identical text, which keeps output files byte-reproducible.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << table.header[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw IoError("row width " + std::to_string(row.size()) + " does not match header " +
                          std::to_string(table.header.size()) + " in " + path);
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

/// key = value run-metadata sidecar, one entry per line.
inline void write_sidecar(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& [key, value] : entries) {
        out << key << " = " << value << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace armsim

#endif
