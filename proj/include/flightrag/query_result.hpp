#pragma once

#include <string>
#include <vector>

#include "flightrag/value.hpp"

namespace flightrag {

// Tabular result shared by the SQL executor and the graph executor.
struct QueryResult {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    std::vector<std::vector<std::string>> text_rows() const {
        std::vector<std::vector<std::string>> out;
        out.reserve(rows.size());
        for (const auto& row : rows) {
            std::vector<std::string> cells;
            cells.reserve(row.size());
            for (const auto& v : row) cells.push_back(v.to_string());
            out.push_back(std::move(cells));
        }
        return out;
    }
};

}  // namespace flightrag
