#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace flightrag::detail {

// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF or LF.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads one record; returns false at end of input.
    bool next(std::vector<std::string>& cells) {
        cells.clear();
        std::string cell;
        bool in_quotes = false;
        bool any = false;
        int ch;
        while ((ch = in_.get()) != std::char_traits<char>::eof()) {
            any = true;
            const char c = static_cast<char>(ch);
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        cell += '"';
                    } else {
                        in_quotes = false;
                    }
                } else {
                    cell += c;
                }
                continue;
            }
            if (c == '"') {
                in_quotes = true;
            } else if (c == ',') {
                cells.push_back(std::move(cell));
                cell.clear();
            } else if (c == '\r') {
                if (in_.peek() == '\n') in_.get();
                break;
            } else if (c == '\n') {
                break;
            } else {
                cell += c;
            }
        }
        if (!any) return false;
        cells.push_back(std::move(cell));
        return true;
    }

private:
    std::istream& in_;
};

inline void write_csv_cell(std::ostream& out, const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) {
        out << cell;
        return;
    }
    out << '"';
    for (char c : cell) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        write_csv_cell(out, cells[i]);
    }
    out << '\n';
}

}  // namespace flightrag::detail
