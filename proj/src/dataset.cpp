#include "symreg/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace symreg {

namespace {

// RFC-4180 record splitter; handles quoted fields, "" escapes, and CRLF.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        switch (ch) {
            case '"':
                quoted = true;
                field_started = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (field_started || !field.empty() || !fields.empty()) {
                    fields.push_back(std::move(field));
                    field.clear();
                    records.push_back(std::move(fields));
                    fields.clear();
                }
                field_started = false;
                break;
            default:
                field += ch;
                field_started = true;
                break;
        }
    }
    if (quoted) throw data_error("CSV: unterminated quoted field");
    if (field_started || !field.empty() || !fields.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    return records;
}

double parse_cell(const std::string& cell, int row, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end)
        throw data_error("CSV: missing value at data row " + std::to_string(row) +
                         ", column '" + column + "'");
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw data_error("CSV: non-numeric value '" + cell + "' at data row " +
                         std::to_string(row) + ", column '" + column + "'");
    return value;
}

}  // namespace

int Dataset::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
        if (columns[j] == name) return static_cast<int>(j);
    return -1;
}

Dataset parse_csv(const std::string& text) {
    const auto records = split_records(text);
    if (records.empty()) throw data_error("CSV: empty input (header row required)");
    Dataset ds;
    ds.columns = records[0];
    const std::size_t ncol = ds.columns.size();
    if (ncol == 0) throw data_error("CSV: empty header");
    const std::size_t nrow = records.size() - 1;
    ds.table.resize(nrow, ncol);
    for (std::size_t r = 0; r < nrow; ++r) {
        const auto& rec = records[r + 1];
        if (rec.size() != ncol)
            throw data_error("CSV: data row " + std::to_string(r + 1) + " has " +
                             std::to_string(rec.size()) + " fields, header has " +
                             std::to_string(ncol));
        for (std::size_t c = 0; c < ncol; ++c)
            ds.table(r, c) = parse_cell(rec[c], static_cast<int>(r + 1), ds.columns[c]);
    }
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open CSV file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str());
}

}  // namespace symreg
