#include "metareduce/csv.hpp"

#include <sstream>

namespace metareduce::csv {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // tolerate CRLF
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

static bool needs_quoting(const std::string& f) {
    return f.find_first_of(",\"\n") != std::string::npos;
}

std::string join_line(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        if (needs_quoting(fields[i])) {
            out += '"';
            for (char c : fields[i]) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += fields[i];
        }
    }
    return out;
}

int Table::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

Table read(std::istream& in) {
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        if (first) {
            t.header = split_line(line);
            first = false;
        } else {
            t.rows.push_back(split_line(line));
        }
    }
    return t;
}

std::string write(const Table& table) {
    std::string out = join_line(table.header);
    out += '\n';
    for (const auto& row : table.rows) {
        out += join_line(row);
        out += '\n';
    }
    return out;
}

}  // namespace metareduce::csv
