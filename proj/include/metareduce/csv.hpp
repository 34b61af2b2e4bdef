#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace metareduce::csv {

// Minimal RFC-ish CSV: comma separated, optional double-quote quoting with
// "" escapes, one record per line. Good enough for the file formats here.

std::vector<std::string> split_line(const std::string& line);

std::string join_line(const std::vector<std::string>& fields);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

// Reads a whole CSV stream; the first line is the header.
Table read(std::istream& in);

std::string write(const Table& table);

}  // namespace metareduce::csv
