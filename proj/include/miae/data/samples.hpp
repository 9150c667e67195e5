#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "miae/core/errors.hpp"

namespace miae::data {

// One row of the input sample table: a structure id, its CATH code, the mean
// pLDDT of the prediction, and the path to the structure file.
struct SampleRecord {
    std::string id;
    std::string code;
    double plddt = 0.0;
    std::string path;
};

// Tab-separated with the exact header "id\tcode\tplddt\tpath"; lines starting
// with '#' are comments.
inline std::vector<SampleRecord> read_sample_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_sample_table: cannot open " + path);
    std::string line;
    long lineno = 0;
    bool saw_header = false;
    std::vector<SampleRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "id\tcode\tplddt\tpath")
                throw ParseError("read_sample_table: expected header id<TAB>code<TAB>plddt<TAB>path",
                                 lineno);
            saw_header = true;
            continue;
        }
        SampleRecord rec;
        std::size_t start = 0;
        std::vector<std::string> fields;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4)
            throw ParseError("read_sample_table: expected 4 tab-separated fields", lineno);
        rec.id = fields[0];
        rec.code = fields[1];
        const auto res =
            std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), rec.plddt);
        if (res.ec != std::errc() || res.ptr != fields[2].data() + fields[2].size())
            throw ParseError("read_sample_table: bad plddt '" + fields[2] + "'", lineno);
        rec.path = fields[3];
        if (rec.id.empty()) throw ParseError("read_sample_table: empty id", lineno);
        out.push_back(std::move(rec));
    }
    if (!saw_header) throw ParseError("read_sample_table: missing header in " + path);
    return out;
}

} // namespace miae::data
