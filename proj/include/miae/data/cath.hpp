#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "miae/core/errors.hpp"

namespace miae::data {

// Result of topology-level label aggregation over CATH codes.
struct LabelMap {
    std::vector<std::string> labels;      // sorted unique final codes, C.A.T or C.A.x
    std::vector<std::size_t> assignment;  // per input code, index into labels
    std::vector<std::size_t> counts;      // per label
    std::size_t cutoff = 0;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Normalize one CATH code to C.A.T: codes may carry 2 to 4 dot-separated
// fields; a bare C.A code gains the aggregate topology "x", and an H level
// is dropped. The topology field may be numeric or the aggregate "x" so that
// already-processed codes round-trip.
inline std::string normalize_cath(const std::string& code, long index) {
    const auto f = split_fields(code, '.');
    if (f.size() < 2 || f.size() > 4)
        throw LabelError("malformed CATH code '" + code + "'", index);
    if (!all_digits(f[0]) || !all_digits(f[1]))
        throw LabelError("malformed CATH code '" + code + "'", index);
    if (f.size() == 2) return f[0] + "." + f[1] + ".x";
    if (!all_digits(f[2]) && f[2] != "x")
        throw LabelError("malformed CATH code '" + code + "'", index);
    if (f.size() == 4 && !all_digits(f[3]))
        throw LabelError("malformed CATH code '" + code + "'", index);
    return f[0] + "." + f[1] + "." + f[2];
}

} // namespace detail

// Aggregate rare topology classes into their architecture's "C.A.x" label.
// Within each C.A group, topologies with fewer than cutoff samples are
// merged; if the merged pool itself stays under the cutoff, the smallest
// remaining topology of that group (ties: lexicographically first) is pulled
// in as well. A group whose total is below the cutoff collapses entirely and
// stays small; every other final label reaches the cutoff.
inline LabelMap process_cath_labels(const std::vector<std::string>& codes, std::size_t cutoff) {
    LabelMap out;
    out.cutoff = cutoff;
    if (codes.empty()) return out;

    std::vector<std::string> t_codes(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
        t_codes[i] = detail::normalize_cath(codes[i], static_cast<long>(i));

    // unique sorted topology labels with counts and the inverse mapping
    std::vector<std::string> t_labels = t_codes;
    std::sort(t_labels.begin(), t_labels.end());
    t_labels.erase(std::unique(t_labels.begin(), t_labels.end()), t_labels.end());
    std::vector<std::size_t> t_counts(t_labels.size(), 0);
    std::vector<std::size_t> t_inv(t_codes.size());
    for (std::size_t i = 0; i < t_codes.size(); ++i) {
        const auto it = std::lower_bound(t_labels.begin(), t_labels.end(), t_codes[i]);
        t_inv[i] = static_cast<std::size_t>(it - t_labels.begin());
        ++t_counts[t_inv[i]];
    }

    auto arch_of = [](const std::string& t) { return t.substr(0, t.rfind('.')); };

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < t_labels.size(); ++i) groups[arch_of(t_labels[i])].push_back(i);

    std::vector<bool> merge(t_labels.size(), false);
    for (const auto& [arch, members] : groups) {
        std::size_t rare_total = 0, n_rare = 0;
        for (std::size_t i : members) {
            if (t_counts[i] < cutoff) {
                merge[i] = true;
                rare_total += t_counts[i];
                ++n_rare;
            }
        }
        if (n_rare == 0) continue;
        if (rare_total < cutoff) {
            // pull in the smallest class that survived; members are in
            // sorted label order, so the first minimum breaks ties
            std::size_t best = t_labels.size();
            for (std::size_t i : members)
                if (!merge[i] && (best == t_labels.size() || t_counts[i] < t_counts[best]))
                    best = i;
            if (best != t_labels.size()) merge[best] = true;
        }
    }

    std::vector<std::string> processed(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::size_t t = t_inv[i];
        processed[i] = merge[t] ? arch_of(t_labels[t]) + ".x" : t_labels[t];
    }

    out.labels = processed;
    std::sort(out.labels.begin(), out.labels.end());
    out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
    out.counts.assign(out.labels.size(), 0);
    out.assignment.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto it = std::lower_bound(out.labels.begin(), out.labels.end(), processed[i]);
        out.assignment[i] = static_cast<std::size_t>(it - out.labels.begin());
        ++out.counts[out.assignment[i]];
    }
    return out;
}

// Map one new code through an existing label table: exact topology match
// first, then the architecture's aggregate label if one exists.
inline std::size_t apply_label_map(const LabelMap& map, const std::string& code) {
    const std::string t = detail::normalize_cath(code, -1);
    auto find = [&](const std::string& label) -> long {
        const auto it = std::lower_bound(map.labels.begin(), map.labels.end(), label);
        if (it != map.labels.end() && *it == label)
            return static_cast<long>(it - map.labels.begin());
        return -1;
    };
    long idx = find(t);
    if (idx < 0) idx = find(t.substr(0, t.rfind('.')) + ".x");
    if (idx < 0) throw LabelError("unknown class label for code '" + code + "'");
    return static_cast<std::size_t>(idx);
}

inline void save_label_map(const std::string& path, const LabelMap& map) {
    std::ofstream out(path);
    if (!out) throw Error("save_label_map: cannot open " + path);
    out << "# miae-labels v1\n";
    out << "cutoff\t" << map.cutoff << "\n";
    out << "label\tcount\n";
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        out << map.labels[i] << "\t" << map.counts[i] << "\n";
    if (!out) throw Error("save_label_map: write failed on " + path);
}

inline LabelMap load_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_label_map: cannot open " + path);
    std::string line;
    long lineno = 1;
    if (!std::getline(in, line) || line != "# miae-labels v1")
        throw ParseError("load_label_map: missing version line in " + path, lineno);
    LabelMap map;
    ++lineno;
    if (!std::getline(in, line) || line.rfind("cutoff\t", 0) != 0)
        throw ParseError("load_label_map: missing cutoff in " + path, lineno);
    {
        const std::string v = line.substr(7);
        const auto res = std::from_chars(v.data(), v.data() + v.size(), map.cutoff);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ParseError("load_label_map: bad cutoff '" + v + "'", lineno);
    }
    ++lineno;
    if (!std::getline(in, line) || line != "label\tcount")
        throw ParseError("load_label_map: missing header in " + path, lineno);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("load_label_map: expected label<TAB>count", lineno);
        const std::string label = line.substr(0, tab);
        const std::string v = line.substr(tab + 1);
        std::size_t count = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), count);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ParseError("load_label_map: bad count '" + v + "'", lineno);
        map.labels.push_back(label);
        map.counts.push_back(count);
    }
    if (!std::is_sorted(map.labels.begin(), map.labels.end()))
        throw ParseError("load_label_map: labels out of order in " + path);
    return map;
}

} // namespace miae::data
