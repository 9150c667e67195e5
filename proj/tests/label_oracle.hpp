#pragma once

// Brute-force reference for the CATH label aggregation, written over string
// maps and sets rather than index arrays, mirroring the published procedure
// step by step: normalize, count topologies, per-architecture rare pool,
// optional pull-in of the smallest surviving class, relabel, sort. Shared by
// the unit suite and the acceptance gate so both compare against the same
// independent implementation.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "miae/core/rng.hpp"

namespace label_oracle {

struct OracleLabels {
    std::vector<std::string> labels;
    std::vector<std::size_t> assignment;
    std::vector<std::size_t> counts;
};

inline std::vector<std::string> oracle_split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '.') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string oracle_arch(const std::string& t) {
    const auto f = oracle_split(t);
    return f[0] + "." + f[1];
}

inline OracleLabels oracle_process(const std::vector<std::string>& codes, std::size_t cutoff) {
    std::vector<std::string> t(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto f = oracle_split(codes[i]);
        if (f.size() == 2)
            t[i] = codes[i] + ".x";
        else
            t[i] = f[0] + "." + f[1] + "." + f[2];
    }

    std::map<std::string, long> cnt;
    for (const auto& s : t) ++cnt[s];

    std::map<std::string, std::vector<std::string>> by_arch;
    for (const auto& [label, c] : cnt) by_arch[oracle_arch(label)].push_back(label);

    std::set<std::string> merged;
    for (const auto& [arch, labels] : by_arch) {
        std::vector<std::string> rare, safe;
        long pool = 0;
        for (const auto& l : labels) {
            if (cnt[l] < static_cast<long>(cutoff)) {
                rare.push_back(l);
                pool += cnt[l];
            } else {
                safe.push_back(l);
            }
        }
        if (rare.empty()) continue;
        if (pool < static_cast<long>(cutoff) && !safe.empty()) {
            std::string best = safe[0];
            for (const auto& l : safe)
                if (cnt[l] < cnt[best]) best = l; // safe is sorted, first min wins ties
            rare.push_back(best);
        }
        for (const auto& l : rare) merged.insert(l);
    }

    std::vector<std::string> final_codes(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
        final_codes[i] = merged.count(t[i]) ? oracle_arch(t[i]) + ".x" : t[i];

    OracleLabels out;
    std::set<std::string> uniq(final_codes.begin(), final_codes.end());
    out.labels.assign(uniq.begin(), uniq.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < out.labels.size(); ++k) index[out.labels[k]] = k;
    out.counts.assign(out.labels.size(), 0);
    out.assignment.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        out.assignment[i] = index.at(final_codes[i]);
        ++out.counts[out.assignment[i]];
    }
    return out;
}

inline std::vector<std::string> random_codes(miae::Rng& rng) {
    static const char* archs[] = {"10", "20", "25", "40", "60"};
    static const char* tops[] = {"8", "10", "20", "50", "120", "525"};
    const std::size_t n = 1 + rng.uniform_int(60);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string code = std::to_string(1 + rng.uniform_int(3));
        code += ".";
        code += archs[rng.uniform_int(4)];
        const std::uint64_t kind = rng.uniform_int(10);
        if (kind >= 3) { // 2-field codes 30% of the time
            code += ".";
            code += kind == 9 ? "x" : tops[rng.uniform_int(6)];
            if (kind >= 8 && kind != 9) code += "." + std::to_string(1 + rng.uniform_int(400));
        }
        out.push_back(code);
    }
    return out;
}

} // namespace label_oracle
