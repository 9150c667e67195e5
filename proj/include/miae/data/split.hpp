#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/core/rng.hpp"

namespace miae::data {

// Per-sample split assignment with aggregate bookkeeping. Split 0 is train,
// 1 validation, 2 test for the standard three-way ratios.
struct SplitManifest {
    std::vector<double> ratios;
    std::uint64_t seed = 0;
    std::vector<std::size_t> assignment; // per sample, class index (copied from input)
    std::vector<std::size_t> split;      // per sample, split index
    std::vector<std::vector<std::size_t>> class_counts; // [class][split]
    std::vector<std::string> ids;        // optional, filled by callers that have ids
};

inline std::string split_name(std::size_t s) {
    static const char* names[3] = {"train", "val", "test"};
    return s < 3 ? names[s] : "split" + std::to_string(s);
}

// Per class: seeded shuffle, then largest-remainder apportionment of the
// class size over the ratios. Remainder slots go to the largest fractional
// parts; ties resolve toward the earlier split, so train is favored first.
inline SplitManifest stratified_split(const std::vector<std::size_t>& assignment,
                                      const std::vector<double>& ratios = {0.8, 0.1, 0.1},
                                      std::uint64_t seed = 0) {
    if (assignment.empty()) throw SplitError("stratified_split: no samples");
    if (ratios.size() < 2) throw SplitError("stratified_split: need at least two splits");
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw SplitError("stratified_split: ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw SplitError("stratified_split: ratios must sum to 1");

    const std::size_t n_classes = 1 + *std::max_element(assignment.begin(), assignment.end());
    std::vector<std::vector<std::size_t>> members(n_classes);
    for (std::size_t i = 0; i < assignment.size(); ++i)
        members[assignment[i]].push_back(i);
    for (std::size_t k = 0; k < n_classes; ++k)
        if (members[k].empty())
            throw SplitError("stratified_split: empty class " + std::to_string(k));

    SplitManifest out;
    out.ratios = ratios;
    out.seed = seed;
    out.assignment = assignment;
    out.split.assign(assignment.size(), 0);
    out.class_counts.assign(n_classes, std::vector<std::size_t>(ratios.size(), 0));

    for (std::size_t k = 0; k < n_classes; ++k) {
        auto& m = members[k];
        Rng rng(Rng::mix(seed, k));
        for (std::size_t i = m.size(); i > 1; --i)
            std::swap(m[i - 1], m[rng.uniform_int(i)]);

        const std::size_t count = m.size();
        std::vector<std::size_t> quota(ratios.size());
        std::vector<double> frac(ratios.size());
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < ratios.size(); ++s) {
            const double exact = static_cast<double>(count) * ratios[s];
            quota[s] = static_cast<std::size_t>(std::floor(exact));
            frac[s] = exact - static_cast<double>(quota[s]);
            assigned += quota[s];
        }
        std::vector<std::size_t> order(ratios.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quota[order[i]];

        std::size_t at = 0;
        for (std::size_t s = 0; s < ratios.size(); ++s) {
            out.class_counts[k][s] = quota[s];
            for (std::size_t i = 0; i < quota[s]; ++i, ++at) out.split[m[at]] = s;
        }
    }
    return out;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

inline void save_split(const std::string& path, const SplitManifest& m) {
    if (!m.ids.empty() && m.ids.size() != m.split.size())
        throw ShapeError("save_split: id count mismatch");
    std::ofstream out(path);
    if (!out) throw Error("save_split: cannot open " + path);
    out << "# miae-split v1\n";
    out << "seed\t" << m.seed << "\n";
    out << "ratios\t";
    for (std::size_t s = 0; s < m.ratios.size(); ++s)
        out << (s ? "," : "") << detail::format_double(m.ratios[s]);
    out << "\n";
    out << "id\tclass\tsplit\n";
    for (std::size_t i = 0; i < m.split.size(); ++i) {
        if (m.ids.empty())
            out << i;
        else
            out << m.ids[i];
        out << "\t" << m.assignment[i] << "\t" << split_name(m.split[i]) << "\n";
    }
    if (!out) throw Error("save_split: write failed on " + path);
}

inline SplitManifest load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_split: cannot open " + path);
    std::string line;
    long lineno = 1;
    if (!std::getline(in, line) || line != "# miae-split v1")
        throw ParseError("load_split: missing version line in " + path, lineno);
    SplitManifest m;
    ++lineno;
    if (!std::getline(in, line) || line.rfind("seed\t", 0) != 0)
        throw ParseError("load_split: missing seed in " + path, lineno);
    {
        const std::string v = line.substr(5);
        const auto res = std::from_chars(v.data(), v.data() + v.size(), m.seed);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
            throw ParseError("load_split: bad seed '" + v + "'", lineno);
    }
    ++lineno;
    if (!std::getline(in, line) || line.rfind("ratios\t", 0) != 0)
        throw ParseError("load_split: missing ratios in " + path, lineno);
    {
        std::string rest = line.substr(7);
        std::size_t start = 0;
        while (start <= rest.size()) {
            const std::size_t pos = rest.find(',', start);
            const std::string v = rest.substr(start, pos - start);
            double r = 0.0;
            const auto res = std::from_chars(v.data(), v.data() + v.size(), r);
            if (res.ec != std::errc() || res.ptr != v.data() + v.size())
                throw ParseError("load_split: bad ratio '" + v + "'", lineno);
            m.ratios.push_back(r);
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
    }
    ++lineno;
    if (!std::getline(in, line) || line != "id\tclass\tsplit")
        throw ParseError("load_split: missing header in " + path, lineno);

    std::size_t n_classes = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw ParseError("load_split: expected id<TAB>class<TAB>split", lineno);
        m.ids.push_back(line.substr(0, t1));
        const std::string cls = line.substr(t1 + 1, t2 - t1 - 1);
        std::size_t c = 0;
        const auto res = std::from_chars(cls.data(), cls.data() + cls.size(), c);
        if (res.ec != std::errc() || res.ptr != cls.data() + cls.size())
            throw ParseError("load_split: bad class '" + cls + "'", lineno);
        m.assignment.push_back(c);
        n_classes = std::max(n_classes, c + 1);
        const std::string sname = line.substr(t2 + 1);
        std::size_t s = m.ratios.size();
        for (std::size_t cand = 0; cand < m.ratios.size(); ++cand)
            if (sname == split_name(cand)) s = cand;
        if (s == m.ratios.size())
            throw ParseError("load_split: unknown split '" + sname + "'", lineno);
        m.split.push_back(s);
    }
    m.class_counts.assign(n_classes, std::vector<std::size_t>(m.ratios.size(), 0));
    for (std::size_t i = 0; i < m.split.size(); ++i)
        ++m.class_counts[m.assignment[i]][m.split[i]];
    return m;
}

} // namespace miae::data
