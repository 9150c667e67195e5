#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/io/backbone.hpp"

// PDB v3.3 fixed-column ATOM records. Only the backbone atoms N, CA, C are
// kept; everything else in the file is ignored.
namespace miae::io {

namespace detail {

inline std::string_view field(std::string_view line, std::size_t col0, std::size_t col1) {
    // columns are 1-based inclusive in the format description
    if (line.size() < col1) return line.size() > col0 - 1 ? line.substr(col0 - 1) : std::string_view{};
    return line.substr(col0 - 1, col1 - col0 + 1);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_coord(std::string_view raw, std::size_t line_no, const char* what) {
    const std::string_view t = trim(raw);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || t.empty() || !std::isfinite(v))
        throw ParseError(std::string("bad ") + what + " field '" + std::string(raw) + "'", line_no);
    return v;
}

inline double parse_bfactor(std::string_view raw) {
    const std::string_view t = trim(raw);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) return 0.0;
    return v;
}

} // namespace detail

inline ProteinBackbone parse_backbone(std::string_view text, std::string id = "") {
    struct PartialResidue {
        geom::Vec3 n, ca, c;
        bool has_n = false, has_ca = false, has_c = false;
        char aa = 'X';
        double bfactor = 0.0;
        bool has_bfactor = false;
    };
    // key = (resSeq, iCode), kept in first-appearance order
    std::vector<std::pair<std::string, PartialResidue>> groups;
    std::map<std::string, std::size_t> group_index;

    char chain = '\0';
    bool chain_locked = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (line.size() >= 6 && line.substr(0, 6) == "ENDMDL") break; // first model only
        if (line.size() < 6 || line.substr(0, 6) != "ATOM  ") continue;

        const char line_chain = line.size() >= 22 ? line[21] : ' ';
        if (!chain_locked) {
            chain = line_chain;
            chain_locked = true;
        } else if (line_chain != chain) {
            continue;
        }

        const char alt = line.size() >= 17 ? line[16] : ' ';
        if (alt != ' ' && alt != 'A') continue;

        const std::string_view atom = detail::trim(detail::field(line, 13, 16));
        if (atom != "N" && atom != "CA" && atom != "C") continue;

        const std::string key =
            std::string(detail::trim(detail::field(line, 23, 26))) + "|" +
            (line.size() >= 27 ? std::string(1, line[26]) : " ");
        auto it = group_index.find(key);
        if (it == group_index.end()) {
            it = group_index.emplace(key, groups.size()).first;
            groups.emplace_back(key, PartialResidue{});
        }
        PartialResidue& res = groups[it->second].second;

        const geom::Vec3 xyz{detail::parse_coord(detail::field(line, 31, 38), line_no, "x"),
                             detail::parse_coord(detail::field(line, 39, 46), line_no, "y"),
                             detail::parse_coord(detail::field(line, 47, 54), line_no, "z")};
        if (atom == "N" && !res.has_n) {
            res.n = xyz;
            res.has_n = true;
        } else if (atom == "CA" && !res.has_ca) {
            res.ca = xyz;
            res.has_ca = true;
            res.aa = aa_from_three(detail::trim(detail::field(line, 18, 20)));
            res.bfactor = detail::parse_bfactor(detail::field(line, 61, 66));
            res.has_bfactor = true;
        } else if (atom == "C" && !res.has_c) {
            res.c = xyz;
            res.has_c = true;
        }
    }

    ProteinBackbone b;
    b.id = std::move(id);
    for (auto& [key, res] : groups) {
        if (!(res.has_n && res.has_ca && res.has_c)) {
            ++b.dropped_residues;
            continue;
        }
        b.residues.push_back({res.n, res.ca, res.c});
        b.sequence.push_back(res.aa);
        b.plddt.push_back(res.bfactor);
    }
    if (b.residues.empty()) throw ParseError("no complete backbone residue found", line_no);

    for (std::size_t i = 0; i + 1 < b.residues.size(); ++i) {
        const double d = (b.residues[i + 1].ca - b.residues[i].ca).norm();
        if (d >= 10.0)
            b.warnings.push_back("chain break: CA-CA distance " + std::to_string(d) +
                                 " A between residues " + std::to_string(i) + " and " +
                                 std::to_string(i + 1));
    }
    return b;
}

// Writes N/CA/C ATOM records. The B-factor column carries `bfactors` when
// given (one value per residue, e.g. reconstruction mask flags), otherwise
// the stored pLDDT.
inline std::string write_pdb(const ProteinBackbone& b, const std::vector<double>* bfactors = nullptr) {
    if (bfactors && bfactors->size() != b.size())
        throw ShapeError("write_pdb: bfactor count mismatch");
    std::string out;
    out.reserve(b.size() * 3 * 81 + 8);
    char buf[96];
    int serial = 1;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const std::string res3 = three_from_aa(b.sequence[i]);
        const double bf = bfactors ? (*bfactors)[i] : b.plddt[i];
        const struct {
            const char* name;
            const char* element;
            geom::Vec3 v;
        } atoms[3] = {{" N  ", "N", b.residues[i].n},
                      {" CA ", "C", b.residues[i].ca},
                      {" C  ", "C", b.residues[i].c}};
        for (const auto& a : atoms) {
            std::snprintf(buf, sizeof(buf),
                          "ATOM  %5d %s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n",
                          serial++, a.name, ' ', res3.c_str(), 'A', static_cast<int>(i + 1), ' ',
                          a.v.x, a.v.y, a.v.z, 1.0, bf, a.element);
            out += buf;
        }
    }
    out += "END\n";
    return out;
}

} // namespace miae::io
