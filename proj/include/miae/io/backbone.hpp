#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "miae/geometry/vec3.hpp"

namespace miae::io {

struct Residue {
    geom::Vec3 n, ca, c;
};

// Backbone-only protein structure: N/CA/C per residue, one-letter sequence
// ('X' for unknown types), and per-residue confidence in [0, 100].
struct ProteinBackbone {
    std::string id;
    std::vector<Residue> residues;
    std::string sequence;
    std::vector<double> plddt;
    std::size_t dropped_residues = 0; // incomplete residues skipped by the parser
    std::vector<std::string> warnings;

    std::size_t size() const { return residues.size(); }
};

inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::size_t kUnknownAA = 20; // index of 'X'

inline std::size_t aa_index(char one_letter) {
    const auto p = kAminoAcids.find(one_letter);
    return p == std::string_view::npos ? kUnknownAA : p;
}

inline char aa_from_three(std::string_view three) {
    static constexpr std::array<std::pair<std::string_view, char>, 20> table{{
        {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'},
        {"GLN", 'Q'}, {"GLU", 'E'}, {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'},
        {"LEU", 'L'}, {"LYS", 'K'}, {"MET", 'M'}, {"PHE", 'F'}, {"PRO", 'P'},
        {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'}, {"TYR", 'Y'}, {"VAL", 'V'},
    }};
    for (const auto& [name, code] : table)
        if (name == three) return code;
    return 'X';
}

inline std::string three_from_aa(char one_letter) {
    static constexpr std::array<std::pair<char, std::string_view>, 20> table{{
        {'A', "ALA"}, {'R', "ARG"}, {'N', "ASN"}, {'D', "ASP"}, {'C', "CYS"},
        {'Q', "GLN"}, {'E', "GLU"}, {'G', "GLY"}, {'H', "HIS"}, {'I', "ILE"},
        {'L', "LEU"}, {'K', "LYS"}, {'M', "MET"}, {'F', "PHE"}, {'P', "PRO"},
        {'S', "SER"}, {'T', "THR"}, {'W', "TRP"}, {'Y', "TYR"}, {'V', "VAL"},
    }};
    for (const auto& [code, name] : table)
        if (code == one_letter) return std::string(name);
    return "UNK";
}

// Strict mean-confidence cutoff.
inline bool passes_plddt_filter(const ProteinBackbone& b, double threshold) {
    if (b.plddt.empty()) return false;
    double s = 0.0;
    for (double v : b.plddt) s += v;
    return s / static_cast<double>(b.plddt.size()) > threshold;
}

} // namespace miae::io
