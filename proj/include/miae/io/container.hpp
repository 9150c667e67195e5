#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/io/backbone.hpp"

// Binary backbone container: exact float64 round trip for prepared datasets,
// independent of PDB column precision. Little-endian host assumed.
namespace miae::io {

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

inline void put_f64(std::string& out, double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

struct Cursor {
    const char* p;
    const char* end;
    std::uint64_t u64() {
        if (end - p < 8) throw ParseError("backbone container truncated");
        std::uint64_t v;
        std::memcpy(&v, p, 8);
        p += 8;
        return v;
    }
    double f64() {
        if (end - p < 8) throw ParseError("backbone container truncated");
        double v;
        std::memcpy(&v, p, 8);
        p += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        if (static_cast<std::size_t>(end - p) < n) throw ParseError("backbone container truncated");
        std::string s(p, n);
        p += n;
        return s;
    }
};

} // namespace detail

inline constexpr char kBackboneMagic[9] = "MIAEBB01";

inline std::string serialize_backbones(const std::vector<ProteinBackbone>& set) {
    std::string out(kBackboneMagic, 8);
    detail::put_u64(out, set.size());
    for (const auto& b : set) {
        detail::put_u64(out, b.id.size());
        out += b.id;
        detail::put_u64(out, b.size());
        for (const auto& r : b.residues)
            for (const geom::Vec3& v : {r.n, r.ca, r.c}) {
                detail::put_f64(out, v.x);
                detail::put_f64(out, v.y);
                detail::put_f64(out, v.z);
            }
        out += b.sequence;
        for (double v : b.plddt) detail::put_f64(out, v);
    }
    return out;
}

inline std::vector<ProteinBackbone> deserialize_backbones(const std::string& blob) {
    if (blob.size() < 8 || blob.compare(0, 8, kBackboneMagic, 8) != 0)
        throw ParseError("not a backbone container");
    detail::Cursor cur{blob.data() + 8, blob.data() + blob.size()};
    std::vector<ProteinBackbone> set(cur.u64());
    for (auto& b : set) {
        b.id = cur.bytes(cur.u64());
        const std::uint64_t n = cur.u64();
        b.residues.resize(n);
        for (auto& r : b.residues)
            for (geom::Vec3* v : {&r.n, &r.ca, &r.c}) {
                v->x = cur.f64();
                v->y = cur.f64();
                v->z = cur.f64();
            }
        b.sequence = cur.bytes(n);
        b.plddt.resize(n);
        for (double& v : b.plddt) v = cur.f64();
    }
    return set;
}

inline void write_backbone_file(const std::string& path, const std::vector<ProteinBackbone>& set) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    const std::string blob = serialize_backbones(set);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw Error("write failed: " + path);
}

inline std::vector<ProteinBackbone> read_backbone_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_backbones(blob);
}

} // namespace miae::io
