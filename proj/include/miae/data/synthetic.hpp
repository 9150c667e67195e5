#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "miae/core/rng.hpp"
#include "miae/geometry/frames.hpp"
#include "miae/io/backbone.hpp"

namespace miae::data {

// Idealized toy folds for smoke tests and demos: an alpha helix, an extended
// beta strand, and a two-strand hairpin. Not physical models, just three
// geometrically distinct families with plausible bond lengths.
enum class FoldFamily { helix, strand, hairpin };

inline std::string family_name(FoldFamily f) {
    switch (f) {
        case FoldFamily::helix: return "helix";
        case FoldFamily::strand: return "strand";
        case FoldFamily::hairpin: return "hairpin";
    }
    return "unknown";
}

namespace detail {

inline geom::Vec3 ideal_ca(FoldFamily f, std::size_t i, std::size_t n) {
    const double fi = static_cast<double>(i);
    switch (f) {
        case FoldFamily::helix: {
            const double a = fi * 100.0 * std::numbers::pi / 180.0;
            return {2.3 * std::cos(a), 2.3 * std::sin(a), 1.5 * fi};
        }
        case FoldFamily::strand:
            return {3.3 * fi, (i % 2 == 0) ? 0.0 : 0.6, 0.0};
        case FoldFamily::hairpin: {
            const std::size_t half = (n + 1) / 2;
            if (i < half) return {3.3 * fi, (i % 2 == 0) ? 0.0 : 0.6, 0.0};
            const double j = static_cast<double>(i - half);
            const double back = 3.3 * (static_cast<double>(half) - 1.0 - j);
            return {back, 4.8 + ((i % 2 == 0) ? 0.0 : 0.6), 0.0};
        }
    }
    return {0.0, 0.0, 0.0};
}

} // namespace detail

// Deterministic generator: the same family, length, noise, and seed always
// produce the same backbone, already placed at a random rigid pose.
inline io::ProteinBackbone synthetic_fold(FoldFamily f, std::size_t n, double noise,
                                          std::uint64_t seed) {
    static const char aa[21] = "ACDEFGHIKLMNPQRSTVWY";
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(f) + 1));

    io::ProteinBackbone b;
    b.id = family_name(f) + "-" + std::to_string(seed);
    b.residues.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const geom::Vec3 ca = detail::ideal_ca(f, i, n);
        const geom::Vec3 next = detail::ideal_ca(f, i + 1 < n ? i + 1 : i, n);
        const geom::Vec3 prev = detail::ideal_ca(f, i > 0 ? i - 1 : i, n);
        geom::Vec3 t = i + 1 < n ? next - ca : ca - prev;
        t = t * (1.0 / t.norm());
        geom::Vec3 side = t.cross({0.0, 0.0, 1.0});
        if (side.norm() < 0.1) side = t.cross({0.0, 1.0, 0.0});
        side = side * (1.0 / side.norm());

        io::Residue r;
        r.ca = ca;
        r.n = ca - 0.5 * t + 1.2 * side;
        r.c = ca + 1.5 * t;
        for (geom::Vec3* a : {&r.n, &r.ca, &r.c}) {
            a->x += noise * rng.normal();
            a->y += noise * rng.normal();
            a->z += noise * rng.normal();
        }
        b.residues.push_back(r);
        b.sequence.push_back(aa[rng.uniform_int(20)]);
        b.plddt.push_back(90.0);
    }

    const geom::Mat3 rot = geom::random_rotation(rng);
    const geom::Vec3 shift{10.0 * rng.normal(), 10.0 * rng.normal(), 10.0 * rng.normal()};
    return geom::apply_rigid(b, rot, shift);
}

} // namespace miae::data
