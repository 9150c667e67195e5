#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/core/rng.hpp"
#include "miae/geometry/vec3.hpp"
#include "miae/io/backbone.hpp"

namespace miae::geom {

// Rigid frame of one residue: columns of R are the local axes, t is the
// alpha-carbon position.
struct Frame {
    Mat3 R;
    Vec3 t;
};

using FrameSet = std::vector<Frame>;

inline constexpr double kDegenerateTol = 1e-6;

// Gram-Schmidt frame from the three backbone atoms: e1 along C-CA, e2 the
// orthogonalized N-CA direction, e3 their cross product.
inline Frame build_frame(const Vec3& n, const Vec3& ca, const Vec3& c, long residue = -1) {
    const Vec3 v1 = c - ca;
    const double l1 = v1.norm();
    if (l1 < kDegenerateTol) throw DegenerateFrameError("C and CA coincide", residue);
    const Vec3 e1 = v1 * (1.0 / l1);
    const Vec3 u = n - ca;
    const Vec3 w = u - e1 * u.dot(e1);
    const double l2 = w.norm();
    if (l2 < kDegenerateTol) throw DegenerateFrameError("N, CA, C are collinear", residue);
    const Vec3 e2 = w * (1.0 / l2);
    return {Mat3::from_cols(e1, e2, e1.cross(e2)), ca};
}

inline FrameSet build_frames(const io::ProteinBackbone& b) {
    if (b.size() == 0) throw ShapeError("build_frames: empty backbone");
    FrameSet frames;
    frames.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        frames.push_back(build_frame(b.residues[i].n, b.residues[i].ca, b.residues[i].c,
                                     static_cast<long>(i)));
    return frames;
}

inline Vec3 to_global(const Frame& f, const Vec3& p_local) { return f.R * p_local + f.t; }

inline Vec3 to_local(const Frame& f, const Vec3& p_global) { return f.R.tmul(p_global - f.t); }

inline bool is_rotation(const Mat3& R, double tol = 1e-6) {
    const Mat3 rtr = R.transposed() * R;
    const Mat3 eye = Mat3::identity();
    for (std::size_t i = 0; i < 9; ++i)
        if (std::abs(rtr.m[i] - eye.m[i]) > tol) return false;
    return std::abs(R.det() - 1.0) <= tol;
}

inline io::ProteinBackbone apply_rigid(const io::ProteinBackbone& b, const Mat3& R, const Vec3& t) {
    if (!is_rotation(R)) throw InvalidTransformError("apply_rigid: R is not a proper rotation");
    io::ProteinBackbone out = b;
    for (auto& r : out.residues) {
        r.n = R * r.n + t;
        r.ca = R * r.ca + t;
        r.c = R * r.c + t;
    }
    return out;
}

// Idealized side-chain direction from the backbone alone.
inline Vec3 virtual_cbeta(const Vec3& n, const Vec3& ca, const Vec3& c) {
    const Vec3 b = ca - n;
    const Vec3 cp = c - ca;
    const Vec3 a = b.cross(cp);
    if (b.norm() < kDegenerateTol || cp.norm() < kDegenerateTol || a.norm() < kDegenerateTol)
        throw DegenerateFrameError("degenerate geometry for virtual C-beta");
    return -0.58273431 * a + 0.56802827 * b - 0.54067466 * cp + ca;
}

// Uniform-enough random rotation for tests and augmentation: orthonormalize
// two Gaussian directions.
inline Mat3 random_rotation(Rng& rng) {
    while (true) {
        Vec3 u{rng.normal(), rng.normal(), rng.normal()};
        Vec3 w{rng.normal(), rng.normal(), rng.normal()};
        const double lu = u.norm();
        if (lu < 1e-3) continue;
        u = u * (1.0 / lu);
        Vec3 e2 = w - u * w.dot(u);
        const double l2 = e2.norm();
        if (l2 < 1e-3) continue;
        e2 = e2 * (1.0 / l2);
        return Mat3::from_cols(u, e2, u.cross(e2));
    }
}

struct RigidTransform {
    Mat3 R;
    Vec3 t;
};

inline RigidTransform random_rigid(Rng& rng, double translation_scale = 10.0) {
    return {random_rotation(rng),
            {translation_scale * rng.normal(), translation_scale * rng.normal(),
             translation_scale * rng.normal()}};
}

} // namespace miae::geom
