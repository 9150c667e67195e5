#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/core/autograd_geom.hpp"
#include "miae/core/errors.hpp"
#include "miae/geometry/frames.hpp"
#include "miae/io/backbone.hpp"
#include "miae/model/config.hpp"
#include "miae/model/network.hpp"

// The five reconstruction terms and their unweighted sum. Coordinate terms
// are truncated squared errors over pairwise matrices; binned terms are
// cross-entropies over quantized pairwise geometry; all are averaged over
// every residue, not only masked ones.
namespace miae::losses {

inline constexpr double kDistanceCap = 25.0;
inline constexpr double kDirectionCap = 20.0;

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

// Lower bounds of the 64 squared-distance bins: 0, then (2.3125 + (k-1)*s)^2
// with step s = 0.3125, ending at 21.6875^2.
inline const std::array<double, 64>& distance_bin_bounds() {
    static const std::array<double, 64> bounds = [] {
        std::array<double, 64> b{};
        b[0] = 0.0;
        for (std::size_t k = 1; k < 64; ++k) {
            const double edge = 2.3125 + static_cast<double>(k - 1) * 0.3125;
            b[k] = edge * edge;
        }
        return b;
    }();
    return bounds;
}

inline std::size_t bin_distance_sq(double d_sq) {
    if (d_sq < 0.0) throw DomainError("bin_distance_sq: negative squared distance");
    const auto& bounds = distance_bin_bounds();
    const auto it = std::upper_bound(bounds.begin(), bounds.end(), d_sq);
    return static_cast<std::size_t>(it - bounds.begin()) - 1;
}

// 16 even bins on [-1, 1], lower-inclusive, the last closed at 1. Inputs are
// clamped first since unit vectors drift numerically. Dots within 1e-9 of
// zero land in bin 8: a residue's third unit vector is orthogonal to the
// first two by construction, and without the snap the roundoff sign of that
// dot would pick bin 7 or 8 at random under rigid motion.
inline std::size_t bin_direction(double dot) {
    if (std::abs(dot) < 1e-9) return 8;
    const double c = std::clamp(dot, -1.0, 1.0);
    const auto k = static_cast<long>(std::floor((c + 1.0) * 8.0));
    return static_cast<std::size_t>(std::clamp<long>(k, 0, 15));
}

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

// (n x 9) rows of N, CA, C coordinates.
inline Tensor backbone_coords(const io::ProteinBackbone& b) {
    Tensor out({b.size(), 9});
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& r = b.residues[i];
        const geom::Vec3 atoms[3] = {r.n, r.ca, r.c};
        for (std::size_t a = 0; a < 3; ++a) {
            out.at(i, 3 * a + 0) = atoms[a].x;
            out.at(i, 3 * a + 1) = atoms[a].y;
            out.at(i, 3 * a + 2) = atoms[a].z;
        }
    }
    return out;
}

namespace detail {

// Row-zeroing masks for chain boundaries.
inline Tensor boundary_mask(std::size_t n, bool zero_first, bool zero_last) {
    Tensor m = Tensor::full({n, 3}, 1.0);
    if (zero_first)
        for (std::size_t j = 0; j < 3; ++j) m.at(0, j) = 0.0;
    if (zero_last)
        for (std::size_t j = 0; j < 3; ++j) m.at(n - 1, j) = 0.0;
    return m;
}

} // namespace detail

// The six direction vectors per residue, stacked by kind into (6n x 3):
// N->CA, CA->C, C->N(next), -(N->CA)x(CA->C), (C(prev)->N)x(N->CA),
// (CA->C)x(C->N(next)). Vectors that would reference a residue beyond the
// chain are zero.
inline ag::Var six_direction_vectors(const ag::Var& coords) {
    const std::size_t n = coords.value().rows();
    if (coords.value().cols() != 9) throw ShapeError("six_direction_vectors: expected n x 9");
    ag::Var nn = ag::slice_cols(coords, 0, 3);
    ag::Var ca = ag::slice_cols(coords, 3, 6);
    ag::Var cc = ag::slice_cols(coords, 6, 9);

    ag::Var a = ag::sub(ca, nn);
    ag::Var b = ag::sub(cc, ca);
    ag::Var c = ag::mul_const(ag::sub(ag::shift_rows(nn, 1), cc),
                              detail::boundary_mask(n, false, true));
    ag::Var d = ag::neg(ag::cross3_rows(a, b));
    ag::Var prev_cn = ag::mul_const(ag::sub(nn, ag::shift_rows(cc, -1)),
                                    detail::boundary_mask(n, true, false));
    ag::Var e = ag::cross3_rows(prev_cn, a);
    ag::Var f = ag::cross3_rows(b, c);
    return ag::concat_rows({a, b, c, d, e, f});
}

// ---------------------------------------------------------------------------
// Continuous terms
// ---------------------------------------------------------------------------

inline ag::Var distance_loss_var(const ag::Var& pred_coords, const Tensor& true_coords) {
    if (!pred_coords.value().same_shape(true_coords) || pred_coords.value().cols() != 9)
        throw ShapeError("distance_loss: coordinate shape mismatch");
    const std::size_t n = true_coords.rows();
    ag::Var atoms = ag::reshape(pred_coords, {3 * n, 3});
    ag::Var d_pred = ag::pairdist(atoms, atoms);
    ag::Var true_atoms = ag::constant(true_coords.reshaped({3 * n, 3}));
    const Tensor d_true = ag::pairdist(true_atoms, true_atoms).value();
    return ag::capped_sq_diff_mean(d_pred, d_true, kDistanceCap);
}

inline double distance_loss(const Tensor& pred_coords, const Tensor& true_coords) {
    return distance_loss_var(ag::constant(pred_coords), true_coords).value()[0];
}

inline ag::Var direction_loss_var(const ag::Var& pred_coords, const Tensor& true_coords) {
    if (!pred_coords.value().same_shape(true_coords) || pred_coords.value().cols() != 9)
        throw ShapeError("direction_loss: coordinate shape mismatch");
    ag::Var v_pred = six_direction_vectors(pred_coords);
    ag::Var dots_pred = ag::matmul_nt(v_pred, v_pred);
    ag::Var v_true = six_direction_vectors(ag::constant(true_coords));
    const Tensor dots_true = ag::matmul_nt(v_true, v_true).value();
    return ag::capped_sq_diff_mean(dots_pred, dots_true, kDirectionCap);
}

inline double direction_loss(const Tensor& pred_coords, const Tensor& true_coords) {
    return direction_loss_var(ag::constant(pred_coords), true_coords).value()[0];
}

// ---------------------------------------------------------------------------
// Binned terms
// ---------------------------------------------------------------------------

// Bin labels of squared virtual-CB distances for all ordered pairs.
inline std::vector<int> distance_bin_labels(const io::ProteinBackbone& b) {
    const std::size_t n = b.size();
    std::vector<geom::Vec3> cb(n);
    for (std::size_t i = 0; i < n; ++i)
        cb[i] = geom::virtual_cbeta(b.residues[i].n, b.residues[i].ca, b.residues[i].c);
    std::vector<int> labels(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const geom::Vec3 d = cb[i] - cb[j];
            labels[i * n + j] = static_cast<int>(bin_distance_sq(d.dot(d)));
        }
    return labels;
}

inline ag::Var binned_distance_loss_var(const ag::Var& dist_logits, const io::ProteinBackbone& b) {
    const std::size_t n = b.size();
    if (dist_logits.value().rows() != n * n || dist_logits.value().cols() != 64)
        throw ShapeError("binned_distance_loss: logits must be n^2 x 64");
    return ag::cross_entropy_mean(dist_logits, distance_bin_labels(b));
}

inline double binned_distance_loss(const Tensor& dist_logits, const io::ProteinBackbone& b) {
    return binned_distance_loss_var(ag::constant(dist_logits), b).value()[0];
}

// Bin labels of the 9 unit-vector dot products for all ordered pairs, slot
// s = 3p + q comparing i's p-th vector with j's q-th vector; vectors are
// CA->C, CA->N, and their cross product, each normalized.
inline std::vector<int> direction_bin_labels(const io::ProteinBackbone& b) {
    const std::size_t n = b.size();
    std::vector<std::array<geom::Vec3, 3>> units(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = b.residues[i];
        geom::Vec3 u1 = r.c - r.ca;
        geom::Vec3 u2 = r.n - r.ca;
        const double l1 = u1.norm(), l2 = u2.norm();
        if (l1 < geom::kDegenerateTol || l2 < geom::kDegenerateTol)
            throw DegenerateFrameError("degenerate residue in direction labels",
                                       static_cast<long>(i));
        u1 = u1 * (1.0 / l1);
        u2 = u2 * (1.0 / l2);
        geom::Vec3 u3 = u1.cross(u2);
        const double l3 = u3.norm();
        if (l3 < geom::kDegenerateTol)
            throw DegenerateFrameError("collinear residue in direction labels",
                                       static_cast<long>(i));
        units[i] = {u1, u2, u3 * (1.0 / l3)};
    }
    std::vector<int> labels(9 * n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < 3; ++p)
                for (std::size_t q = 0; q < 3; ++q)
                    labels[(i * n + j) * 9 + 3 * p + q] =
                        static_cast<int>(bin_direction(units[i][p].dot(units[j][q])));
    return labels;
}

inline ag::Var binned_direction_loss_var(const ag::Var& dir_logits, const io::ProteinBackbone& b) {
    const std::size_t n = b.size();
    if (dir_logits.value().rows() != 9 * n * n || dir_logits.value().cols() != 16)
        throw ShapeError("binned_direction_loss: logits must be 9n^2 x 16");
    return ag::cross_entropy_mean(dir_logits, direction_bin_labels(b));
}

inline double binned_direction_loss(const Tensor& dir_logits, const io::ProteinBackbone& b) {
    return binned_direction_loss_var(ag::constant(dir_logits), b).value()[0];
}

// ---------------------------------------------------------------------------
// Inverse folding
// ---------------------------------------------------------------------------

inline ag::Var inverse_folding_loss_var(const ag::Var& aa_logits, const std::string& sequence,
                                        bool* empty_flag = nullptr) {
    if (aa_logits.value().rows() != sequence.size() || aa_logits.value().cols() != 20)
        throw ShapeError("inverse_folding_loss: logits must be n x 20");
    std::vector<int> labels(sequence.size());
    std::size_t known = 0;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        const std::size_t a = io::aa_index(sequence[i]);
        labels[i] = a == io::kUnknownAA ? -1 : static_cast<int>(a);
        if (labels[i] >= 0) ++known;
    }
    if (empty_flag) *empty_flag = known == 0;
    return ag::cross_entropy_mean(aa_logits, std::move(labels));
}

inline double inverse_folding_loss(const Tensor& aa_logits, const std::string& sequence,
                                   bool* empty_flag = nullptr) {
    return inverse_folding_loss_var(ag::constant(aa_logits), sequence, empty_flag).value()[0];
}

// ---------------------------------------------------------------------------
// Composite
// ---------------------------------------------------------------------------

struct LossTerms {
    ag::Var dist, dir, binned_dist, binned_dir, inverse_folding, total;
    bool inverse_folding_empty = false;
};

struct LossReport {
    double dist = 0.0, dir = 0.0, binned_dist = 0.0, binned_dir = 0.0;
    double inverse_folding = 0.0, total = 0.0;
    bool inverse_folding_empty = false;
};

inline LossTerms composite_loss(const model::DecodeResult& out, const io::ProteinBackbone& b,
                                const model::ModelConfig& cfg) {
    LossTerms t;
    const Tensor truth = backbone_coords(b);
    t.dist = distance_loss_var(out.coords, truth);
    t.dir = direction_loss_var(out.coords, truth);
    t.binned_dist = binned_distance_loss_var(out.dist_logits, b);
    t.binned_dir = binned_direction_loss_var(out.dir_logits, b);
    t.total = ag::add(ag::add(t.dist, t.dir), ag::add(t.binned_dist, t.binned_dir));
    if (cfg.use_inverse_folding_loss) {
        if (!out.aa_logits.defined())
            throw ShapeError("composite_loss: inverse-folding loss enabled but no aa logits");
        t.inverse_folding = inverse_folding_loss_var(out.aa_logits, b.sequence,
                                                     &t.inverse_folding_empty);
        t.total = ag::add(t.total, t.inverse_folding);
    }
    return t;
}

inline LossReport report(const LossTerms& t) {
    LossReport r;
    r.dist = t.dist.value()[0];
    r.dir = t.dir.value()[0];
    r.binned_dist = t.binned_dist.value()[0];
    r.binned_dir = t.binned_dir.value()[0];
    if (t.inverse_folding.defined()) r.inverse_folding = t.inverse_folding.value()[0];
    r.total = t.total.value()[0];
    r.inverse_folding_empty = t.inverse_folding_empty;
    return r;
}

} // namespace miae::losses
