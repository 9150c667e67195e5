#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/geometry/vec3.hpp"

// Autograd ops over rows treated as 3D points or vectors, plus the capped
// squared-error reduction used by the coordinate losses.
namespace miae::ag {

// Row i of the output is R_i * x_i (or R_i^T * x_i). The rotations are
// constants of the op, not differentiated through.
inline Var rotate_rows(const Var& x, std::vector<geom::Mat3> rots, bool transpose = false) {
    const Tensor& v = x.value();
    const std::size_t n = v.rows();
    if (v.cols() != 3) throw ShapeError("rotate_rows: expected 3 columns");
    if (rots.size() != n) throw ShapeError("rotate_rows: rotation count mismatch");
    Tensor out({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        const geom::Vec3 p{v.at(i, 0), v.at(i, 1), v.at(i, 2)};
        const geom::Vec3 q = transpose ? rots[i].tmul(p) : rots[i] * p;
        out.at(i, 0) = q.x;
        out.at(i, 1) = q.y;
        out.at(i, 2) = q.z;
    }
    return detail::make(std::move(out), {x}, [rots = std::move(rots), transpose](Node& self) {
        Tensor& g = self.parents[0].grad();
        const std::size_t n = g.rows();
        for (std::size_t i = 0; i < n; ++i) {
            const geom::Vec3 go{self.grad.at(i, 0), self.grad.at(i, 1), self.grad.at(i, 2)};
            const geom::Vec3 gi = transpose ? rots[i] * go : rots[i].tmul(go);
            g.at(i, 0) += gi.x;
            g.at(i, 1) += gi.y;
            g.at(i, 2) += gi.z;
        }
    });
}

// All pairwise Euclidean distances between rows of a (m x 3) and b (n x 3).
// A tiny epsilon under the square root keeps the diagonal differentiable
// when a and b are the same tensor; the matching backward contributes an
// exact zero there instead of 0/0.
inline Var pairdist(const Var& a, const Var& b, double eps = 1e-12) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != 3 || bv.cols() != 3) throw ShapeError("pairdist: expected 3 columns");
    const std::size_t m = av.rows(), n = bv.rows();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = av.at(i, 0) - bv.at(j, 0);
            const double dy = av.at(i, 1) - bv.at(j, 1);
            const double dz = av.at(i, 2) - bv.at(j, 2);
            out.at(i, j) = std::sqrt(dx * dx + dy * dy + dz * dz + eps);
        }
    return detail::make(std::move(out), {a, b}, [m, n](Node& self) {
        const Tensor& av = self.parents[0].value();
        const Tensor& bv = self.parents[1].value();
        const bool need_a = self.parents[0].requires_grad();
        const bool need_b = self.parents[1].requires_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double go = self.grad.at(i, j);
                if (go == 0.0) continue;
                const double d = self.value.at(i, j);
                const double s = go / d;
                for (std::size_t k = 0; k < 3; ++k) {
                    const double diff = av.at(i, k) - bv.at(j, k);
                    if (need_a) self.parents[0].grad().at(i, k) += s * diff;
                    if (need_b) self.parents[1].grad().at(j, k) -= s * diff;
                }
            }
    });
}

// Rowwise cross product of two (n x 3) operands.
inline Var cross3_rows(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    detail::check_same_shape(av, bv, "cross3_rows");
    if (av.cols() != 3) throw ShapeError("cross3_rows: expected 3 columns");
    const std::size_t n = av.rows();
    Tensor out({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        const geom::Vec3 u{av.at(i, 0), av.at(i, 1), av.at(i, 2)};
        const geom::Vec3 w{bv.at(i, 0), bv.at(i, 1), bv.at(i, 2)};
        const geom::Vec3 c = u.cross(w);
        out.at(i, 0) = c.x;
        out.at(i, 1) = c.y;
        out.at(i, 2) = c.z;
    }
    return detail::make(std::move(out), {a, b}, [n](Node& self) {
        const Tensor& av = self.parents[0].value();
        const Tensor& bv = self.parents[1].value();
        for (std::size_t i = 0; i < n; ++i) {
            const geom::Vec3 u{av.at(i, 0), av.at(i, 1), av.at(i, 2)};
            const geom::Vec3 w{bv.at(i, 0), bv.at(i, 1), bv.at(i, 2)};
            const geom::Vec3 g{self.grad.at(i, 0), self.grad.at(i, 1), self.grad.at(i, 2)};
            if (self.parents[0].requires_grad()) {
                const geom::Vec3 da = w.cross(g);
                self.parents[0].grad().at(i, 0) += da.x;
                self.parents[0].grad().at(i, 1) += da.y;
                self.parents[0].grad().at(i, 2) += da.z;
            }
            if (self.parents[1].requires_grad()) {
                const geom::Vec3 db = g.cross(u);
                self.parents[1].grad().at(i, 0) += db.x;
                self.parents[1].grad().at(i, 1) += db.y;
                self.parents[1].grad().at(i, 2) += db.z;
            }
        }
    });
}

// mean(min((pred - truth)^2, cap)) over all elements; truth is constant.
// Elements at or past the cap contribute zero gradient.
inline Var capped_sq_diff_mean(const Var& pred, Tensor truth, double cap) {
    const Tensor& pv = pred.value();
    detail::check_same_shape(pv, truth, "capped_sq_diff_mean");
    const double n = static_cast<double>(pv.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - truth[i];
        total += std::min(d * d, cap);
    }
    return detail::make(Tensor::scalar(total / n), {pred},
                        [truth = std::move(truth), cap, n](Node& self) {
                            const Tensor& pv = self.parents[0].value();
                            Tensor& g = self.parents[0].grad();
                            const double go = self.grad[0] / n;
                            for (std::size_t i = 0; i < pv.size(); ++i) {
                                const double d = pv[i] - truth[i];
                                if (d * d < cap) g[i] += go * 2.0 * d;
                            }
                        });
}

// Pair representation builder: rows A_i + B_j for all ordered pairs,
// laid out as row i*n + j. A and B are (n x k); the result is (n^2 x k).
inline Var outer_sum(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    detail::check_same_shape(av, bv, "outer_sum");
    const std::size_t n = av.rows(), k = av.cols();
    Tensor out({n * n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < k; ++c) out.at(i * n + j, c) = av.at(i, c) + bv.at(j, c);
    return detail::make(std::move(out), {a, b}, [n, k](Node& self) {
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t c = 0; c < k; ++c) g.at(i, c) += self.grad.at(i * n + j, c);
        }
        if (self.parents[1].requires_grad()) {
            Tensor& g = self.parents[1].grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t c = 0; c < k; ++c) g.at(j, c) += self.grad.at(i * n + j, c);
        }
    });
}

} // namespace miae::ag
