#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "miae/core/autograd.hpp"

namespace miae::ag {

// Rotary position encoding applied to the rows of a (T x d) query or key
// block, d even. Column pair (2m, 2m+1) of row i is rotated by
// pos[i] * base^(-2m/d). The map is orthogonal per row, so the backward
// pass is the inverse rotation of the incoming gradient.
inline Var rope_rows(const Var& x, std::vector<double> pos, double base = 10000.0) {
    const Tensor& v = x.value();
    const std::size_t r = v.rows(), c = v.cols();
    if (c % 2 != 0) throw ShapeError("rope_rows: width must be even");
    if (pos.size() != r) throw ShapeError("rope_rows: position count mismatch");
    const std::size_t half = c / 2;
    std::vector<double> freq(half);
    for (std::size_t m = 0; m < half; ++m)
        freq[m] = std::pow(base, -2.0 * static_cast<double>(m) / static_cast<double>(c));
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t m = 0; m < half; ++m) {
            const double th = pos[i] * freq[m];
            const double cs = std::cos(th), sn = std::sin(th);
            const double a = v.at(i, 2 * m), b = v.at(i, 2 * m + 1);
            out.at(i, 2 * m) = a * cs - b * sn;
            out.at(i, 2 * m + 1) = a * sn + b * cs;
        }
    return detail::make(std::move(out), {x},
                        [pos = std::move(pos), freq = std::move(freq)](Node& self) {
                            Tensor& g = self.parents[0].grad();
                            const std::size_t r = g.rows();
                            for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t m = 0; m < freq.size(); ++m) {
                                    const double th = pos[i] * freq[m];
                                    const double cs = std::cos(th), sn = std::sin(th);
                                    const double ga = self.grad.at(i, 2 * m);
                                    const double gb = self.grad.at(i, 2 * m + 1);
                                    g.at(i, 2 * m) += ga * cs + gb * sn;
                                    g.at(i, 2 * m + 1) += -ga * sn + gb * cs;
                                }
                        });
}

} // namespace miae::ag
