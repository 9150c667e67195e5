#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <unordered_set>
#include <utility>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/core/tensor.hpp"

// Reverse-mode automatic differentiation over Tensor. A forward pass builds
// a DAG of shared nodes; backward() walks it once in reverse topological
// order. All values are double precision, so analytic gradients can be
// checked against central finite differences to tight tolerances.
namespace miae::ag {

struct Node;

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    const Tensor& value() const;
    Tensor& grad() const;
    bool requires_grad() const;
    bool defined() const { return node_ != nullptr; }
    Node* node() const { return node_.get(); }
    std::shared_ptr<Node> ptr() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

struct Node {
    Tensor value;
    Tensor grad; // allocated on first touch during backward
    bool needs_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (grad.size() == 0) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

inline const Tensor& Var::value() const { return node_->value; }
inline Tensor& Var::grad() const { return node_->ensure_grad(); }
inline bool Var::requires_grad() const { return node_ && node_->needs_grad; }

// Leaf with gradient tracking (parameters, inputs under test).
inline Var leaf(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->needs_grad = true;
    return Var(std::move(n));
}

// Constant: participates in forward math, never receives gradient.
inline Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->needs_grad = false;
    return Var(std::move(n));
}

namespace detail {

inline Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents)
        if (p.requires_grad()) n->needs_grad = true;
    n->parents = std::move(parents);
    if (n->needs_grad) n->backward_fn = std::move(backward);
    return Var(std::move(n));
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace detail

// Runs reverse-mode accumulation from a scalar root.
inline void backward(const Var& root) {
    if (root.value().size() != 1) throw ShapeError("backward root must be scalar");
    // Iterative post-order topological sort over the required subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].node();
            ++idx;
            if (parent && parent->needs_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    detail::check_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return detail::make(std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            auto& p = self.parents[k];
            if (!p.requires_grad()) continue;
            Tensor& g = p.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

inline Var sub(const Var& a, const Var& b) {
    detail::check_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return detail::make(std::move(out), {a, b}, [](Node& self) {
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.parents[1].requires_grad()) {
            Tensor& g = self.parents[1].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

inline Var mul(const Var& a, const Var& b) {
    detail::check_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return detail::make(std::move(out), {a, b}, [](Node& self) {
        const Tensor& av = self.parents[0].value();
        const Tensor& bv = self.parents[1].value();
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
        }
        if (self.parents[1].requires_grad()) {
            Tensor& g = self.parents[1].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
        }
    });
}

inline Var scale(const Var& a, double s) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    return detail::make(std::move(out), {a}, [s](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
    });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var add_const(const Var& a, Tensor c) {
    detail::check_same_shape(a.value(), c, "add_const");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
    return detail::make(std::move(out), {a}, [](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

inline Var mul_const(const Var& a, Tensor c) {
    detail::check_same_shape(a.value(), c, "mul_const");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
    return detail::make(std::move(out), {a}, [c = std::move(c)](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c[i];
    });
}

// GELU with the exact erf form, so finite differences agree everywhere.
inline Var gelu(const Var& a) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = out[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    }
    return detail::make(std::move(out), {a}, [](Node& self) {
        const Tensor& x = self.parents[0].value();
        Tensor& g = self.parents[0].grad();
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = x[i];
            const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            g[i] += self.grad[i] * (cdf + v * pdf);
        }
    });
}

inline Var softplus(const Var& a) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = out[i];
        out[i] = x > 30.0 ? x : std::log1p(std::exp(x));
    }
    return detail::make(std::move(out), {a}, [](Node& self) {
        const Tensor& x = self.parents[0].value();
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] / (1.0 + std::exp(-x[i]));
    });
}

// ---------------------------------------------------------------------------
// Shape plumbing
// ---------------------------------------------------------------------------

inline Var reshape(const Var& a, std::vector<std::size_t> shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    return detail::make(std::move(out), {a}, [](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

inline Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty");
    const std::size_t c = parts[0].value().cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.value().cols() != c) throw ShapeError("concat_rows: column mismatch");
        r += p.value().rows();
    }
    Tensor out({r, c});
    std::size_t off = 0;
    for (const auto& p : parts) {
        const Tensor& v = p.value();
        std::copy(v.data(), v.data() + v.size(), out.data() + off);
        off += v.size();
    }
    return detail::make(std::move(out), parts, [](Node& self) {
        std::size_t off = 0;
        for (auto& p : self.parents) {
            const std::size_t n = p.value().size();
            if (p.requires_grad()) {
                Tensor& g = p.grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
            }
            off += n;
        }
    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty");
    const std::size_t r = parts[0].value().rows();
    std::size_t c = 0;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        if (p.value().rows() != r) throw ShapeError("concat_cols: row mismatch");
        widths.push_back(p.value().cols());
        c += widths.back();
    }
    Tensor out({r, c});
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& v = parts[k].value();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < widths[k]; ++j) out.at(i, off + j) = v.at(i, j);
        off += widths[k];
    }
    return detail::make(std::move(out), parts, [widths = std::move(widths)](Node& self) {
        const std::size_t r = self.value.rows();
        std::size_t off = 0;
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            if (self.parents[k].requires_grad()) {
                Tensor& g = self.parents[k].grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < widths[k]; ++j) g.at(i, j) += self.grad.at(i, off + j);
            }
            off += widths[k];
        }
    });
}

inline Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
    const Tensor& v = a.value();
    const std::size_t r = v.rows(), c = v.cols();
    if (c1 > c || c0 >= c1) throw ShapeError("slice_cols: bad range");
    Tensor out({r, c1 - c0});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = v.at(i, j);
    return detail::make(std::move(out), {a}, [c0, c1](Node& self) {
        Tensor& g = self.parents[0].grad();
        const std::size_t r = g.rows();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = c0; j < c1; ++j) g.at(i, j) += self.grad.at(i, j - c0);
    });
}

// Picks rows by (constant) index; duplicates allowed (embedding lookup).
inline Var gather_rows(const Var& a, std::vector<std::size_t> idx) {
    const Tensor& v = a.value();
    const std::size_t c = v.cols();
    Tensor out({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= v.rows()) throw ShapeError("gather_rows: index out of range");
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = v.at(idx[i], j);
    }
    return detail::make(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
        Tensor& g = self.parents[0].grad();
        const std::size_t c = g.cols();
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) g.at(idx[i], j) += self.grad.at(i, j);
    });
}

// n rows of the same learned row vector.
inline Var repeat_row(const Var& a, std::size_t n) {
    const Tensor& v = a.value();
    const std::size_t c = v.size();
    Tensor out({n, c});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = v[j];
    return detail::make(std::move(out), {a}, [n, c](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) g[j] += self.grad.at(i, j);
    });
}

// Full sequence from visible rows plus a shared fill vector at the
// remaining positions (decoder mask-token insertion).
inline Var scatter_rows(const Var& visible, const Var& fill, const std::vector<std::size_t>& visible_idx,
                        std::size_t n) {
    const Tensor& v = visible.value();
    const std::size_t c = v.cols();
    if (fill.value().size() != c) throw ShapeError("scatter_rows: fill width mismatch");
    if (v.rows() != visible_idx.size()) throw ShapeError("scatter_rows: index count mismatch");
    Tensor out({n, c});
    std::vector<bool> is_visible(n, false);
    for (std::size_t i = 0; i < visible_idx.size(); ++i) {
        is_visible[visible_idx[i]] = true;
        for (std::size_t j = 0; j < c; ++j) out.at(visible_idx[i], j) = v.at(i, j);
    }
    for (std::size_t r = 0; r < n; ++r)
        if (!is_visible[r])
            for (std::size_t j = 0; j < c; ++j) out.at(r, j) = fill.value()[j];
    return detail::make(std::move(out), {visible, fill},
                        [idx = visible_idx, n, is_visible](Node& self) {
                            const std::size_t c = self.value.cols();
                            if (self.parents[0].requires_grad()) {
                                Tensor& g = self.parents[0].grad();
                                for (std::size_t i = 0; i < idx.size(); ++i)
                                    for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad.at(idx[i], j);
                            }
                            if (self.parents[1].requires_grad()) {
                                Tensor& g = self.parents[1].grad();
                                for (std::size_t r = 0; r < n; ++r)
                                    if (!is_visible[r])
                                        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad.at(r, j);
                            }
                        });
}

// Row shift with zero padding; delta = +1 reads the next row, -1 the previous.
inline Var shift_rows(const Var& a, int delta) {
    const Tensor& v = a.value();
    const std::size_t r = v.rows(), c = v.cols();
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const long src = static_cast<long>(i) + delta;
        if (src < 0 || src >= static_cast<long>(r)) continue;
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = v.at(static_cast<std::size_t>(src), j);
    }
    return detail::make(std::move(out), {a}, [delta](Node& self) {
        Tensor& g = self.parents[0].grad();
        const std::size_t r = g.rows(), c = g.cols();
        for (std::size_t i = 0; i < r; ++i) {
            const long src = static_cast<long>(i) + delta;
            if (src < 0 || src >= static_cast<long>(r)) continue;
            for (std::size_t j = 0; j < c; ++j) g.at(static_cast<std::size_t>(src), j) += self.grad.at(i, j);
        }
    });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Var sum(const Var& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
    return detail::make(Tensor::scalar(s), {a}, [](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
    });
}

inline Var mean(const Var& a) {
    const double n = static_cast<double>(a.value().size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
    return detail::make(Tensor::scalar(s / n), {a}, [n](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] / n;
    });
}

// Column means over rows: (T x d) -> (d). Mean pooling.
inline Var mean_rows(const Var& a) {
    const Tensor& v = a.value();
    const std::size_t r = v.rows(), c = v.cols();
    if (r == 0) throw ShapeError("mean_rows: empty");
    Tensor out({c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j] += v.at(i, j);
    for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(r);
    return detail::make(std::move(out), {a}, [r, c](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g.at(i, j) += self.grad[j] / static_cast<double>(r);
    });
}

inline Var add_scaled(const Var& a, const Var& b, double s) {
    detail::check_same_shape(a.value(), b.value(), "add_scaled");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b.value()[i];
    return detail::make(std::move(out), {a, b}, [s](Node& self) {
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.parents[1].requires_grad()) {
            Tensor& g = self.parents[1].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

namespace detail {
// C (m x n) += A (m x k) * B (k x n); optional transposes handled by caller.
inline void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
// C (m x n) += A (m x k) * B^T where B is (n x k).
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}
// C (k x n) += A^T * B where A is (m x k), B is (m x n).
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
} // namespace detail

inline Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (bv.rows() != k) throw ShapeError("matmul: inner dims " + av.shape_str() + " x " + bv.shape_str());
    Tensor out({m, n});
    detail::gemm(av.data(), bv.data(), out.data(), m, k, n);
    return detail::make(std::move(out), {a, b}, [m, k, n](Node& self) {
        const Tensor& av = self.parents[0].value();
        const Tensor& bv = self.parents[1].value();
        if (self.parents[0].requires_grad()) // dA = dC * B^T
            detail::gemm_nt(self.grad.data(), bv.data(), self.parents[0].grad().data(), m, n, k);
        if (self.parents[1].requires_grad()) // dB = A^T * dC
            detail::gemm_tn(av.data(), self.grad.data(), self.parents[1].grad().data(), m, k, n);
    });
}

// a * b^T for row-major operands of shape (m x k) and (n x k).
inline Var matmul_nt(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
    if (bv.cols() != k) throw ShapeError("matmul_nt: inner dims");
    Tensor out({m, n});
    detail::gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
    return detail::make(std::move(out), {a, b}, [m, k, n](Node& self) {
        const Tensor& av = self.parents[0].value();
        const Tensor& bv = self.parents[1].value();
        if (self.parents[0].requires_grad()) // dA = dC * B
            detail::gemm(self.grad.data(), bv.data(), self.parents[0].grad().data(), m, n, k);
        if (self.parents[1].requires_grad()) // dB = dC^T * A
            detail::gemm_tn(self.grad.data(), av.data(), self.parents[1].grad().data(), m, n, k);
    });
}

// Adds a row vector to every row.
inline Var add_rowvec(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    if (b.value().size() != c) throw ShapeError("add_rowvec: width mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) += b.value()[j];
    return detail::make(std::move(out), {a, b}, [r, c](Node& self) {
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.parents[1].requires_grad()) {
            Tensor& g = self.parents[1].grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) g[j] += self.grad.at(i, j);
        }
    });
}

inline Var linear(const Var& x, const Var& w, const Var& b) { return add_rowvec(matmul(x, w), b); }

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

inline Var softmax_rows(const Var& a) {
    const Tensor& v = a.value();
    const std::size_t r = v.rows(), c = v.cols();
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = v.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, v.at(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += (out.at(i, j) = std::exp(v.at(i, j) - mx));
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= s;
    }
    return detail::make(std::move(out), {a}, [r, c](Node& self) {
        Tensor& g = self.parents[0].grad();
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += self.grad.at(i, j) * self.value.at(i, j);
            for (std::size_t j = 0; j < c; ++j)
                g.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
        }
    });
}

// Mean cross-entropy between rows of logits and integer labels.
// Rows whose label equals ignore_label contribute nothing; if every row is
// ignored the result is 0 (callers surface that case themselves).
inline Var cross_entropy_mean(const Var& logits, std::vector<int> labels, int ignore_label = -1) {
    const Tensor& v = logits.value();
    const std::size_t r = v.rows(), c = v.cols();
    if (labels.size() != r) throw ShapeError("cross_entropy_mean: label count");
    std::size_t valid = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (labels[i] == ignore_label) continue;
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw ShapeError("cross_entropy_mean: label out of range");
        ++valid;
        double mx = v.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, v.at(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(v.at(i, j) - mx);
        total += std::log(s) + mx - v.at(i, static_cast<std::size_t>(labels[i]));
    }
    const double denom = valid ? static_cast<double>(valid) : 1.0;
    return detail::make(Tensor::scalar(total / denom), {logits},
                        [labels = std::move(labels), ignore_label, denom](Node& self) {
                            const Tensor& v = self.parents[0].value();
                            Tensor& g = self.parents[0].grad();
                            const std::size_t r = v.rows(), c = v.cols();
                            const double go = self.grad[0] / denom;
                            for (std::size_t i = 0; i < r; ++i) {
                                if (labels[i] == ignore_label) continue;
                                double mx = v.at(i, 0);
                                for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, v.at(i, j));
                                double s = 0.0;
                                for (std::size_t j = 0; j < c; ++j) s += std::exp(v.at(i, j) - mx);
                                for (std::size_t j = 0; j < c; ++j) {
                                    double p = std::exp(v.at(i, j) - mx) / s;
                                    if (j == static_cast<std::size_t>(labels[i])) p -= 1.0;
                                    g.at(i, j) += go * p;
                                }
                            }
                        });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
    const Tensor& v = x.value();
    const std::size_t r = v.rows(), c = v.cols();
    if (gamma.value().size() != c || beta.value().size() != c) throw ShapeError("layer_norm: width");
    Tensor out({r, c});
    Tensor xhat({r, c});
    std::vector<double> inv_sigma(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += v.at(i, j);
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = v.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        inv_sigma[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            xhat.at(i, j) = (v.at(i, j) - mu) * inv_sigma[i];
            out.at(i, j) = xhat.at(i, j) * gamma.value()[j] + beta.value()[j];
        }
    }
    return detail::make(std::move(out), {x, gamma, beta},
                        [xhat = std::move(xhat), inv_sigma = std::move(inv_sigma), r, c](Node& self) {
                            const Tensor& gm = self.parents[1].value();
                            if (self.parents[1].requires_grad()) {
                                Tensor& gg = self.parents[1].grad();
                                for (std::size_t i = 0; i < r; ++i)
                                    for (std::size_t j = 0; j < c; ++j)
                                        gg[j] += self.grad.at(i, j) * xhat.at(i, j);
                            }
                            if (self.parents[2].requires_grad()) {
                                Tensor& gb = self.parents[2].grad();
                                for (std::size_t i = 0; i < r; ++i)
                                    for (std::size_t j = 0; j < c; ++j) gb[j] += self.grad.at(i, j);
                            }
                            if (self.parents[0].requires_grad()) {
                                Tensor& gx = self.parents[0].grad();
                                for (std::size_t i = 0; i < r; ++i) {
                                    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                                    for (std::size_t j = 0; j < c; ++j) {
                                        const double dxh = self.grad.at(i, j) * gm[j];
                                        mean_dxhat += dxh;
                                        mean_dxhat_xhat += dxh * xhat.at(i, j);
                                    }
                                    mean_dxhat /= static_cast<double>(c);
                                    mean_dxhat_xhat /= static_cast<double>(c);
                                    for (std::size_t j = 0; j < c; ++j) {
                                        const double dxh = self.grad.at(i, j) * gm[j];
                                        gx.at(i, j) += inv_sigma[i] *
                                                       (dxh - mean_dxhat - xhat.at(i, j) * mean_dxhat_xhat);
                                    }
                                }
                            }
                        });
}

// ---------------------------------------------------------------------------
// Scalar gates
// ---------------------------------------------------------------------------

// Single element of a vector parameter, as a scalar Var.
inline Var index_scalar(const Var& v, std::size_t i) {
    if (i >= v.value().size()) throw ShapeError("index_scalar: out of range");
    return detail::make(Tensor::scalar(v.value()[i]), {v}, [i](Node& self) {
        self.parents[0].grad()[i] += self.grad[0];
    });
}

// x scaled by a scalar Var.
inline Var scale_by(const Var& x, const Var& s) {
    if (s.value().size() != 1) throw ShapeError("scale_by: scalar expected");
    const double sv = s.value()[0];
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sv;
    return detail::make(std::move(out), {x, s}, [sv](Node& self) {
        const Tensor& xv = self.parents[0].value();
        if (self.parents[0].requires_grad()) {
            Tensor& g = self.parents[0].grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sv * self.grad[i];
        }
        if (self.parents[1].requires_grad()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < xv.size(); ++i) acc += self.grad[i] * xv[i];
            self.parents[1].grad()[0] += acc;
        }
    });
}

} // namespace miae::ag
