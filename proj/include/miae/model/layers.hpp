#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/core/autograd_geom.hpp"
#include "miae/core/autograd_nn.hpp"
#include "miae/geometry/frames.hpp"
#include "miae/model/params.hpp"

namespace miae::model {

// Absolute sinusoidal embeddings for explicit (possibly gapped) positions.
inline Tensor sinusoidal_embeddings(const std::vector<std::size_t>& positions, std::size_t dim) {
    Tensor out({positions.size(), dim});
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double pos = static_cast<double>(positions[i]);
        for (std::size_t j = 0; j < dim; j += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(dim));
            out.at(i, j) = std::sin(pos * freq);
            if (j + 1 < dim) out.at(i, j + 1) = std::cos(pos * freq);
        }
    }
    return out;
}

inline ag::Var feed_forward(const ag::Var& x, const ParamStore& p, const std::string& prefix) {
    ag::Var h = ag::gelu(ag::linear(x, p.at(prefix + ".w1"), p.at(prefix + ".b1")));
    return ag::linear(h, p.at(prefix + ".w2"), p.at(prefix + ".b2"));
}

// Scaled-dot multi-head attention built from primitives; optional rotary
// position encoding on queries and keys.
inline ag::Var multihead_attention(const ag::Var& x, const ParamStore& p, const std::string& prefix,
                                   std::size_t heads, const std::vector<double>* rope_pos = nullptr) {
    const std::size_t dim = x.value().cols();
    const std::size_t dh = dim / heads;
    ag::Var q = ag::linear(x, p.at(prefix + ".wq"), p.at(prefix + ".bq"));
    ag::Var k = ag::linear(x, p.at(prefix + ".wk"), p.at(prefix + ".bk"));
    ag::Var v = ag::linear(x, p.at(prefix + ".wv"), p.at(prefix + ".bv"));
    std::vector<ag::Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        ag::Var qh = ag::slice_cols(q, h * dh, (h + 1) * dh);
        ag::Var kh = ag::slice_cols(k, h * dh, (h + 1) * dh);
        ag::Var vh = ag::slice_cols(v, h * dh, (h + 1) * dh);
        if (rope_pos) {
            qh = ag::rope_rows(qh, *rope_pos);
            kh = ag::rope_rows(kh, *rope_pos);
        }
        ag::Var scores = ag::scale(ag::matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
        outs.push_back(ag::matmul(ag::softmax_rows(scores), vh));
    }
    return ag::linear(ag::concat_cols(outs), p.at(prefix + ".wo"), p.at(prefix + ".bo"));
}

// Pre-norm transformer block.
inline ag::Var transformer_block(const ag::Var& x, const ParamStore& p, const std::string& prefix,
                                 std::size_t heads, const std::vector<double>* rope_pos = nullptr) {
    ag::Var h = ag::add(x, multihead_attention(
                               ag::layer_norm(x, p.at(prefix + ".ln1.gamma"), p.at(prefix + ".ln1.beta")),
                               p, prefix + ".attn", heads, rope_pos));
    return ag::add(h, feed_forward(
                          ag::layer_norm(h, p.at(prefix + ".ln2.gamma"), p.at(prefix + ".ln2.beta")),
                          p, prefix + ".ffn"));
}

// Optional per-head attention weight capture for inspection and tests.
struct GeoAttentionCapture {
    std::vector<Tensor> head_weights; // one (V x V) matrix per head
};

// SE(3)-invariant attention over residue frames. Per head, queries and keys
// live in each residue's local frame and are compared in global coordinates:
// a rotation channel scores direction agreement, a point channel penalizes
// Euclidean distance, and values are global points pulled back into the
// query's frame. Gates softplus(w) keep the two channel weights positive.
inline ag::Var geometric_attention(const ag::Var& x, const geom::FrameSet& frames,
                                   const ParamStore& p, const std::string& prefix,
                                   std::size_t heads, GeoAttentionCapture* capture = nullptr) {
    const std::size_t n = x.value().rows();
    if (frames.size() != n) throw ShapeError("geometric_attention: frame count mismatch");

    std::vector<geom::Mat3> rots(n);
    Tensor trans({n, 3});
    Tensor neg_trans({n, 3});
    for (std::size_t i = 0; i < n; ++i) {
        rots[i] = frames[i].R;
        trans.at(i, 0) = frames[i].t.x;
        trans.at(i, 1) = frames[i].t.y;
        trans.at(i, 2) = frames[i].t.z;
        for (std::size_t j = 0; j < 3; ++j) neg_trans.at(i, j) = -trans.at(i, j);
    }

    ag::Var qr = ag::matmul(x, p.at(prefix + ".wqr"));
    ag::Var kr = ag::matmul(x, p.at(prefix + ".wkr"));
    ag::Var qd = ag::matmul(x, p.at(prefix + ".wqd"));
    ag::Var kd = ag::matmul(x, p.at(prefix + ".wkd"));
    ag::Var v = ag::matmul(x, p.at(prefix + ".wv"));
    ag::Var gate_r = ag::softplus(p.at(prefix + ".gate_r"));
    ag::Var gate_d = ag::softplus(p.at(prefix + ".gate_d"));

    if (capture) capture->head_weights.clear();
    std::vector<ag::Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        auto head3 = [&](const ag::Var& m) { return ag::slice_cols(m, 3 * h, 3 * h + 3); };
        ag::Var qrh = ag::rotate_rows(head3(qr), rots);
        ag::Var krh = ag::rotate_rows(head3(kr), rots);
        ag::Var qdh = ag::add_const(ag::rotate_rows(head3(qd), rots), trans);
        ag::Var kdh = ag::add_const(ag::rotate_rows(head3(kd), rots), trans);

        ag::Var rot_term = ag::scale(ag::matmul_nt(qrh, krh), 1.0 / std::sqrt(3.0));
        ag::Var logits = ag::sub(ag::scale_by(rot_term, ag::index_scalar(gate_r, h)),
                                 ag::scale_by(ag::pairdist(qdh, kdh), ag::index_scalar(gate_d, h)));
        ag::Var weights = ag::softmax_rows(logits);
        if (capture) capture->head_weights.push_back(weights.value());

        ag::Var vh = ag::add_const(ag::rotate_rows(head3(v), rots), trans);
        ag::Var pooled = ag::add_const(ag::matmul(weights, vh), neg_trans);
        outs.push_back(ag::rotate_rows(pooled, rots, /*transpose=*/true));
    }
    return ag::linear(ag::concat_cols(outs), p.at(prefix + ".wo"), p.at(prefix + ".bo"));
}

inline ag::Var geometric_block(const ag::Var& x, const geom::FrameSet& frames, const ParamStore& p,
                               const std::string& prefix, std::size_t heads,
                               GeoAttentionCapture* capture = nullptr) {
    ag::Var h = ag::add(x, geometric_attention(
                               ag::layer_norm(x, p.at(prefix + ".ln1.gamma"), p.at(prefix + ".ln1.beta")),
                               frames, p, prefix + ".attn", heads, capture));
    return ag::add(h, feed_forward(
                          ag::layer_norm(h, p.at(prefix + ".ln2.gamma"), p.at(prefix + ".ln2.beta")),
                          p, prefix + ".ffn"));
}

} // namespace miae::model
