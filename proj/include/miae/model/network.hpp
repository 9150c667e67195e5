#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/geometry/frames.hpp"
#include "miae/io/backbone.hpp"
#include "miae/masking/mask.hpp"
#include "miae/model/layers.hpp"
#include "miae/model/params.hpp"

namespace miae::model {

struct Model {
    ModelConfig cfg;
    ParamStore params;
};

inline Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    return {cfg, init_parameters(cfg, seed)};
}

// Latents for the visible residues plus the trailing class token:
// (V + 1) x hidden_dim.
struct EncodeResult {
    ag::Var tokens;
};

// Lower-level entry: encode pre-built frames whose original residue indices
// are given explicitly (the positional signal survives masking this way).
inline EncodeResult encode_tokens(const geom::FrameSet& frames,
                                  const std::vector<std::size_t>& aa_indices,
                                  const std::vector<std::size_t>& positions, const Model& m,
                                  GeoAttentionCapture* capture = nullptr) {
    const ModelConfig& cfg = m.cfg;
    const ParamStore& p = m.params;
    const std::size_t v = frames.size();
    if (v == 0) throw ShapeError("encode: no visible residues");
    if (positions.size() != v) throw ShapeError("encode: position count mismatch");
    for (std::size_t pos : positions)
        if (pos >= cfg.max_length)
            throw LengthError("encode: residue position " + std::to_string(pos) +
                              " exceeds max_length " + std::to_string(cfg.max_length));
    if (cfg.use_sequence && aa_indices.size() != v)
        throw ShapeError("encode: sequence length mismatch");

    ag::Var x = ag::repeat_row(p.at("enc.init_embed"), v);
    for (std::size_t i = 0; i < cfg.geometric_blocks; ++i)
        x = geometric_block(x, frames, p, "enc.geo." + std::to_string(i), cfg.attention_heads,
                            capture);

    x = ag::add_const(x, sinusoidal_embeddings(positions, cfg.hidden_dim));
    if (cfg.use_sequence) x = ag::add(x, ag::gather_rows(p.at("enc.aa_embed"), aa_indices));

    x = ag::concat_rows({x, ag::reshape(p.at("enc.cls_token"), {1, cfg.hidden_dim})});
    for (std::size_t i = 0; i < cfg.encoder_depth; ++i)
        x = transformer_block(x, p, "enc.blk." + std::to_string(i), cfg.attention_heads);
    x = ag::layer_norm(x, p.at("enc.final_ln.gamma"), p.at("enc.final_ln.beta"));
    return {x};
}

inline EncodeResult encode(const io::ProteinBackbone& b, const masking::MaskPlan& plan,
                           const Model& m, GeoAttentionCapture* capture = nullptr) {
    if (plan.n != b.size()) throw ShapeError("encode: plan does not match backbone length");
    geom::FrameSet all = geom::build_frames(b);
    geom::FrameSet frames;
    std::vector<std::size_t> aa;
    frames.reserve(plan.visible.size());
    for (std::size_t i : plan.visible) {
        frames.push_back(all[i]);
        if (m.cfg.use_sequence) aa.push_back(io::aa_index(b.sequence[i]));
    }
    return encode_tokens(frames, aa, plan.visible, m, capture);
}

// Sequence-level readout of an encoded token stack: either the trailing
// class token or the mean over the residue tokens. Returns a 1 x hidden row.
enum class Pooling { class_token, mean };

inline ag::Var pool_tokens(const ag::Var& tokens, Pooling pooling) {
    const std::size_t rows = tokens.value().rows();
    const std::size_t hidden = tokens.value().cols();
    if (rows < 2) throw ShapeError("pool: need at least one residue token");
    if (pooling == Pooling::class_token) return ag::gather_rows(tokens, {rows - 1});
    std::vector<std::size_t> res(rows - 1);
    for (std::size_t i = 0; i + 1 < rows; ++i) res[i] = i;
    return ag::reshape(ag::mean_rows(ag::gather_rows(tokens, res)), {1, hidden});
}

struct DecodeResult {
    ag::Var coords;      // n x 9: N, CA, C per residue in an arbitrary global frame
    ag::Var dist_logits; // n^2 x 64, pair (i,j) at row i*n + j
    ag::Var dir_logits;  // 9*n^2 x 16, slot s of pair (i,j) at row (i*n + j)*9 + s
    ag::Var aa_logits;   // n x 20 (defined when the inverse-folding head exists)
};

inline DecodeResult decode(const ag::Var& latents, const masking::MaskPlan& plan, const Model& m) {
    const ModelConfig& cfg = m.cfg;
    const ParamStore& p = m.params;
    const std::size_t n = plan.n;
    const std::size_t v = plan.visible.size();
    if (latents.value().rows() != v + 1)
        throw ShapeError("decode: latent count does not match plan");

    ag::Var h = ag::linear(latents, p.at("dec.proj.w"), p.at("dec.proj.b"));
    std::vector<std::size_t> vis_rows(v);
    for (std::size_t i = 0; i < v; ++i) vis_rows[i] = i;
    ag::Var visible_part = ag::gather_rows(h, vis_rows);
    ag::Var cls_part = ag::gather_rows(h, {v});

    ag::Var seq = ag::scatter_rows(visible_part, p.at("dec.mask_token"), plan.visible, n);
    ag::Var x = ag::concat_rows({seq, cls_part});

    std::vector<double> rope_pos(n + 1);
    for (std::size_t i = 0; i <= n; ++i) rope_pos[i] = static_cast<double>(i);
    for (std::size_t i = 0; i < cfg.decoder_depth; ++i)
        x = transformer_block(x, p, "dec.blk." + std::to_string(i), cfg.decoder_heads, &rope_pos);
    x = ag::layer_norm(x, p.at("dec.final_ln.gamma"), p.at("dec.final_ln.beta"));

    // the class token stays in the decoder input but feeds no output head
    std::vector<std::size_t> res_rows(n);
    for (std::size_t i = 0; i < n; ++i) res_rows[i] = i;
    ag::Var res = ag::gather_rows(x, res_rows);

    DecodeResult out;
    out.coords = ag::linear(res, p.at("head.coords.w"), p.at("head.coords.b"));

    ag::Var pa = ag::matmul(res, p.at("head.pair.wa"));
    ag::Var pb = ag::matmul(res, p.at("head.pair.wb"));
    ag::Var pair = ag::gelu(ag::add_rowvec(ag::outer_sum(pa, pb), p.at("head.pair.bias")));
    out.dist_logits = ag::linear(pair, p.at("head.pair.dist.w"), p.at("head.pair.dist.b"));
    out.dir_logits = ag::reshape(
        ag::linear(pair, p.at("head.pair.dir.w"), p.at("head.pair.dir.b")), {9 * n * n, 16});

    if (p.has("head.aa.w"))
        out.aa_logits = ag::linear(res, p.at("head.aa.w"), p.at("head.aa.b"));
    return out;
}

} // namespace miae::model
