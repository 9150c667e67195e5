#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/io/backbone.hpp"
#include "miae/masking/mask.hpp"
#include "miae/model/network.hpp"

namespace miae::eval {

using Pooling = model::Pooling;

// Frozen-encoder representation of one backbone: every residue visible,
// then either the class token or the mean over residue tokens.
inline Tensor embed(const io::ProteinBackbone& b, const model::Model& m, Pooling pooling) {
    const auto plan = masking::sample_mask(b.size(), 0.0, masking::Strategy::random, 0);
    const auto enc = model::encode(b, plan, m);
    const Tensor pooled = model::pool_tokens(enc.tokens, pooling).value();
    Tensor row({m.cfg.hidden_dim});
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = pooled[j];
    return row;
}

struct EmbeddingMatrix {
    std::vector<std::string> ids;
    Tensor vectors; // m x d
    Pooling pooling = Pooling::mean;
};

// Forward passes touch the parameters read-only, so rows can be filled by a
// small thread pool; output is positional and independent of worker count.
inline EmbeddingMatrix embed_all(const std::vector<io::ProteinBackbone>& backbones,
                                 const model::Model& m, Pooling pooling,
                                 std::size_t n_workers = 1) {
    const std::size_t n = backbones.size();
    const std::size_t d = m.cfg.hidden_dim;
    EmbeddingMatrix out;
    out.pooling = pooling;
    out.vectors = Tensor({n, d});
    out.ids.reserve(n);
    for (const auto& b : backbones) out.ids.push_back(b.id);

    auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Tensor row = embed(backbones[i], m, pooling);
            for (std::size_t j = 0; j < d; ++j) out.vectors.at(i, j) = row[j];
        }
    };
    if (n_workers <= 1 || n <= 1) {
        fill(0, n);
    } else {
        const std::size_t workers = std::min(n_workers, n);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            pool.emplace_back(fill, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    if (!out.vectors.all_finite()) throw Error("embed_all: non-finite embedding");
    return out;
}

// Binary matrix container plus a plain-text id sidecar at <path>.ids.
inline void save_embeddings(const std::string& path, const EmbeddingMatrix& e) {
    if (e.ids.size() != e.vectors.rows()) throw ShapeError("save_embeddings: id/row mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_embeddings: cannot open " + path);
    const char magic[8] = {'M', 'I', 'A', 'E', 'E', 'M', 'B', '1'};
    out.write(magic, 8);
    const std::uint64_t rows = e.vectors.rows(), cols = e.vectors.cols();
    const std::uint8_t pool = e.pooling == Pooling::class_token ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(&pool), 1);
    out.write(reinterpret_cast<const char*>(e.vectors.data()),
              static_cast<std::streamsize>(e.vectors.size() * sizeof(double)));
    if (!out) throw Error("save_embeddings: write failed on " + path);

    std::ofstream ids(path + ".ids");
    if (!ids) throw Error("save_embeddings: cannot open " + path + ".ids");
    for (const auto& id : e.ids) ids << id << "\n";
}

inline EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("load_embeddings: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "MIAEEMB1")
        throw ParseError("load_embeddings: bad magic in " + path);
    std::uint64_t rows = 0, cols = 0;
    std::uint8_t pool = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    in.read(reinterpret_cast<char*>(&pool), 1);
    EmbeddingMatrix e;
    e.pooling = pool ? Pooling::class_token : Pooling::mean;
    e.vectors = Tensor({rows, cols});
    in.read(reinterpret_cast<char*>(e.vectors.data()),
            static_cast<std::streamsize>(e.vectors.size() * sizeof(double)));
    if (!in) throw ParseError("load_embeddings: truncated matrix in " + path);

    std::ifstream ids(path + ".ids");
    if (!ids) throw ParseError("load_embeddings: missing id sidecar for " + path);
    std::string line;
    while (std::getline(ids, line)) e.ids.push_back(line);
    if (e.ids.size() != rows) throw ParseError("load_embeddings: id/row mismatch in " + path);
    return e;
}

} // namespace miae::eval
