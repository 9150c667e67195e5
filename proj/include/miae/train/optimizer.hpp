#pragma once

#include <cmath>
#include <map>
#include <string>

#include "miae/core/errors.hpp"
#include "miae/core/tensor.hpp"
#include "miae/model/params.hpp"

namespace miae::train {

// AdamW with decoupled weight decay applied uniformly to every parameter,
// so a parameter whose gradient is identically zero still shrinks by
// lr * weight_decay per step. Moment buffers are keyed by parameter name and
// created lazily; iteration follows the store's name order, which keeps runs
// bit-reproducible.
struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.0;

    std::size_t t = 0;
    std::map<std::string, Tensor> m, v;

    void step(model::ParamStore& params, double lr,
              const std::map<std::string, double>* lr_scales = nullptr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (auto& [name, var] : params.map) {
            Tensor& p = var.node()->value;
            double scale = 1.0;
            if (lr_scales) {
                const auto it = lr_scales->find(name);
                if (it != lr_scales->end()) scale = it->second;
            }
            const double rate = lr * scale;

            Tensor& g = var.node()->grad;
            const bool has_grad = g.size() != 0;
            auto mi = m.find(name);
            if (mi == m.end()) mi = m.emplace(name, Tensor::zeros(p.shape())).first;
            auto vi = v.find(name);
            if (vi == v.end()) vi = v.emplace(name, Tensor::zeros(p.shape())).first;
            Tensor& mt = mi->second;
            Tensor& vt = vi->second;
            if (!mt.same_shape(p) || (has_grad && !g.same_shape(p)))
                throw ShapeError("optimizer state mismatch for " + name);

            for (std::size_t i = 0; i < p.size(); ++i) {
                const double gi = has_grad ? g[i] : 0.0;
                mt[i] = beta1 * mt[i] + (1.0 - beta1) * gi;
                vt[i] = beta2 * vt[i] + (1.0 - beta2) * gi * gi;
                const double mhat = mt[i] / bc1;
                const double vhat = vt[i] / bc2;
                p[i] -= rate * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
            }
        }
    }

    std::map<std::string, Tensor> state() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, tens] : m) out.emplace("m." + name, tens);
        for (const auto& [name, tens] : v) out.emplace("v." + name, tens);
        Tensor tstep({1});
        tstep[0] = static_cast<double>(t);
        out.emplace("t", std::move(tstep));
        return out;
    }

    void restore(const std::map<std::string, Tensor>& state) {
        m.clear();
        v.clear();
        t = 0;
        for (const auto& [name, tens] : state) {
            if (name == "t")
                t = static_cast<std::size_t>(tens[0]);
            else if (name.rfind("m.", 0) == 0)
                m.emplace(name.substr(2), tens);
            else if (name.rfind("v.", 0) == 0)
                v.emplace(name.substr(2), tens);
            else
                throw ConfigError("unknown optimizer state entry: " + name);
        }
    }
};

} // namespace miae::train
