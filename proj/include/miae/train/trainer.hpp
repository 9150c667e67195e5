#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/core/errors.hpp"
#include "miae/core/rng.hpp"
#include "miae/io/backbone.hpp"
#include "miae/losses/losses.hpp"
#include "miae/masking/mask.hpp"
#include "miae/model/checkpoint.hpp"
#include "miae/model/network.hpp"
#include "miae/train/config.hpp"
#include "miae/train/optimizer.hpp"
#include "miae/train/schedule.hpp"

namespace miae::train {

// Training-time augmentation: i.i.d. Gaussian offsets on every backbone atom.
inline io::ProteinBackbone augment_noise(const io::ProteinBackbone& b, double std,
                                         std::uint64_t seed) {
    if (std < 0.0) throw DomainError("augment_noise: negative std");
    if (std == 0.0) return b;
    io::ProteinBackbone out = b;
    Rng rng(seed);
    for (auto& r : out.residues) {
        for (geom::Vec3* a : {&r.n, &r.ca, &r.c}) {
            a->x += rng.normal(0.0, std);
            a->y += rng.normal(0.0, std);
            a->z += rng.normal(0.0, std);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layer-wise decay bookkeeping
// ---------------------------------------------------------------------------

// Layers counted for fine-tuning decay: embeddings at 0, then the geometric
// stack, then the transformer stack; the classification head sits on top at
// index n and trains at full rate. The final encoder norm travels with the
// head, matching the usual layer-decay grouping for pre-norm encoders.
inline std::size_t n_decay_layers(const model::ModelConfig& c) {
    return c.geometric_blocks + c.encoder_depth + 1;
}

inline std::size_t param_layer_index(const std::string& name, const model::ModelConfig& c) {
    auto block_index = [](const std::string& s, std::size_t at) {
        return static_cast<std::size_t>(std::stoul(s.substr(at)));
    };
    if (name == "enc.init_embed" || name == "enc.aa_embed" || name == "enc.cls_token") return 0;
    if (name.rfind("enc.geo.", 0) == 0) return 1 + block_index(name, 8);
    if (name.rfind("enc.blk.", 0) == 0) return 1 + c.geometric_blocks + block_index(name, 8);
    return n_decay_layers(c);
}

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

struct StepReport {
    std::size_t step = 0;
    double lr = 0.0;
    losses::LossReport loss;
};

// Masked-autoencoder pretraining. One logical thread owns the parameters;
// samples are processed one at a time in batch order and their gradients
// accumulate into the shared parameter leaves, so the effective batch size
// is free while updates stay bit-reproducible.
struct Pretrainer {
    model::Model model;
    TrainConfig cfg;
    AdamW opt;
    std::size_t step = 0;
    std::uint64_t sample_counter = 0;

    Pretrainer(model::Model m, TrainConfig c) : model(std::move(m)), cfg(std::move(c)) {
        validate(cfg);
        opt.beta1 = cfg.beta1;
        opt.beta2 = cfg.beta2;
        opt.eps = cfg.adam_eps;
        opt.weight_decay = cfg.weight_decay;
    }

    StepReport step_batch(const std::vector<io::ProteinBackbone>& batch) {
        if (batch.empty()) throw StepError("pretrain: empty batch");
        if (step >= cfg.total_steps) throw StepError("pretrain: schedule exhausted");
        model.params.zero_grad();

        const double inv_b = 1.0 / static_cast<double>(batch.size());
        losses::LossReport mean;
        for (std::size_t s = 0; s < batch.size(); ++s) {
            const std::uint64_t base = Rng::mix(cfg.seed, sample_counter++);
            const io::ProteinBackbone aug =
                augment_noise(batch[s], cfg.noise_std, Rng::mix(base, 1));
            const auto plan = masking::sample_mask(aug.size(), cfg.mask_ratio, cfg.mask_strategy,
                                                   Rng::mix(base, 2));
            const auto enc = model::encode(aug, plan, model);
            const auto out = model::decode(enc.tokens, plan, model);
            const auto terms = losses::composite_loss(out, aug, model.cfg);
            const losses::LossReport r = losses::report(terms);
            if (!std::isfinite(r.total))
                throw StepError("pretrain: non-finite loss",
                                batch[s].id.empty() ? std::to_string(s) : batch[s].id);
            ag::backward(ag::scale(terms.total, inv_b));

            mean.dist += r.dist * inv_b;
            mean.dir += r.dir * inv_b;
            mean.binned_dist += r.binned_dist * inv_b;
            mean.binned_dir += r.binned_dir * inv_b;
            mean.inverse_folding += r.inverse_folding * inv_b;
            mean.total += r.total * inv_b;
        }

        for (const auto& [name, var] : model.params.map)
            if (var.node()->grad.size() && !var.node()->grad.all_finite())
                throw StepError("pretrain: non-finite gradient in " + name);

        const double lr = cosine_lr(step, cfg);
        opt.step(model.params, lr);
        StepReport rep{step, lr, mean};
        ++step;
        return rep;
    }

    void save(const std::string& path) const {
        const auto extra = opt.state();
        model::save_model(path, model, step, &extra);
    }

    static Pretrainer resume(const std::string& path, const TrainConfig& cfg) {
        const model::CheckpointData data = model::load_checkpoint(path);
        Pretrainer t(model::model_from_checkpoint(data), cfg);
        t.step = data.step;
        std::map<std::string, Tensor> opt_state;
        for (const auto& [name, tens] : data.tensors)
            if (name.rfind("opt.", 0) == 0) opt_state.emplace(name.substr(4), tens);
        if (!opt_state.empty()) t.opt.restore(opt_state);
        t.sample_counter = data.step * cfg.batch_size;
        return t;
    }
};

// ---------------------------------------------------------------------------
// Supervised classification (from scratch or fine-tuning)
// ---------------------------------------------------------------------------

using Pooling = model::Pooling;

struct Classifier {
    model::Model backbone;
    ag::Var w; // hidden x n_classes
    ag::Var b;
    Pooling pooling = Pooling::class_token;

    std::size_t n_classes() const { return w.value().cols(); }
};

inline Classifier make_classifier(model::Model backbone, std::size_t n_classes, Pooling pooling,
                                  std::uint64_t seed) {
    if (n_classes == 0) throw ConfigError("classifier: need at least one class");
    const std::size_t d = backbone.cfg.hidden_dim;
    Rng rng(Rng::mix(seed, 0x687ead));
    Tensor w({d, n_classes});
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * rng.normal();
    Classifier clf{std::move(backbone), ag::leaf(std::move(w)), ag::leaf(Tensor::zeros({n_classes})),
                   pooling};
    return clf;
}

// Unmasked forward pass: every residue is visible to the encoder.
inline ag::Var classifier_logits(const Classifier& clf, const io::ProteinBackbone& bb) {
    const auto plan = masking::sample_mask(bb.size(), 0.0, masking::Strategy::random, 0);
    const auto enc = model::encode(bb, plan, clf.backbone);
    return ag::linear(model::pool_tokens(enc.tokens, clf.pooling), clf.w, clf.b);
}

inline std::size_t predict_class(const Classifier& clf, const io::ProteinBackbone& bb) {
    const Tensor logits = classifier_logits(clf, bb).value();
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.cols(); ++k)
        if (logits[k] > logits[best]) best = k;
    return best;
}

struct LabeledBackbone {
    io::ProteinBackbone b;
    int label = 0;
};

struct ClassStepReport {
    std::size_t step = 0;
    double lr = 0.0;
    double cross_entropy = 0.0;
    double accuracy = 0.0;
};

// Supervised loop over encoder + linear head. Scratch and fine-tuning share
// the step logic; fine-tuning additionally applies layer-wise lr decay, and
// the two differ otherwise only in how the backbone was initialized.
struct ClassifierTrainer {
    Classifier clf;
    TrainConfig cfg;
    AdamW opt;
    model::ParamStore trainable; // encoder parameters + classification head
    std::map<std::string, double> lr_scales;
    std::size_t step = 0;
    std::uint64_t sample_counter = 0;

    ClassifierTrainer(Classifier c, TrainConfig tc) : clf(std::move(c)), cfg(std::move(tc)) {
        validate(cfg);
        opt.beta1 = cfg.beta1;
        opt.beta2 = cfg.beta2;
        opt.eps = cfg.adam_eps;
        opt.weight_decay = cfg.weight_decay;
        for (const auto& [name, var] : clf.backbone.params.map)
            if (name.rfind("enc.", 0) == 0) trainable.map.emplace(name, var);
        trainable.map.emplace("cls_head.w", clf.w);
        trainable.map.emplace("cls_head.b", clf.b);
        if (cfg.mode == TrainMode::finetune) {
            const std::size_t n = n_decay_layers(clf.backbone.cfg);
            for (const auto& [name, var] : trainable.map)
                lr_scales[name] =
                    layerwise_scale(param_layer_index(name, clf.backbone.cfg), n, cfg.layer_decay);
        }
    }

    ClassStepReport step_batch(const std::vector<LabeledBackbone>& batch) {
        if (batch.empty()) throw StepError("classifier: empty batch");
        if (step >= cfg.total_steps) throw StepError("classifier: schedule exhausted");
        const int n_classes = static_cast<int>(clf.n_classes());
        for (const auto& s : batch)
            if (s.label < 0 || s.label >= n_classes)
                throw LabelError("classifier: label out of range", s.label);
        trainable.zero_grad();

        const double inv_b = 1.0 / static_cast<double>(batch.size());
        double ce = 0.0;
        std::size_t hits = 0;
        for (std::size_t s = 0; s < batch.size(); ++s) {
            const std::uint64_t base = Rng::mix(cfg.seed, sample_counter++);
            const io::ProteinBackbone aug =
                augment_noise(batch[s].b, cfg.noise_std, Rng::mix(base, 1));
            const ag::Var logits = classifier_logits(clf, aug);
            const ag::Var loss = ag::cross_entropy_mean(logits, {batch[s].label});
            const double li = loss.value()[0];
            if (!std::isfinite(li))
                throw StepError("classifier: non-finite loss",
                                batch[s].b.id.empty() ? std::to_string(s) : batch[s].b.id);
            ag::backward(ag::scale(loss, inv_b));
            ce += li * inv_b;

            const Tensor& lv = logits.value();
            std::size_t best = 0;
            for (std::size_t k = 1; k < lv.cols(); ++k)
                if (lv[k] > lv[best]) best = k;
            hits += best == static_cast<std::size_t>(batch[s].label) ? 1 : 0;
        }

        for (const auto& [name, var] : trainable.map)
            if (var.node()->grad.size() && !var.node()->grad.all_finite())
                throw StepError("classifier: non-finite gradient in " + name);

        const double lr = cosine_lr(step, cfg);
        opt.step(trainable, lr, lr_scales.empty() ? nullptr : &lr_scales);
        ClassStepReport rep{step, lr, ce,
                            static_cast<double>(hits) / static_cast<double>(batch.size())};
        ++step;
        return rep;
    }

    void save(const std::string& path) const {
        std::map<std::string, Tensor> tensors = clf.backbone.params.snapshot();
        tensors.emplace("cls_head.w", clf.w.value());
        tensors.emplace("cls_head.b", clf.b.value());
        for (const auto& [name, t] : opt.state()) tensors.emplace("opt." + name, t);
        model::save_checkpoint(path, clf.backbone.cfg, step, tensors);
    }
};

inline Classifier classifier_from_checkpoint(const model::CheckpointData& data, Pooling pooling) {
    const auto wi = data.tensors.find("cls_head.w");
    const auto bi = data.tensors.find("cls_head.b");
    if (wi == data.tensors.end() || bi == data.tensors.end())
        throw ConfigError("checkpoint has no classification head");
    Classifier clf{model::model_from_checkpoint(data), ag::leaf(wi->second), ag::leaf(bi->second),
                   pooling};
    if (clf.w.value().rows() != clf.backbone.cfg.hidden_dim ||
        clf.w.value().cols() != clf.b.value().size())
        throw ConfigError("classification head shape mismatch");
    return clf;
}

} // namespace miae::train
