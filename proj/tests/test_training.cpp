#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "miae/model/network.hpp"
#include "miae/train/config.hpp"
#include "miae/train/metrics.hpp"
#include "miae/train/optimizer.hpp"
#include "miae/train/schedule.hpp"
#include "miae/train/trainer.hpp"
#include "testutil.hpp"

using namespace miae;
namespace ag = miae::ag;
using geom::Vec3;
using testutil::random_backbone;

namespace {

model::ModelConfig tiny_model() {
    model::ModelConfig c;
    c.encoder_depth = 2;
    c.geometric_blocks = 1;
    c.hidden_dim = 24;
    c.attention_heads = 4;
    c.decoder_depth = 1;
    c.decoder_dim = 16;
    c.decoder_heads = 2;
    c.pair_dim = 8;
    return c;
}

train::TrainConfig quick_config(train::TrainMode mode) {
    train::TrainConfig c = train::default_train_config(mode);
    c.batch_size = 2;
    c.warmup_steps = 5;
    c.total_steps = 400;
    c.noise_std = 0.0;
    c.mask_ratio = 0.5;
    c.seed = 7;
    return c;
}

// Three geometrically distinct families: straight chain, helix, zigzag.
io::ProteinBackbone shape_backbone(int family, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    io::ProteinBackbone b;
    b.id = "shape" + std::to_string(family);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 ca;
        const double fi = static_cast<double>(i);
        if (family == 0) {
            ca = {3.8 * fi, 0.0, 0.0};
        } else if (family == 1) {
            const double a = fi * 100.0 * std::numbers::pi / 180.0;
            ca = {2.3 * std::cos(a), 2.3 * std::sin(a), 1.5 * fi};
        } else {
            ca = {3.5 * fi, (i % 2 == 0) ? 0.0 : 3.0, 0.0};
        }
        ca += Vec3{0.05 * rng.normal(), 0.05 * rng.normal(), 0.05 * rng.normal()};
        b.residues.push_back({ca + Vec3{-0.525, 1.363, 0.0}, ca, ca + Vec3{1.526, 0.0, 0.0}});
        b.sequence.push_back('A');
        b.plddt.push_back(90.0);
    }
    return b;
}

bool params_equal(const model::ParamStore& a, const model::ParamStore& b) {
    for (const auto& [name, var] : a.map) {
        const Tensor& ta = var.value();
        const Tensor& tb = b.at(name).value();
        if (!ta.same_shape(tb)) return false;
        for (std::size_t i = 0; i < ta.size(); ++i)
            if (ta[i] != tb[i]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("train config defaults per mode") {
    const auto pre = train::default_train_config(train::TrainMode::pretrain);
    REQUIRE(pre.base_lr == 0.0024);
    REQUIRE(pre.weight_decay == 0.05);
    REQUIRE(pre.batch_size == 4096);
    REQUIRE(pre.warmup_steps == 5000);
    REQUIRE(pre.total_steps == 100000);
    REQUIRE(pre.beta1 == 0.9);
    REQUIRE(pre.beta2 == 0.95);
    REQUIRE(pre.noise_std == 0.2);

    const auto scr = train::default_train_config(train::TrainMode::scratch);
    REQUIRE(scr.base_lr == 0.0016);
    REQUIRE(scr.weight_decay == 0.1);
    REQUIRE(scr.batch_size == 4096);

    const auto fin = train::default_train_config(train::TrainMode::finetune);
    REQUIRE(fin.base_lr == 0.0016);
    REQUIRE(fin.weight_decay == 0.1);
    REQUIRE(fin.layer_decay == 0.8);
    REQUIRE(fin.batch_size == 1024);

    train::TrainConfig bad = pre;
    bad.warmup_steps = bad.total_steps + 1;
    REQUIRE_THROWS_AS(train::validate(bad), ConfigError);
}

TEST_CASE("cosine schedule") {
    const double base = 0.0024;
    const std::size_t warmup = 100, total = 1000;

    SECTION("endpoints and midpoint") {
        REQUIRE(train::cosine_lr(0, base, warmup, total) == 0.0);
        REQUIRE(train::cosine_lr(warmup, base, warmup, total) == Catch::Approx(base).epsilon(1e-15));
        REQUIRE(train::cosine_lr(total, base, warmup, total) == Catch::Approx(0.0).margin(1e-18));
        const std::size_t mid = warmup + (total - warmup) / 2;
        REQUIRE(train::cosine_lr(mid, base, warmup, total) ==
                Catch::Approx(0.5 * base).epsilon(1e-12));
    }
    SECTION("continuous at the junction") {
        const double before = train::cosine_lr(warmup - 1, base, warmup, total);
        const double at = train::cosine_lr(warmup, base, warmup, total);
        REQUIRE(std::abs(at - before) < 1.5 * base / warmup);
    }
    SECTION("monotone up then down") {
        for (std::size_t s = 1; s <= warmup; ++s)
            REQUIRE(train::cosine_lr(s, base, warmup, total) >
                    train::cosine_lr(s - 1, base, warmup, total));
        for (std::size_t s = warmup + 1; s <= total; ++s)
            REQUIRE(train::cosine_lr(s, base, warmup, total) <=
                    train::cosine_lr(s - 1, base, warmup, total));
    }
    SECTION("independent formula sweep") {
        for (std::size_t s = 0; s <= total; s += 37) {
            double want;
            if (s < warmup) {
                want = base * static_cast<double>(s) / warmup;
            } else {
                const double p = static_cast<double>(s - warmup) / (total - warmup);
                want = 0.5 * base * (1.0 + std::cos(std::numbers::pi * p));
            }
            REQUIRE(train::cosine_lr(s, base, warmup, total) == Catch::Approx(want).margin(1e-18));
        }
    }
    SECTION("degenerate all-warmup schedule") {
        REQUIRE(train::cosine_lr(50, base, 50, 50) == Catch::Approx(0.0).margin(1e-18));
    }
    SECTION("step beyond the schedule") {
        REQUIRE_THROWS_AS(train::cosine_lr(total + 1, base, warmup, total), DomainError);
    }
}

TEST_CASE("layer-wise decay scales") {
    REQUIRE(train::layerwise_scale(12, 12, 0.8) == 1.0);
    REQUIRE(train::layerwise_scale(11, 12, 0.8) == Catch::Approx(0.8).epsilon(1e-12));
    REQUIRE(train::layerwise_scale(10, 12, 0.8) == Catch::Approx(0.64).epsilon(1e-12));
    REQUIRE(train::layerwise_scale(0, 4, 0.5) == Catch::Approx(0.0625).epsilon(1e-12));
    REQUIRE_THROWS_AS(train::layerwise_scale(13, 12, 0.8), DomainError);
}

TEST_CASE("parameter to layer mapping") {
    const model::ModelConfig c = tiny_model(); // 1 geometric + 2 transformer blocks
    const std::size_t n = train::n_decay_layers(c);
    REQUIRE(n == 4);
    REQUIRE(train::param_layer_index("enc.init_embed", c) == 0);
    REQUIRE(train::param_layer_index("enc.cls_token", c) == 0);
    REQUIRE(train::param_layer_index("enc.geo.0.attn.wv", c) == 1);
    REQUIRE(train::param_layer_index("enc.blk.0.wq", c) == 2);
    REQUIRE(train::param_layer_index("enc.blk.1.ffn.w1", c) == 3);
    REQUIRE(train::param_layer_index("enc.final_ln.gamma", c) == n);
    REQUIRE(train::param_layer_index("cls_head.w", c) == n);
}

TEST_CASE("gaussian augmentation") {
    Rng rng(900);
    const auto b = random_backbone(30, rng);

    SECTION("zero std is the identity") {
        const auto same = train::augment_noise(b, 0.0, 1);
        for (std::size_t i = 0; i < b.size(); ++i) {
            REQUIRE((same.residues[i].n - b.residues[i].n).norm() == 0.0);
            REQUIRE((same.residues[i].ca - b.residues[i].ca).norm() == 0.0);
            REQUIRE((same.residues[i].c - b.residues[i].c).norm() == 0.0);
        }
    }
    SECTION("deterministic under a fixed seed") {
        const auto a1 = train::augment_noise(b, 0.2, 42);
        const auto a2 = train::augment_noise(b, 0.2, 42);
        const auto a3 = train::augment_noise(b, 0.2, 43);
        double same = 0.0, other = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            same += (a1.residues[i].ca - a2.residues[i].ca).norm();
            other += (a1.residues[i].ca - a3.residues[i].ca).norm();
        }
        REQUIRE(same == 0.0);
        REQUIRE(other > 0.0);
    }
    SECTION("offset moments") {
        Rng prng(901);
        const auto big = random_backbone(12000, prng, 0.0);
        const auto aug = train::augment_noise(big, 0.2, 7);
        std::vector<double> offsets;
        offsets.reserve(big.size() * 9);
        for (std::size_t i = 0; i < big.size(); ++i) {
            for (auto [pa, pb] : {std::pair{aug.residues[i].n, big.residues[i].n},
                                  std::pair{aug.residues[i].ca, big.residues[i].ca},
                                  std::pair{aug.residues[i].c, big.residues[i].c}}) {
                offsets.push_back(pa.x - pb.x);
                offsets.push_back(pa.y - pb.y);
                offsets.push_back(pa.z - pb.z);
            }
        }
        REQUIRE(offsets.size() >= 100000);
        double mean = 0.0;
        for (double o : offsets) mean += o;
        mean /= static_cast<double>(offsets.size());
        double var = 0.0;
        for (double o : offsets) var += (o - mean) * (o - mean);
        var /= static_cast<double>(offsets.size() - 1);
        REQUIRE(std::abs(mean) < 0.01);
        REQUIRE(std::abs(std::sqrt(var) - 0.2) < 0.01);
    }
    SECTION("negative std rejected") {
        REQUIRE_THROWS_AS(train::augment_noise(b, -0.1, 1), DomainError);
    }
}

TEST_CASE("adamw update rule") {
    SECTION("zero-gradient parameters shrink by lr times weight decay") {
        model::ParamStore store;
        Rng rng(910);
        const Tensor p0 = testutil::random_tensor({3, 4}, rng);
        store.map.emplace("w", ag::leaf(p0));
        train::AdamW opt;
        opt.weight_decay = 0.05;
        const double lr = 0.01;
        opt.step(store, lr);
        const Tensor& p1 = store.at("w").value();
        for (std::size_t i = 0; i < p0.size(); ++i) {
            const double expected = p0[i] - lr * (0.0 / opt.eps + opt.weight_decay * p0[i]);
            REQUIRE(p1[i] == expected);
        }
    }
    SECTION("first step matches the closed form") {
        model::ParamStore store;
        Tensor p0({2});
        p0[0] = 1.0;
        p0[1] = -2.0;
        store.map.emplace("w", ag::leaf(p0));
        Tensor g({2});
        g[0] = 0.3;
        g[1] = -0.7;
        store.at("w").node()->grad = g;

        train::AdamW opt;
        opt.weight_decay = 0.1;
        const double lr = 0.01;
        opt.step(store, lr);
        const Tensor& p1 = store.at("w").value();
        for (std::size_t i = 0; i < 2; ++i) {
            // bias correction cancels the (1 - beta) factors exactly at t = 1
            const double mhat = g[i];
            const double vhat = g[i] * g[i];
            const double want = p0[i] - lr * (mhat / (std::sqrt(vhat) + opt.eps) + 0.1 * p0[i]);
            REQUIRE(p1[i] == Catch::Approx(want).epsilon(1e-15));
        }
    }
    SECTION("quadratic descent converges") {
        model::ParamStore store;
        Tensor p0({1});
        p0[0] = 10.0;
        store.map.emplace("w", ag::leaf(p0));
        train::AdamW opt;
        for (int s = 0; s < 300; ++s) {
            store.zero_grad();
            ag::Var w = store.at("w");
            ag::Var loss = ag::sum(ag::mul(ag::add_const(w, Tensor::full({1}, -3.0)),
                                           ag::add_const(w, Tensor::full({1}, -3.0))));
            ag::backward(loss);
            opt.step(store, 0.1);
        }
        REQUIRE(store.at("w").value()[0] == Catch::Approx(3.0).margin(0.05));
    }
    SECTION("per-parameter scales halve the decayed update") {
        model::ParamStore a, b;
        Tensor p0 = Tensor::full({2}, 1.0);
        a.map.emplace("w", ag::leaf(p0));
        b.map.emplace("w", ag::leaf(p0));
        Tensor g = Tensor::full({2}, 0.5);
        a.at("w").node()->grad = g;
        b.at("w").node()->grad = g;

        train::AdamW oa, ob;
        oa.weight_decay = ob.weight_decay = 0.1;
        const std::map<std::string, double> scales{{"w", 0.5}};
        oa.step(a, 0.01);
        ob.step(b, 0.01, &scales);
        const double full = 1.0 - a.at("w").value()[0];
        const double half = 1.0 - b.at("w").value()[0];
        REQUIRE(half == Catch::Approx(0.5 * full).epsilon(1e-12));
    }
    SECTION("state round trip resumes bitwise") {
        auto build = [] {
            model::ParamStore s;
            Tensor p({3});
            p[0] = 0.4;
            p[1] = -1.1;
            p[2] = 2.2;
            s.map.emplace("w", ag::leaf(p));
            return s;
        };
        auto grad_for = [](int step) {
            Tensor g({3});
            g[0] = 0.1 * step;
            g[1] = -0.2;
            g[2] = 0.05 * step * step;
            return g;
        };
        model::ParamStore s1 = build();
        train::AdamW o1;
        o1.weight_decay = 0.02;
        for (int s = 1; s <= 3; ++s) {
            s1.at("w").node()->grad = grad_for(s);
            o1.step(s1, 0.01);
        }
        model::ParamStore s2;
        s2.map.emplace("w", ag::leaf(s1.at("w").value()));
        train::AdamW o2;
        o2.weight_decay = 0.02;
        o2.restore(o1.state());
        for (int s = 4; s <= 6; ++s) {
            s1.at("w").node()->grad = grad_for(s);
            o1.step(s1, 0.01);
            s2.at("w").node()->grad = grad_for(s);
            o2.step(s2, 0.01);
        }
        for (std::size_t i = 0; i < 3; ++i)
            REQUIRE(s1.at("w").value()[i] == s2.at("w").value()[i]);
    }
}

TEST_CASE("pretraining step") {
    const model::ModelConfig mc = tiny_model();
    Rng rng(920);
    std::vector<io::ProteinBackbone> batch{random_backbone(12, rng), random_backbone(10, rng)};

    SECTION("warmup step zero applies no update") {
        train::Pretrainer t(model::make_model(mc, 1), quick_config(train::TrainMode::pretrain));
        const auto before = t.model.params.snapshot();
        const auto rep = t.step_batch(batch);
        REQUIRE(rep.lr == 0.0);
        for (const auto& [name, tens] : before) {
            const Tensor& now = t.model.params.at(name).value();
            for (std::size_t i = 0; i < tens.size(); ++i) REQUIRE(tens[i] == now[i]);
        }
    }
    SECTION("loss falls on a repeated batch") {
        auto cfg = quick_config(train::TrainMode::pretrain);
        cfg.base_lr = 1e-3;
        train::Pretrainer t(model::make_model(mc, 1), cfg);
        double first = 0.0, last = 0.0;
        for (int s = 0; s < 50; ++s) {
            const auto rep = t.step_batch(batch);
            if (s == 0) first = rep.loss.total;
            last = rep.loss.total;
        }
        INFO("first " << first << " last " << last);
        REQUIRE(last < first);
    }
    SECTION("bit-identical runs from identical seeds") {
        const auto cfg = quick_config(train::TrainMode::pretrain);
        train::Pretrainer t1(model::make_model(mc, 1), cfg);
        train::Pretrainer t2(model::make_model(mc, 1), cfg);
        for (int s = 0; s < 3; ++s) {
            const auto r1 = t1.step_batch(batch);
            const auto r2 = t2.step_batch(batch);
            REQUIRE(r1.loss.total == r2.loss.total);
        }
        REQUIRE(params_equal(t1.model.params, t2.model.params));
    }
    SECTION("non-finite sample raises a step error") {
        train::Pretrainer t(model::make_model(mc, 1), quick_config(train::TrainMode::pretrain));
        auto poisoned = batch;
        poisoned[1].residues[3].ca.x = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(t.step_batch(poisoned), StepError);
    }
    SECTION("schedule exhaustion is an error") {
        auto cfg = quick_config(train::TrainMode::pretrain);
        cfg.total_steps = 1;
        cfg.warmup_steps = 1;
        train::Pretrainer t(model::make_model(mc, 1), cfg);
        t.step_batch(batch);
        REQUIRE_THROWS_AS(t.step_batch(batch), StepError);
    }
    SECTION("save and resume continue bitwise") {
        namespace fs = std::filesystem;
        const auto path = (fs::temp_directory_path() / "miae_test_train_ckpt.bin").string();
        const auto cfg = quick_config(train::TrainMode::pretrain);
        train::Pretrainer t1(model::make_model(mc, 1), cfg);
        t1.step_batch(batch);
        t1.step_batch(batch);
        t1.save(path);
        train::Pretrainer t2 = train::Pretrainer::resume(path, cfg);
        REQUIRE(t2.step == 2);
        const auto r1 = t1.step_batch(batch);
        const auto r2 = t2.step_batch(batch);
        REQUIRE(r1.loss.total == r2.loss.total);
        REQUIRE(params_equal(t1.model.params, t2.model.params));
        fs::remove(path);
    }
    SECTION("identical runs serialize to identical bytes") {
        namespace fs = std::filesystem;
        const auto p1 = (fs::temp_directory_path() / "miae_test_bytes1.bin").string();
        const auto p2 = (fs::temp_directory_path() / "miae_test_bytes2.bin").string();
        const auto cfg = quick_config(train::TrainMode::pretrain);
        train::Pretrainer t1(model::make_model(mc, 1), cfg);
        train::Pretrainer t2(model::make_model(mc, 1), cfg);
        t1.step_batch(batch);
        t2.step_batch(batch);
        t1.save(p1);
        t2.save(p2);
        const auto read = [](const std::string& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
        };
        REQUIRE(read(p1) == read(p2));
        fs::remove(p1);
        fs::remove(p2);
    }
}

TEST_CASE("classifier training") {
    const model::ModelConfig mc = tiny_model();
    std::vector<train::LabeledBackbone> batch;
    for (int family = 0; family < 3; ++family)
        for (int rep = 0; rep < 2; ++rep)
            batch.push_back({shape_backbone(family, 10, 100 + 10 * family + rep), family});

    SECTION("three-family toy set reaches full training accuracy") {
        auto cfg = quick_config(train::TrainMode::scratch);
        cfg.base_lr = 2e-3;
        cfg.warmup_steps = 10;
        cfg.total_steps = 200;
        train::ClassifierTrainer t(
            train::make_classifier(model::make_model(mc, 2), 3, train::Pooling::class_token, 3),
            cfg);
        double acc = 0.0;
        std::size_t steps = 0;
        for (int s = 0; s < 200 && acc < 1.0; ++s) {
            acc = t.step_batch(batch).accuracy;
            ++steps;
        }
        INFO("reached accuracy " << acc << " after " << steps << " steps");
        REQUIRE(acc == 1.0);
    }
    SECTION("pooling modes disagree in general") {
        const auto m = model::make_model(mc, 4);
        const auto cls = train::make_classifier(m, 3, train::Pooling::class_token, 5);
        const auto mean = train::Classifier{m, cls.w, cls.b, train::Pooling::mean};
        const Tensor a = train::classifier_logits(cls, batch[0].b).value();
        const Tensor b = train::classifier_logits(mean, batch[0].b).value();
        double diff = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
        REQUIRE(diff > 1e-8);
    }
    SECTION("labels outside the class set are rejected") {
        train::ClassifierTrainer t(
            train::make_classifier(model::make_model(mc, 2), 3, train::Pooling::class_token, 3),
            quick_config(train::TrainMode::scratch));
        auto bad = batch;
        bad[2].label = 3;
        REQUIRE_THROWS_AS(t.step_batch(bad), LabelError);
        bad[2].label = -1;
        REQUIRE_THROWS_AS(t.step_batch(bad), LabelError);
    }
    SECTION("finetune with unit layer decay matches scratch") {
        auto sc = quick_config(train::TrainMode::scratch);
        auto ft = quick_config(train::TrainMode::finetune);
        ft.base_lr = sc.base_lr;
        ft.weight_decay = sc.weight_decay;
        ft.batch_size = sc.batch_size;
        ft.warmup_steps = sc.warmup_steps;
        ft.total_steps = sc.total_steps;
        ft.layer_decay = 1.0;
        train::ClassifierTrainer t1(
            train::make_classifier(model::make_model(mc, 6), 3, train::Pooling::class_token, 7),
            sc);
        train::ClassifierTrainer t2(
            train::make_classifier(model::make_model(mc, 6), 3, train::Pooling::class_token, 7),
            ft);
        REQUIRE(t1.lr_scales.empty());
        REQUIRE_FALSE(t2.lr_scales.empty());
        for (int s = 0; s < 3; ++s) {
            const auto r1 = t1.step_batch(batch);
            const auto r2 = t2.step_batch(batch);
            REQUIRE(r1.cross_entropy == r2.cross_entropy);
        }
        REQUIRE(params_equal(t1.trainable, t2.trainable));
    }
    SECTION("finetune decays lower layers more strongly") {
        auto ft = quick_config(train::TrainMode::finetune);
        train::ClassifierTrainer t(
            train::make_classifier(model::make_model(mc, 6), 3, train::Pooling::class_token, 7),
            ft);
        REQUIRE(t.lr_scales.at("cls_head.w") == 1.0);
        REQUIRE(t.lr_scales.at("enc.final_ln.gamma") == 1.0);
        REQUIRE(t.lr_scales.at("enc.blk.1.attn.wq") == Catch::Approx(0.8).epsilon(1e-12));
        REQUIRE(t.lr_scales.at("enc.blk.0.attn.wq") == Catch::Approx(0.64).epsilon(1e-12));
        REQUIRE(t.lr_scales.at("enc.geo.0.attn.wv") == Catch::Approx(0.512).epsilon(1e-12));
        REQUIRE(t.lr_scales.at("enc.init_embed") == Catch::Approx(0.4096).epsilon(1e-12));
        REQUIRE(t.lr_scales.count("dec.proj.w") == 0);
    }
    SECTION("classifier checkpoint round trip") {
        namespace fs = std::filesystem;
        const auto path = (fs::temp_directory_path() / "miae_test_clf_ckpt.bin").string();
        train::ClassifierTrainer t(
            train::make_classifier(model::make_model(mc, 8), 3, train::Pooling::class_token, 9),
            quick_config(train::TrainMode::scratch));
        t.step_batch(batch);
        t.save(path);
        const auto data = model::load_checkpoint(path);
        const auto back = train::classifier_from_checkpoint(data, train::Pooling::class_token);
        const Tensor l0 = train::classifier_logits(t.clf, batch[0].b).value();
        const Tensor l1 = train::classifier_logits(back, batch[0].b).value();
        for (std::size_t i = 0; i < l0.size(); ++i) REQUIRE(l0[i] == l1[i]);
        fs::remove(path);
    }
}

TEST_CASE("metrics stream") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "miae_test_metrics.jsonl").string();
    fs::remove(path);
    {
        train::MetricsWriter w(path);
        train::StepReport r;
        r.step = 3;
        r.lr = 0.001;
        r.loss.dist = 1.5;
        r.loss.dir = 0.5;
        r.loss.binned_dist = 4.0;
        r.loss.binned_dir = 2.0;
        r.loss.total = 8.0;
        w.write(r);
        train::ClassStepReport c{7, 0.002, 1.1, 0.75};
        w.write(c);
    }
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    const auto j0 = nlohmann::json::parse(line);
    REQUIRE(j0.at("step") == 3);
    REQUIRE(j0.at("lr") == 0.001);
    REQUIRE(j0.at("dist") == 1.5);
    REQUIRE(j0.at("total") == 8.0);
    REQUIRE(std::getline(in, line));
    const auto j1 = nlohmann::json::parse(line);
    REQUIRE(j1.at("step") == 7);
    REQUIRE(j1.at("accuracy") == 0.75);
    REQUIRE_FALSE(std::getline(in, line));
    fs::remove(path);
}
