#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "miae/geometry/frames.hpp"
#include "miae/losses/losses.hpp"
#include "miae/masking/mask.hpp"
#include "miae/model/checkpoint.hpp"
#include "miae/model/config.hpp"
#include "miae/model/layers.hpp"
#include "miae/model/network.hpp"
#include "miae/model/params.hpp"
#include "testutil.hpp"

using namespace miae;
namespace ag = miae::ag;
using geom::Mat3;
using geom::Vec3;
using testutil::random_backbone;

namespace {

model::ModelConfig tiny() {
    model::ModelConfig c;
    c.encoder_depth = 2;
    c.geometric_blocks = 1;
    c.hidden_dim = 24;
    c.attention_heads = 8; // 3 * heads == hidden, see the value-projection test
    c.decoder_depth = 1;
    c.decoder_dim = 16;
    c.decoder_heads = 2;
    c.pair_dim = 8;
    return c;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, testutil::rel_err(a[i], b[i]));
    return worst;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("config validation") {
    REQUIRE_NOTHROW(model::validate(tiny()));

    model::ModelConfig c = tiny();
    SECTION("head divisibility") {
        c.hidden_dim = 22;
        REQUIRE_THROWS_AS(model::validate(c), ConfigError);
    }
    SECTION("decoder head width must be even") {
        c.decoder_dim = 18;
        c.decoder_heads = 2; // width 9
        REQUIRE_THROWS_AS(model::validate(c), ConfigError);
    }
    SECTION("positive dimensions") {
        c.encoder_depth = 0;
        REQUIRE_THROWS_AS(model::validate(c), ConfigError);
    }
}

TEST_CASE("config presets") {
    const model::ModelConfig b = model::miae_b();
    REQUIRE(b.hidden_dim == 768);
    REQUIRE(b.encoder_depth == 12);
    REQUIRE(b.attention_heads == 12);
    REQUIRE(model::preset("miae-b") == b);
    REQUIRE(model::preset("miae-s").hidden_dim < b.hidden_dim);
    REQUIRE(model::preset("miae-l").hidden_dim > b.hidden_dim);
    REQUIRE_THROWS_AS(model::preset("miae-xl"), ConfigError);
}

TEST_CASE("config json round trip") {
    model::ModelConfig c = tiny();
    c.use_sequence = true;
    c.use_inverse_folding_loss = true;
    c.max_length = 99;
    const model::ModelConfig back = model::config_from_json(model::to_json(c));
    REQUIRE(back == c);
}

TEST_CASE("base model parameter count") {
    const double count = static_cast<double>(model::parameter_count(model::miae_b()));
    const double target = 102e6;
    INFO("parameter count " << count);
    REQUIRE(std::abs(count - target) / target < 0.15);
}

TEST_CASE("optional heads toggle parameters") {
    model::ModelConfig c = tiny();
    auto has = [](const model::ShapeList& shapes, const std::string& name) {
        for (const auto& [k, s] : shapes)
            if (k == name) return true;
        return false;
    };
    REQUIRE_FALSE(has(model::parameter_shapes(c), "enc.aa_embed"));
    REQUIRE_FALSE(has(model::parameter_shapes(c), "head.aa.w"));
    c.use_sequence = true;
    c.use_inverse_folding_loss = true;
    REQUIRE(has(model::parameter_shapes(c), "enc.aa_embed"));
    REQUIRE(has(model::parameter_shapes(c), "head.aa.w"));
}

TEST_CASE("parameter initialization") {
    const model::ModelConfig c = tiny();
    model::ParamStore a = model::init_parameters(c, 11);
    model::ParamStore b = model::init_parameters(c, 11);

    SECTION("deterministic in the seed") {
        for (const auto& [name, var] : a.map) {
            const Tensor& ta = var.value();
            const Tensor& tb = b.at(name).value();
            REQUIRE(ta.same_shape(tb));
            for (std::size_t i = 0; i < ta.size(); ++i) REQUIRE(ta[i] == tb[i]);
        }
        model::ParamStore other = model::init_parameters(c, 12);
        REQUIRE(max_abs_diff(a.at("enc.init_embed").value(),
                             other.at("enc.init_embed").value()) > 0.0);
    }
    SECTION("biases start at zero, norm gains at one") {
        for (double x : a.at("enc.geo.0.attn.bo").value()) REQUIRE(x == 0.0);
        for (double x : a.at("enc.final_ln.gamma").value()) REQUIRE(x == 1.0);
        for (double x : a.at("enc.final_ln.beta").value()) REQUIRE(x == 0.0);
    }
    SECTION("attention gates start with unit effective weight") {
        const Tensor& g = a.at("enc.geo.0.attn.gate_r").value();
        for (double x : g) REQUIRE(std::log(std::exp(x) + 1.0) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("unknown name rejected") {
        REQUIRE_THROWS_AS(a.at("enc.no_such_param"), ConfigError);
    }
}

TEST_CASE("geometric attention on a single residue is the value projection") {
    const model::ModelConfig c = tiny(); // hidden 24 = 3 * 8 heads, so wo can be identity
    model::ParamStore p = model::init_parameters(c, 5);

    Tensor eye({c.hidden_dim, c.hidden_dim});
    for (std::size_t i = 0; i < c.hidden_dim; ++i) eye.at(i, i) = 1.0;
    p.at("enc.geo.0.attn.wo").node()->value = eye;

    Rng rng(17);
    const Tensor x = testutil::random_tensor({1, c.hidden_dim}, rng);
    const Tensor& wv = p.at("enc.geo.0.attn.wv").value();
    Tensor expected({1, c.hidden_dim});
    for (std::size_t j = 0; j < c.hidden_dim; ++j)
        for (std::size_t k = 0; k < c.hidden_dim; ++k) expected[j] += x[k] * wv.at(k, j);

    const geom::Frame id{Mat3::identity(), Vec3{0, 0, 0}};
    const geom::Frame moved{geom::random_rotation(rng), Vec3{3.0, -2.0, 7.5}};
    for (const geom::Frame& f : {id, moved}) {
        ag::Var out = model::geometric_attention(ag::constant(x), {f}, p, "enc.geo.0.attn",
                                                 c.attention_heads);
        REQUIRE(max_abs_diff(out.value(), expected) < 1e-12);
    }
}

TEST_CASE("identical residues attend with equal weight") {
    const model::ModelConfig c = tiny();
    model::ParamStore p = model::init_parameters(c, 6);

    Rng rng(8);
    Tensor x({2, c.hidden_dim});
    for (std::size_t j = 0; j < c.hidden_dim; ++j) x.at(0, j) = x.at(1, j) = rng.normal();
    const geom::Frame f{geom::random_rotation(rng), Vec3{1.0, 2.0, 3.0}};

    model::GeoAttentionCapture capture;
    model::geometric_attention(ag::constant(x), {f, f}, p, "enc.geo.0.attn", c.attention_heads,
                               &capture);
    REQUIRE(capture.head_weights.size() == c.attention_heads);
    for (const Tensor& w : capture.head_weights) {
        REQUIRE(w.rows() == 2);
        for (std::size_t i = 0; i < w.size(); ++i)
            REQUIRE(w[i] == Catch::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("geometric block is rigid-motion invariant") {
    const model::ModelConfig c = tiny();
    model::ParamStore p = model::init_parameters(c, 21);
    Rng rng(300);
    auto b = random_backbone(6, rng);
    const Tensor x = testutil::random_tensor({6, c.hidden_dim}, rng);

    const ag::Var y0 = model::geometric_block(ag::constant(x), geom::build_frames(b), p,
                                              "enc.geo.0", c.attention_heads);
    const geom::RigidTransform g = geom::random_rigid(rng);
    const auto moved = geom::apply_rigid(b, g.R, g.t);
    const ag::Var y1 = model::geometric_block(ag::constant(x), geom::build_frames(moved), p,
                                              "enc.geo.0", c.attention_heads);
    REQUIRE(max_rel_diff(y0.value(), y1.value()) < 1e-8);
}

TEST_CASE("encode emits one latent per visible residue plus a class token") {
    model::ModelConfig c = tiny();
    c.use_sequence = true;
    const model::Model m = model::make_model(c, 40);
    Rng rng(41);
    const auto b = random_backbone(12, rng);
    const auto plan = masking::sample_mask(12, 0.5, masking::Strategy::random, 7);

    const model::EncodeResult enc = model::encode(b, plan, m);
    REQUIRE(enc.tokens.value().rows() == plan.visible.size() + 1);
    REQUIRE(enc.tokens.value().cols() == c.hidden_dim);
    REQUIRE(enc.tokens.value().all_finite());
}

TEST_CASE("encoder latents are rigid-motion invariant") {
    model::ModelConfig c = tiny();
    c.use_sequence = true;
    const model::Model m = model::make_model(c, 42);
    Rng rng(43);
    const auto b = random_backbone(15, rng);
    const auto plan = masking::sample_mask(15, 0.6, masking::Strategy::span, 9);

    const Tensor t0 = model::encode(b, plan, m).tokens.value();
    for (int k = 0; k < 3; ++k) {
        const geom::RigidTransform g = geom::random_rigid(rng);
        const Tensor t1 = model::encode(geom::apply_rigid(b, g.R, g.t), plan, m).tokens.value();
        REQUIRE(max_rel_diff(t0, t1) < 1e-8);
    }
}

TEST_CASE("encode keeps original residue positions for visible tokens") {
    model::ModelConfig c = tiny();
    c.use_sequence = true;
    const model::Model m = model::make_model(c, 44);
    Rng rng(45);
    const auto b = random_backbone(10, rng);
    const auto plan = masking::sample_mask(10, 0.5, masking::Strategy::random, 2);

    const geom::FrameSet all = geom::build_frames(b);
    geom::FrameSet vis_frames;
    std::vector<std::size_t> aa;
    for (std::size_t i : plan.visible) {
        vis_frames.push_back(all[i]);
        aa.push_back(io::aa_index(b.sequence[i]));
    }
    const Tensor direct =
        model::encode_tokens(vis_frames, aa, plan.visible, m).tokens.value();
    const Tensor via_plan = model::encode(b, plan, m).tokens.value();
    REQUIRE(max_abs_diff(direct, via_plan) == 0.0);

    // shifting the declared positions must change the latents
    std::vector<std::size_t> shifted = plan.visible;
    for (auto& s : shifted) s += 1;
    const Tensor moved = model::encode_tokens(vis_frames, aa, shifted, m).tokens.value();
    REQUIRE(max_abs_diff(direct, moved) > 1e-8);
}

TEST_CASE("encode rejects positions beyond max_length") {
    model::ModelConfig c = tiny();
    c.max_length = 8;
    const model::Model m = model::make_model(c, 46);
    Rng rng(47);
    const auto b = random_backbone(10, rng);
    const auto plan = masking::sample_mask(10, 0.0, masking::Strategy::random, 1);
    REQUIRE_THROWS_AS(model::encode(b, plan, m), LengthError);
}

TEST_CASE("decode output shapes") {
    model::ModelConfig c = tiny();
    c.use_inverse_folding_loss = true;
    const model::Model m = model::make_model(c, 50);
    Rng rng(51);
    const std::size_t n = 7;
    const auto b = random_backbone(n, rng);
    const auto plan = masking::sample_mask(n, 0.6, masking::Strategy::random, 3);

    const auto enc = model::encode(b, plan, m);
    const auto out = model::decode(enc.tokens, plan, m);

    REQUIRE(out.coords.value().shape() == std::vector<std::size_t>{n, 9});
    REQUIRE(out.dist_logits.value().shape() == std::vector<std::size_t>{n * n, 64});
    REQUIRE(out.dir_logits.value().shape() == std::vector<std::size_t>{9 * n * n, 16});
    REQUIRE(out.aa_logits.value().shape() == std::vector<std::size_t>{n, 20});
    REQUIRE(out.coords.value().all_finite());
    REQUIRE(out.dist_logits.value().all_finite());
    REQUIRE(out.dir_logits.value().all_finite());

    model::ModelConfig plain = tiny();
    const model::Model m2 = model::make_model(plain, 50);
    const auto out2 = model::decode(model::encode(b, plan, m2).tokens, plan, m2);
    REQUIRE_FALSE(out2.aa_logits.defined());
}

TEST_CASE("latent count must match the mask plan") {
    const model::Model m = model::make_model(tiny(), 52);
    Rng rng(53);
    const auto b = random_backbone(6, rng);
    const auto plan6 = masking::sample_mask(6, 0.5, masking::Strategy::random, 1);
    const auto plan5 = masking::sample_mask(5, 0.8, masking::Strategy::random, 1);
    const auto enc = model::encode(b, plan6, m);
    REQUIRE_THROWS_AS(model::decode(enc.tokens, plan5, m), ShapeError);
}

TEST_CASE("zeroed decoder weight matrices give position-independent outputs") {
    model::ModelConfig c = tiny();
    c.use_inverse_folding_loss = true;
    model::Model m = model::make_model(c, 60);
    Rng rng(61);

    for (const auto& [name, shape] : model::parameter_shapes(c)) {
        if (name.rfind("dec.", 0) != 0) continue;
        ag::Var& v = m.params.at(name);
        if (shape.size() == 2) {
            v.node()->value = Tensor::zeros(shape);
        } else if (name == "dec.mask_token" || name == "dec.proj.b") {
            v.node()->value = Tensor::zeros(shape);
        } else if (name.find(".b") != std::string::npos) {
            // nonzero attention and feed-forward biases: rotary phases then
            // differ per position, but value rows stay constant, so the trunk
            // must still collapse to identical residue outputs
            v.node()->value = testutil::random_tensor(shape, rng, 0.5);
        }
    }

    const std::size_t n = 9;
    const auto b = random_backbone(n, rng);
    const auto plan = masking::sample_mask(n, 0.7, masking::Strategy::random, 4);
    const auto out = model::decode(model::encode(b, plan, m).tokens, plan, m);

    const Tensor& coords = out.coords.value();
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < 9; ++j)
            REQUIRE(coords.at(i, j) == Catch::Approx(coords.at(0, j)).margin(1e-10));
    const Tensor& aa = out.aa_logits.value();
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < 20; ++j)
            REQUIRE(aa.at(i, j) == Catch::Approx(aa.at(0, j)).margin(1e-10));
}

TEST_CASE("pair representation is direction-sensitive") {
    const model::Model m = model::make_model(tiny(), 70);
    Rng rng(71);
    const std::size_t n = 4;
    const auto b = random_backbone(n, rng);
    const auto plan = masking::sample_mask(n, 0.5, masking::Strategy::random, 5);
    const auto out = model::decode(model::encode(b, plan, m).tokens, plan, m);

    const Tensor& d = out.dist_logits.value();
    double diff = 0.0;
    for (std::size_t k = 0; k < 64; ++k)
        diff = std::max(diff, std::abs(d.at(0 * n + 1, k) - d.at(1 * n + 0, k)));
    REQUIRE(diff > 1e-8);
}

TEST_CASE("composite loss is rigid-motion invariant end to end") {
    model::ModelConfig c = tiny();
    c.use_sequence = true;
    c.use_inverse_folding_loss = true;
    const model::Model m = model::make_model(c, 80);
    Rng rng(81);
    const auto b = random_backbone(10, rng);
    const auto plan = masking::sample_mask(10, 0.6, masking::Strategy::span, 6);

    auto total = [&](const io::ProteinBackbone& bb) {
        const auto out = model::decode(model::encode(bb, plan, m).tokens, plan, m);
        return losses::composite_loss(out, bb, c).total.value()[0];
    };
    const double t0 = total(b);
    REQUIRE(std::isfinite(t0));
    for (int k = 0; k < 3; ++k) {
        const geom::RigidTransform g = geom::random_rigid(rng);
        const double t1 = total(geom::apply_rigid(b, g.R, g.t));
        REQUIRE(testutil::rel_err(t0, t1) < 1e-8);
    }
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "miae_test_ckpt.bin";

    model::ModelConfig c = tiny();
    c.use_sequence = true;
    const model::Model m = model::make_model(c, 90);
    model::save_model(path.string(), m, 1234);

    const model::CheckpointData data = model::load_checkpoint(path.string());
    REQUIRE(data.step == 1234);
    REQUIRE(data.cfg == c);

    const model::Model back = model::model_from_checkpoint(data);
    for (const auto& [name, var] : m.params.map) {
        const Tensor& a = var.value();
        const Tensor& r = back.params.at(name).value();
        REQUIRE(a.same_shape(r));
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == r[i]);
    }

    Rng rng(91);
    const auto b = random_backbone(8, rng);
    const auto plan = masking::sample_mask(8, 0.5, masking::Strategy::random, 2);
    const Tensor t0 = model::encode(b, plan, m).tokens.value();
    const Tensor t1 = model::encode(b, plan, back).tokens.value();
    REQUIRE(max_abs_diff(t0, t1) == 0.0);

    fs::remove(path);
}

TEST_CASE("checkpoint rejects damaged files") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();

    SECTION("wrong magic") {
        const fs::path p = dir / "miae_test_badmagic.bin";
        std::ofstream out(p, std::ios::binary);
        out << "NOTACKPT" << std::string(64, '\0');
        out.close();
        REQUIRE_THROWS_AS(model::load_checkpoint(p.string()), ParseError);
        fs::remove(p);
    }
    SECTION("truncated payload") {
        const fs::path full = dir / "miae_test_full.bin";
        const fs::path cut = dir / "miae_test_cut.bin";
        const model::Model m = model::make_model(tiny(), 92);
        model::save_model(full.string(), m, 1);
        std::ifstream in(full, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
        out.close();
        REQUIRE_THROWS_AS(model::load_checkpoint(cut.string()), ParseError);
        fs::remove(full);
        fs::remove(cut);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(model::load_checkpoint((dir / "miae_no_such_file.bin").string()),
                          ParseError);
    }
}

TEST_CASE("checkpoint data must match the declared architecture") {
    const model::Model m = model::make_model(tiny(), 93);
    model::CheckpointData data;
    data.cfg = m.cfg;
    data.step = 0;
    for (const auto& [name, var] : m.params.map) data.tensors[name] = var.value();

    SECTION("complete data loads") { REQUIRE_NOTHROW(model::model_from_checkpoint(data)); }
    SECTION("missing tensor") {
        data.tensors.erase("enc.init_embed");
        REQUIRE_THROWS_AS(model::model_from_checkpoint(data), ConfigError);
    }
    SECTION("wrong shape") {
        data.tensors["enc.init_embed"] = Tensor::zeros({m.cfg.hidden_dim + 1});
        REQUIRE_THROWS_AS(model::model_from_checkpoint(data), ConfigError);
    }
    SECTION("non-finite value") {
        data.tensors["enc.init_embed"][0] = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(model::model_from_checkpoint(data), ConfigError);
    }
}
