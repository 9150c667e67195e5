// Command-line driver binding the library modules into reproducible runs.
//
// Subcommands: prepare-data, pretrain, scratch, finetune, embed, probe,
// reconstruct. Each resolves its configuration from defaults, an optional
// --config file, and --key=value overrides, then serializes the resolved
// configuration (plus the tool version) into the output directory before
// doing any work, so a run can be replayed from its own artifacts.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "miae/miae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace miae;

namespace {

using KV = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// configuration plumbing

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format double");
    return std::string(buf, ptr);
}

KV load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KV kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const std::size_t eq = line.find('=', start);
        if (eq == std::string::npos)
            throw ConfigError("config file " + path + " line " + std::to_string(line_no) +
                              ": expected key=value");
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        std::size_t vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        if (key.empty())
            throw ConfigError("config file " + path + " line " + std::to_string(line_no) +
                              ": empty key");
        kv[key] = value;
    }
    return kv;
}

void apply_override(KV& kv, const std::string& token) {
    if (token.rfind("--", 0) != 0)
        throw ConfigError("unexpected argument '" + token + "' (overrides use --key=value)");
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos || eq == 2)
        throw ConfigError("override '" + token + "' must look like --key=value");
    kv[token.substr(2, eq - 2)] = token.substr(eq + 1);
}

bool has(const KV& kv, const std::string& key) { return kv.find(key) != kv.end(); }

const std::string& get_str(const KV& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

double get_double(const KV& kv, const std::string& key) {
    const std::string& s = get_str(kv, key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError("config key '" + key + "': bad number '" + s + "'");
    return v;
}

std::uint64_t get_u64(const KV& kv, const std::string& key) {
    const std::string& s = get_str(kv, key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
    return v;
}

std::vector<double> get_double_list(const KV& kv, const std::string& key) {
    const std::string& s = get_str(kv, key);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        const std::string item = s.substr(pos, comma - pos);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size() || item.empty())
            throw ConfigError("config key '" + key + "': bad list entry '" + item + "'");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

void check_allowed(const KV& kv, const std::set<std::string>& allowed, const std::string& cmd) {
    for (const auto& [key, value] : kv)
        if (!allowed.count(key))
            throw ConfigError("unknown config key '" + key + "' for " + cmd);
}

// Serialize the effective configuration before any computation so the run
// can be replayed from the artifact alone.
void write_resolved_config(const std::string& cmd, const KV& kv) {
    const fs::path out_dir = get_str(kv, "out");
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "config.resolved", std::ios::binary);
    if (!out) throw Error("cannot write resolved config in " + out_dir.string());
    out << "# miae " << kToolVersion << "\n";
    out << "# command: " << cmd << "\n";
    for (const auto& [key, value] : kv) out << key << "=" << value << "\n";
    if (!out.flush()) throw Error("resolved config write failed");
}

// ---------------------------------------------------------------------------
// shared builders

model::ModelConfig model_config_from(const KV& kv) {
    model::ModelConfig cfg = model::preset(get_str(kv, "model.preset"));
    const auto field = [&](const char* key, std::size_t& slot) {
        if (has(kv, key)) slot = get_u64(kv, key);
    };
    field("model.encoder_depth", cfg.encoder_depth);
    field("model.geometric_blocks", cfg.geometric_blocks);
    field("model.hidden_dim", cfg.hidden_dim);
    field("model.attention_heads", cfg.attention_heads);
    field("model.decoder_depth", cfg.decoder_depth);
    field("model.decoder_dim", cfg.decoder_dim);
    field("model.decoder_heads", cfg.decoder_heads);
    field("model.pair_dim", cfg.pair_dim);
    field("model.max_length", cfg.max_length);
    model::validate(cfg);
    return cfg;
}

void expand_model_config(KV& kv, const model::ModelConfig& cfg) {
    kv["model.encoder_depth"] = std::to_string(cfg.encoder_depth);
    kv["model.geometric_blocks"] = std::to_string(cfg.geometric_blocks);
    kv["model.hidden_dim"] = std::to_string(cfg.hidden_dim);
    kv["model.attention_heads"] = std::to_string(cfg.attention_heads);
    kv["model.decoder_depth"] = std::to_string(cfg.decoder_depth);
    kv["model.decoder_dim"] = std::to_string(cfg.decoder_dim);
    kv["model.decoder_heads"] = std::to_string(cfg.decoder_heads);
    kv["model.pair_dim"] = std::to_string(cfg.pair_dim);
    kv["model.max_length"] = std::to_string(cfg.max_length);
}

masking::Strategy strategy_from(const std::string& name) {
    if (name == "random") return masking::Strategy::random;
    if (name == "span") return masking::Strategy::span;
    throw ConfigError("mask strategy must be 'random' or 'span', got '" + name + "'");
}

train::TrainConfig train_config_from(const KV& kv, train::TrainMode mode) {
    train::TrainConfig cfg = train::default_train_config(mode);
    if (has(kv, "train.base_lr")) cfg.base_lr = get_double(kv, "train.base_lr");
    if (has(kv, "train.weight_decay")) cfg.weight_decay = get_double(kv, "train.weight_decay");
    if (has(kv, "train.beta1")) cfg.beta1 = get_double(kv, "train.beta1");
    if (has(kv, "train.beta2")) cfg.beta2 = get_double(kv, "train.beta2");
    if (has(kv, "train.adam_eps")) cfg.adam_eps = get_double(kv, "train.adam_eps");
    if (has(kv, "train.batch_size")) cfg.batch_size = get_u64(kv, "train.batch_size");
    if (has(kv, "train.warmup_steps")) cfg.warmup_steps = get_u64(kv, "train.warmup_steps");
    if (has(kv, "train.total_steps")) cfg.total_steps = get_u64(kv, "train.total_steps");
    if (has(kv, "train.layer_decay")) cfg.layer_decay = get_double(kv, "train.layer_decay");
    if (has(kv, "train.noise_std")) cfg.noise_std = get_double(kv, "train.noise_std");
    if (has(kv, "train.mask_ratio")) cfg.mask_ratio = get_double(kv, "train.mask_ratio");
    if (has(kv, "train.mask_strategy"))
        cfg.mask_strategy = strategy_from(get_str(kv, "train.mask_strategy"));
    cfg.seed = get_u64(kv, "seed");
    train::validate(cfg);
    return cfg;
}

void expand_train_config(KV& kv, const train::TrainConfig& cfg) {
    kv["train.base_lr"] = format_double(cfg.base_lr);
    kv["train.weight_decay"] = format_double(cfg.weight_decay);
    kv["train.beta1"] = format_double(cfg.beta1);
    kv["train.beta2"] = format_double(cfg.beta2);
    kv["train.adam_eps"] = format_double(cfg.adam_eps);
    kv["train.batch_size"] = std::to_string(cfg.batch_size);
    kv["train.warmup_steps"] = std::to_string(cfg.warmup_steps);
    kv["train.total_steps"] = std::to_string(cfg.total_steps);
    kv["train.layer_decay"] = format_double(cfg.layer_decay);
    kv["train.noise_std"] = format_double(cfg.noise_std);
    kv["train.mask_ratio"] = format_double(cfg.mask_ratio);
    kv["train.mask_strategy"] = cfg.mask_strategy == masking::Strategy::span ? "span" : "random";
}

train::Pooling pooling_from(const std::string& name) {
    if (name == "mean") return train::Pooling::mean;
    if (name == "cls") return train::Pooling::class_token;
    throw ConfigError("pooling must be 'mean' or 'cls', got '" + name + "'");
}

std::size_t workers_from_env() {
    const char* raw = std::getenv("MIAE_WORKERS");
    if (!raw) return 1;
    std::size_t v = 0;
    const std::string s(raw);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0)
        throw ConfigError("MIAE_WORKERS must be a positive integer, got '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// datasets

struct Dataset {
    std::vector<io::ProteinBackbone> backbones;
    std::vector<int> labels;              // empty when unlabeled
    std::vector<std::string> class_names; // index -> display label
};

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

data::FoldFamily family_from(const std::string& name) {
    for (const auto f :
         {data::FoldFamily::helix, data::FoldFamily::strand, data::FoldFamily::hairpin})
        if (name == data::family_name(f)) return f;
    throw ConfigError("unknown fold family '" + name + "'");
}

Dataset load_synthetic(const KV& kv) {
    const std::string spec = get_str(kv, "synthetic");
    const std::size_t length = get_u64(kv, "synthetic_length");
    const double noise = get_double(kv, "synthetic_noise");
    const std::uint64_t seed = get_u64(kv, "seed");
    if (length < 3) throw ConfigError("synthetic_length must be at least 3");

    Dataset ds;
    std::uint64_t next_seed = seed;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t comma = std::min(spec.find(',', pos), spec.size());
        const std::string item = spec.substr(pos, comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
            throw ConfigError("synthetic spec entries look like family:count, got '" + item + "'");
        const data::FoldFamily fam = family_from(item.substr(0, colon));
        std::size_t count = 0;
        const std::string num = item.substr(colon + 1);
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), count);
        if (ec != std::errc{} || ptr != num.data() + num.size() || count == 0)
            throw ConfigError("synthetic spec: bad count '" + num + "'");
        const int label = static_cast<int>(ds.class_names.size());
        ds.class_names.push_back(data::family_name(fam));
        for (std::size_t i = 0; i < count; ++i) {
            ds.backbones.push_back(data::synthetic_fold(fam, length, noise, next_seed++));
            ds.labels.push_back(label);
        }
        pos = comma + 1;
    }
    return ds;
}

Dataset load_manifest(const KV& kv, bool need_labels) {
    const std::string path = get_str(kv, "data");
    const double plddt_min = get_double(kv, "plddt_min");
    auto rows = data::read_sample_table(path);
    const fs::path base = fs::path(path).parent_path();

    data::LabelMap label_map;
    if (need_labels) {
        if (!has(kv, "labels"))
            throw ConfigError("this command needs a 'labels' file (from prepare-data)");
        label_map = data::load_label_map(get_str(kv, "labels"));
    }

    Dataset ds;
    ds.class_names = label_map.labels;
    for (const auto& row : rows) {
        if (row.plddt < plddt_min) continue;
        fs::path file = row.path;
        if (file.is_relative()) file = base / file;
        ds.backbones.push_back(io::parse_backbone(read_text_file(file.string()), row.id));
        if (need_labels)
            ds.labels.push_back(static_cast<int>(data::apply_label_map(label_map, row.code)));
    }
    return ds;
}

Dataset load_dataset(const KV& kv, bool need_labels) {
    const bool synth = has(kv, "synthetic");
    const bool table = has(kv, "data");
    if (synth == table)
        throw ConfigError("give exactly one data source: 'data' (sample table) or 'synthetic'");
    Dataset ds = synth ? load_synthetic(kv) : load_manifest(kv, need_labels);
    const std::size_t limit = get_u64(kv, "limit");
    if (limit > 0 && ds.backbones.size() > limit) {
        ds.backbones.resize(limit);
        if (!ds.labels.empty()) ds.labels.resize(limit);
    }
    if (ds.backbones.empty()) throw Error("dataset is empty after filtering");
    return ds;
}

// Split index per sample, either looked up in a split manifest by id or
// drawn freshly from the stratified splitter.
std::vector<std::size_t> resolve_split(const KV& kv, const Dataset& ds, std::size_t& n_splits) {
    if (has(kv, "split")) {
        const data::SplitManifest man = data::load_split(get_str(kv, "split"));
        n_splits = man.ratios.size();
        std::map<std::string, std::size_t> where;
        for (std::size_t i = 0; i < man.ids.size(); ++i) where[man.ids[i]] = man.split[i];
        if (where.empty()) throw SplitError("split manifest has no sample ids");
        std::vector<std::size_t> out;
        out.reserve(ds.backbones.size());
        for (const auto& b : ds.backbones) {
            const auto it = where.find(b.id);
            if (it == where.end())
                throw SplitError("split manifest does not cover sample '" + b.id + "'");
            out.push_back(it->second);
        }
        return out;
    }
    const std::vector<double> ratios = get_double_list(kv, "ratios");
    std::vector<std::size_t> assignment(ds.labels.size());
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        assignment[i] = static_cast<std::size_t>(ds.labels[i]);
    const auto man = data::stratified_split(assignment, ratios, get_u64(kv, "seed"));
    n_splits = ratios.size();
    return man.split;
}

// Deterministic sample order: a seeded permutation refreshed every pass.
struct IndexStream {
    std::vector<std::size_t> order;
    std::uint64_t seed = 0;
    std::uint64_t pass = 0;
    std::size_t pos = 0;

    IndexStream(std::size_t n, std::uint64_t s) : order(n), seed(s) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle();
    }
    void shuffle() {
        Rng rng(Rng::mix(Rng::mix(seed, 0xba7c4), pass));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    std::size_t next() {
        if (pos == order.size()) {
            ++pass;
            shuffle();
            pos = 0;
        }
        return order[pos++];
    }
};

std::string sanitize_id(const std::string& id) {
    std::string out = id.empty() ? std::string("sample") : id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
            c = '_';
    return out;
}

// ---------------------------------------------------------------------------
// commands

int cmd_prepare_data(KV kv) {
    if (!has(kv, "out")) throw ConfigError("prepare-data needs --out");
    if (!has(kv, "manifest")) throw ConfigError("prepare-data needs a sample manifest");
    if (!has(kv, "cutoff"))
        throw ConfigError("prepare-data needs an explicit --cutoff (there is no default)");
    const std::size_t cutoff = get_u64(kv, "cutoff");
    const std::vector<double> ratios = get_double_list(kv, "ratios");
    const std::uint64_t seed = get_u64(kv, "seed");
    const double plddt_min = get_double(kv, "plddt_min");
    write_resolved_config("prepare-data", kv);

    auto rows = data::read_sample_table(get_str(kv, "manifest"));
    std::vector<std::string> codes, ids;
    for (const auto& row : rows) {
        if (row.plddt < plddt_min) continue;
        codes.push_back(row.code);
        ids.push_back(row.id);
    }
    if (codes.empty()) throw Error("no samples left after the plddt filter");

    const data::LabelMap labels = data::process_cath_labels(codes, cutoff);
    data::SplitManifest split = data::stratified_split(labels.assignment, ratios, seed);
    split.ids = ids;

    const fs::path out_dir = get_str(kv, "out");
    data::save_label_map((out_dir / "labels.tsv").string(), labels);
    data::save_split((out_dir / "split.tsv").string(), split);

    std::size_t min_k = 0, max_k = 0;
    for (std::size_t k = 1; k < labels.counts.size(); ++k) {
        if (labels.counts[k] < labels.counts[min_k]) min_k = k;
        if (labels.counts[k] > labels.counts[max_k]) max_k = k;
    }
    std::ostringstream summary;
    summary << "samples\t" << codes.size() << "\n";
    summary << "classes\t" << labels.labels.size() << "\n";
    summary << "min_class\t" << labels.labels[min_k] << "\t" << labels.counts[min_k] << "\n";
    summary << "max_class\t" << labels.labels[max_k] << "\t" << labels.counts[max_k] << "\n";
    for (std::size_t s = 0; s < ratios.size(); ++s) {
        std::size_t n = 0;
        for (const auto& per_class : split.class_counts) n += per_class[s];
        summary << data::split_name(s) << "\t" << n << "\n";
    }
    std::ofstream sf(out_dir / "summary.tsv", std::ios::binary);
    if (!sf) throw Error("cannot write summary");
    sf << summary.str();
    std::cout << summary.str();
    return 0;
}

int cmd_pretrain(KV kv) {
    if (!has(kv, "out")) throw ConfigError("pretrain needs --out");
    const model::ModelConfig mcfg = model_config_from(kv);
    const train::TrainConfig tcfg = train_config_from(kv, train::TrainMode::pretrain);
    expand_model_config(kv, mcfg);
    expand_train_config(kv, tcfg);
    write_resolved_config("pretrain", kv);

    const Dataset ds = load_dataset(kv, false);
    const fs::path out_dir = get_str(kv, "out");

    train::Pretrainer trainer =
        has(kv, "resume") ? train::Pretrainer::resume(get_str(kv, "resume"), tcfg)
                          : train::Pretrainer(model::make_model(mcfg, tcfg.seed), tcfg);

    train::MetricsWriter metrics((out_dir / "metrics.jsonl").string());
    const std::uint64_t log_every = get_u64(kv, "log_every");
    const std::uint64_t ckpt_every = get_u64(kv, "checkpoint_every");
    IndexStream stream(ds.backbones.size(), tcfg.seed);

    while (trainer.step < tcfg.total_steps) {
        std::vector<io::ProteinBackbone> batch;
        batch.reserve(tcfg.batch_size);
        for (std::size_t i = 0; i < tcfg.batch_size; ++i)
            batch.push_back(ds.backbones[stream.next()]);
        const train::StepReport rep = trainer.step_batch(batch);
        metrics.write(rep);
        if (log_every && rep.step % log_every == 0)
            std::cout << "step " << rep.step << " lr " << rep.lr << " loss " << rep.loss.total
                      << "\n";
        if (ckpt_every && trainer.step % ckpt_every == 0 && trainer.step < tcfg.total_steps)
            trainer.save((out_dir / ("checkpoint_" + std::to_string(trainer.step) + ".ckpt"))
                             .string());
    }
    trainer.save((out_dir / "model.ckpt").string());
    std::cout << "pretrained " << tcfg.total_steps << " steps on " << ds.backbones.size()
              << " samples -> " << (out_dir / "model.ckpt").string() << "\n";
    return 0;
}

int cmd_supervised(KV kv, train::TrainMode mode) {
    const std::string name = train::to_string(mode);
    if (!has(kv, "out")) throw ConfigError(name + " needs --out");
    if (mode == train::TrainMode::finetune && !has(kv, "init"))
        throw ConfigError("finetune needs 'init', a pretrained checkpoint");

    model::ModelConfig mcfg;
    if (mode == train::TrainMode::finetune)
        mcfg = model::load_checkpoint(get_str(kv, "init")).cfg;
    else
        mcfg = model_config_from(kv);
    const train::TrainConfig tcfg = train_config_from(kv, mode);
    const train::Pooling pooling = pooling_from(get_str(kv, "pooling"));
    expand_model_config(kv, mcfg);
    expand_train_config(kv, tcfg);
    write_resolved_config(name, kv);

    const Dataset ds = load_dataset(kv, true);
    const std::size_t n_classes = ds.class_names.size();
    const fs::path out_dir = get_str(kv, "out");

    // train on split 0; report on every later split present
    std::vector<std::size_t> split(ds.backbones.size(), 0);
    std::size_t n_splits = 1;
    const double holdout = get_double(kv, "holdout");
    if (has(kv, "split")) {
        split = resolve_split(kv, ds, n_splits);
    } else if (holdout > 0.0) {
        if (holdout >= 1.0) throw ConfigError("holdout must be below 1");
        std::vector<std::size_t> assignment(ds.labels.size());
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            assignment[i] = static_cast<std::size_t>(ds.labels[i]);
        split = data::stratified_split(assignment, {1.0 - holdout, holdout}, tcfg.seed).split;
        n_splits = 2;
    }
    std::vector<train::LabeledBackbone> pool;
    for (std::size_t i = 0; i < ds.backbones.size(); ++i)
        if (split[i] == 0) pool.push_back({ds.backbones[i], ds.labels[i]});
    if (pool.empty()) throw Error("training split is empty");

    model::Model backbone = mode == train::TrainMode::finetune
                                ? model::model_from_checkpoint(
                                      model::load_checkpoint(get_str(kv, "init")))
                                : model::make_model(mcfg, tcfg.seed);
    train::ClassifierTrainer trainer(
        train::make_classifier(std::move(backbone), n_classes, pooling, tcfg.seed), tcfg);

    train::MetricsWriter metrics((out_dir / "metrics.jsonl").string());
    const std::uint64_t log_every = get_u64(kv, "log_every");
    IndexStream stream(pool.size(), tcfg.seed);
    while (trainer.step < tcfg.total_steps) {
        std::vector<train::LabeledBackbone> batch;
        batch.reserve(tcfg.batch_size);
        for (std::size_t i = 0; i < tcfg.batch_size; ++i) batch.push_back(pool[stream.next()]);
        const train::ClassStepReport rep = trainer.step_batch(batch);
        metrics.write(rep);
        if (log_every && rep.step % log_every == 0)
            std::cout << "step " << rep.step << " lr " << rep.lr << " acc " << rep.accuracy
                      << "\n";
    }
    trainer.save((out_dir / "model.ckpt").string());

    std::ofstream ef(out_dir / "eval.jsonl", std::ios::binary);
    if (!ef) throw Error("cannot write eval report");
    for (std::size_t s = 1; s < n_splits; ++s) {
        std::vector<int> truth, pred;
        for (std::size_t i = 0; i < ds.backbones.size(); ++i) {
            if (split[i] != s) continue;
            truth.push_back(ds.labels[i]);
            pred.push_back(static_cast<int>(train::predict_class(trainer.clf, ds.backbones[i])));
        }
        if (truth.empty()) continue;
        const auto m = eval::classification_metrics(truth, pred, n_classes);
        const json j{{"split", data::split_name(s)},
                     {"samples", truth.size()},
                     {"accuracy", m.accuracy},
                     {"macro_f1", m.macro_f1},
                     {"macro_f1_full", m.macro_f1_full}};
        ef << j.dump() << "\n";
        std::cout << j.dump() << "\n";
    }
    std::cout << name << " finished: " << tcfg.total_steps << " steps, " << pool.size()
              << " training samples\n";
    return 0;
}

int cmd_embed(KV kv) {
    if (!has(kv, "out")) throw ConfigError("embed needs --out");
    if (!has(kv, "model")) throw ConfigError("embed needs 'model', a checkpoint path");
    const train::Pooling pooling = pooling_from(get_str(kv, "pooling"));
    write_resolved_config("embed", kv);

    const Dataset ds = load_dataset(kv, false);
    const model::Model m = model::model_from_checkpoint(model::load_checkpoint(get_str(kv, "model")));
    const eval::EmbeddingMatrix emb = eval::embed_all(ds.backbones, m, pooling, workers_from_env());
    const fs::path out_path = fs::path(get_str(kv, "out")) / "embeddings.bin";
    eval::save_embeddings(out_path.string(), emb);
    std::cout << "embedded " << emb.vectors.rows() << " samples x " << emb.vectors.cols()
              << " dims -> " << out_path.string() << "\n";
    return 0;
}

int cmd_probe(KV kv) {
    if (!has(kv, "out")) throw ConfigError("probe needs --out");
    if (!has(kv, "model")) throw ConfigError("probe needs 'model', a checkpoint path");
    const train::Pooling pooling = pooling_from(get_str(kv, "pooling"));
    const std::vector<double> grid =
        has(kv, "lambdas") ? get_double_list(kv, "lambdas") : eval::default_probe_grid();
    write_resolved_config("probe", kv);

    const Dataset ds = load_dataset(kv, true);
    std::size_t n_splits = 0;
    const std::vector<std::size_t> split = resolve_split(kv, ds, n_splits);
    if (n_splits < 2) throw SplitError("probe needs at least train and validation splits");
    const std::size_t test_split = n_splits - 1;

    const model::Model m = model::model_from_checkpoint(model::load_checkpoint(get_str(kv, "model")));
    const eval::EmbeddingMatrix emb =
        eval::embed_all(ds.backbones, m, pooling, workers_from_env());
    const std::size_t d = emb.vectors.cols();

    const auto take = [&](std::size_t which, Tensor& x, std::vector<int>& y) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == which) rows.push_back(i);
        x = Tensor({rows.size(), d});
        y.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t j = 0; j < d; ++j) x.at(r, j) = emb.vectors.at(rows[r], j);
            y[r] = ds.labels[rows[r]];
        }
    };
    Tensor train_x, val_x, test_x;
    std::vector<int> train_y, val_y, test_y;
    take(0, train_x, train_y);
    take(1, val_x, val_y);
    take(test_split, test_x, test_y);
    if (test_y.empty()) throw SplitError("probe: empty test split");

    const eval::LinearProbe probe =
        eval::fit_linear_probe(train_x, train_y, val_x, val_y, grid);
    const std::vector<int> pred = eval::probe_predict(probe, test_x);
    const auto metrics = eval::classification_metrics(test_y, pred, ds.class_names.size());

    const json j{{"lambda", probe.lambda},
                 {"val_accuracy", probe.val_accuracy},
                 {"test_split", data::split_name(test_split)},
                 {"test_samples", test_y.size()},
                 {"test_accuracy", metrics.accuracy},
                 {"test_macro_f1", metrics.macro_f1},
                 {"test_macro_f1_full", metrics.macro_f1_full},
                 {"classes", ds.class_names.size()}};
    std::ofstream pf(fs::path(get_str(kv, "out")) / "probe.json", std::ios::binary);
    if (!pf) throw Error("cannot write probe report");
    pf << j.dump() << "\n";
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_reconstruct(KV kv) {
    if (!has(kv, "out")) throw ConfigError("reconstruct needs --out");
    if (!has(kv, "model")) throw ConfigError("reconstruct needs 'model', a checkpoint path");
    const std::vector<double> ratios = get_double_list(kv, "mask_ratios");
    const masking::Strategy strategy = strategy_from(get_str(kv, "mask_strategy"));
    const std::uint64_t seed = get_u64(kv, "seed");
    write_resolved_config("reconstruct", kv);

    const Dataset ds = load_dataset(kv, false);
    const model::Model m = model::model_from_checkpoint(model::load_checkpoint(get_str(kv, "model")));
    const fs::path out_dir = get_str(kv, "out");

    std::ofstream rf(out_dir / "reconstructions.jsonl", std::ios::binary);
    if (!rf) throw Error("cannot write reconstruction records");
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        double sum_rmsd = 0.0;
        for (std::size_t i = 0; i < ds.backbones.size(); ++i) {
            const io::ProteinBackbone& truth = ds.backbones[i];
            const auto plan = masking::sample_mask(
                truth.size(), ratios[ri], strategy,
                Rng::mix(seed, static_cast<std::uint64_t>(i * ratios.size() + ri)));
            const auto enc = model::encode(truth, plan, m);
            const auto dec = model::decode(enc.tokens, plan, m);
            const Tensor& coords = dec.coords.value();

            std::vector<geom::Vec3> pred_atoms, true_atoms;
            pred_atoms.reserve(3 * truth.size());
            true_atoms.reserve(3 * truth.size());
            for (std::size_t r = 0; r < truth.size(); ++r) {
                pred_atoms.push_back({coords.at(r, 0), coords.at(r, 1), coords.at(r, 2)});
                pred_atoms.push_back({coords.at(r, 3), coords.at(r, 4), coords.at(r, 5)});
                pred_atoms.push_back({coords.at(r, 6), coords.at(r, 7), coords.at(r, 8)});
                true_atoms.push_back(truth.residues[r].n);
                true_atoms.push_back(truth.residues[r].ca);
                true_atoms.push_back(truth.residues[r].c);
            }
            const double rmsd = geom::kabsch_rmsd(pred_atoms, true_atoms);
            sum_rmsd += rmsd;

            // write the prediction superposed onto the truth, mask flag in
            // the b-factor column (0 visible, 1 masked)
            const auto aligned = geom::kabsch_superpose(pred_atoms, true_atoms);
            io::ProteinBackbone out_b = truth;
            for (std::size_t r = 0; r < truth.size(); ++r) {
                out_b.residues[r].n = aligned[3 * r];
                out_b.residues[r].ca = aligned[3 * r + 1];
                out_b.residues[r].c = aligned[3 * r + 2];
            }
            std::vector<double> flags(truth.size(), 0.0);
            for (std::size_t idx : plan.masked) flags[idx] = 1.0;

            const std::string file =
                sanitize_id(truth.id) + "_r" + format_double(ratios[ri]) + ".pdb";
            std::ofstream pf(out_dir / file, std::ios::binary);
            if (!pf) throw Error("cannot write " + file);
            pf << io::write_pdb(out_b, &flags);

            const json j{{"id", truth.id}, {"ratio", ratios[ri]}, {"rmsd", rmsd}, {"file", file}};
            rf << j.dump() << "\n";
        }
        std::cout << "ratio " << ratios[ri] << ": mean rmsd "
                  << sum_rmsd / static_cast<double>(ds.backbones.size()) << " over "
                  << ds.backbones.size() << " structures\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// wiring

const std::set<std::string> kDataKeys = {"data",   "synthetic", "synthetic_length",
                                         "synthetic_noise", "plddt_min", "limit"};
const std::set<std::string> kModelKeys = {
    "model.preset",       "model.encoder_depth", "model.geometric_blocks",
    "model.hidden_dim",   "model.attention_heads", "model.decoder_depth",
    "model.decoder_dim",  "model.decoder_heads", "model.pair_dim", "model.max_length"};
const std::set<std::string> kTrainKeys = {
    "train.base_lr",     "train.weight_decay", "train.beta1",       "train.beta2",
    "train.adam_eps",    "train.batch_size",   "train.warmup_steps", "train.total_steps",
    "train.layer_decay", "train.noise_std",    "train.mask_ratio",  "train.mask_strategy"};

struct CommandDef {
    KV defaults;
    std::set<std::string> allowed;
};

CommandDef command_def(const std::string& cmd) {
    CommandDef def;
    def.defaults = {{"seed", "0"}};
    def.allowed = {"seed", "out"};
    const auto allow = [&](const std::set<std::string>& keys) {
        def.allowed.insert(keys.begin(), keys.end());
    };
    const auto with_default = [&](const char* key, const char* value) {
        def.defaults[key] = value;
        def.allowed.insert(key);
    };
    if (cmd == "prepare-data") {
        with_default("ratios", "0.8,0.1,0.1");
        with_default("plddt_min", "0");
        def.allowed.insert({"manifest", "cutoff"});
        return def;
    }
    // data-consuming commands
    allow(kDataKeys);
    with_default("synthetic_length", "32");
    with_default("synthetic_noise", "0.1");
    with_default("plddt_min", "0");
    with_default("limit", "0");
    if (cmd == "pretrain" || cmd == "scratch" || cmd == "finetune") {
        allow(kTrainKeys);
        with_default("log_every", "100");
        if (cmd == "pretrain") {
            allow(kModelKeys);
            with_default("model.preset", "miae-s");
            with_default("checkpoint_every", "0");
            def.allowed.insert("resume");
        } else {
            with_default("pooling", "cls");
            with_default("holdout", "0");
            def.allowed.insert("split");
            if (cmd == "scratch") {
                allow(kModelKeys);
                with_default("model.preset", "miae-s");
            } else {
                def.allowed.insert("init");
            }
        }
        return def;
    }
    if (cmd == "embed") {
        with_default("pooling", "mean");
        def.allowed.insert("model");
        return def;
    }
    if (cmd == "probe") {
        with_default("pooling", "mean");
        with_default("ratios", "0.8,0.1,0.1");
        def.allowed.insert({"model", "labels", "split", "lambdas"});
        return def;
    }
    if (cmd == "reconstruct") {
        with_default("mask_ratios", "0.9");
        with_default("mask_strategy", "random");
        def.allowed.insert("model");
        return def;
    }
    throw ConfigError("unknown command " + cmd);
}

int dispatch(const std::string& cmd, const KV& kv) {
    if (cmd == "prepare-data") return cmd_prepare_data(kv);
    if (cmd == "pretrain") return cmd_pretrain(kv);
    if (cmd == "scratch") return cmd_supervised(kv, train::TrainMode::scratch);
    if (cmd == "finetune") return cmd_supervised(kv, train::TrainMode::finetune);
    if (cmd == "embed") return cmd_embed(kv);
    if (cmd == "probe") return cmd_probe(kv);
    if (cmd == "reconstruct") return cmd_reconstruct(kv);
    throw ConfigError("unknown command " + cmd);
}

int run(const std::string& cmd, const std::string& config_path,
        const std::vector<std::string>& flag_overrides,
        const std::vector<std::string>& extras) {
    CommandDef def = command_def(cmd);
    KV kv = def.defaults;
    if (!config_path.empty()) {
        const KV file_kv = load_config_file(config_path);
        for (const auto& [key, value] : file_kv) kv[key] = value;
    }
    for (const auto& token : extras) apply_override(kv, token);
    for (const auto& token : flag_overrides) apply_override(kv, token);
    check_allowed(kv, def.allowed, cmd);
    return dispatch(cmd, kv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked invariant autoencoder toolkit"};
    app.set_version_flag("--version", std::string("miae ") + kToolVersion);
    app.require_subcommand(1);

    struct SubArgs {
        std::string config;
        std::string out;
        std::string seed;
        std::string manifest;
        std::string cutoff;
        std::string ratios;
        CLI::App* sub = nullptr;
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"prepare-data", "build label map and stratified split from a sample manifest"},
        {"pretrain", "masked-autoencoder pretraining"},
        {"scratch", "supervised training from random initialization"},
        {"finetune", "supervised training from a pretrained checkpoint"},
        {"embed", "export frozen-encoder embeddings"},
        {"probe", "linear probe on frozen embeddings"},
        {"reconstruct", "export reconstructed backbones and rmsd records"},
    };
    std::map<std::string, SubArgs> args;
    for (const auto& [name, help] : commands) {
        SubArgs& a = args[name];
        a.sub = app.add_subcommand(name, help);
        a.sub->add_option("--config", a.config, "key=value config file");
        a.sub->add_option("--out", a.out, "output directory");
        a.sub->add_option("--seed", a.seed, "base random seed");
        if (name == "prepare-data") {
            a.sub->add_option("--manifest", a.manifest, "sample table (id code plddt path)");
            a.sub->add_option("--cutoff", a.cutoff, "minimum class size (required, no default)");
            a.sub->add_option("--ratios", a.ratios, "split ratios, e.g. 0.8,0.1,0.1");
        }
        a.sub->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const SubArgs* chosen = nullptr;
    std::string cmd;
    for (auto& [name, a] : args)
        if (a.sub->parsed()) {
            chosen = &a;
            cmd = name;
        }
    if (!chosen) {
        std::cerr << "error: no command given\n";
        return 1;
    }

    std::vector<std::string> flag_overrides;
    if (!chosen->out.empty()) flag_overrides.push_back("--out=" + chosen->out);
    if (!chosen->seed.empty()) flag_overrides.push_back("--seed=" + chosen->seed);
    if (!chosen->manifest.empty()) flag_overrides.push_back("--manifest=" + chosen->manifest);
    if (!chosen->cutoff.empty()) flag_overrides.push_back("--cutoff=" + chosen->cutoff);
    if (!chosen->ratios.empty()) flag_overrides.push_back("--ratios=" + chosen->ratios);

    try {
        return run(cmd, chosen->config, flag_overrides, chosen->sub->remaining());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidMaskError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const StepError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }
}
