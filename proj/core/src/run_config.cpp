#include "fewshot/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "json_util.hpp"

namespace fewshot {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& prefix,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config field `" + prefix + key + "`");
}

template <typename T>
void read_field(const json& obj, const std::string& prefix, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field `" + prefix + key + "` has the wrong type");
    }
}

} // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["format_version"] = 1;
    j["manifest"] = cfg.manifest.string();
    j["top_k"] = cfg.top_k;
    j["split"] = {{"ratios", cfg.split_ratios}, {"seed", cfg.split_seed}};
    j["augment"] = {{"hflip_prob", cfg.augment.hflip_prob},
                    {"max_rotation_deg", cfg.augment.max_rotation_deg},
                    {"brightness_jitter", cfg.augment.brightness_jitter},
                    {"contrast_jitter", cfg.augment.contrast_jitter},
                    {"saturation_jitter", cfg.augment.saturation_jitter},
                    {"gamma_range", {cfg.augment.gamma_range.first, cfg.augment.gamma_range.second}},
                    {"apply_clahe", cfg.augment.apply_clahe},
                    {"clahe",
                     {{"tiles_x", cfg.augment.clahe.tiles_x},
                      {"tiles_y", cfg.augment.clahe.tiles_y},
                      {"clip_limit", cfg.augment.clahe.clip_limit}}}};
    j["episode"] = {{"n_way", cfg.episode.n_way},
                    {"k_shot", cfg.episode.k_shot},
                    {"n_query", cfg.episode.n_query},
                    {"min_class_size", cfg.episode.min_class_size}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"episodes_per_epoch", cfg.train.episodes_per_epoch},
                  {"val_episodes", cfg.train.val_episodes},
                  {"lr0", cfg.train.lr0},
                  {"decay_factor", cfg.train.decay_factor},
                  {"decay_every", cfg.train.decay_every},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"epsilon", cfg.train.epsilon},
                  {"grad_clip", cfg.train.grad_clip},
                  {"resample_val", cfg.train.resample_val},
                  {"seed", cfg.train.seed}};
    j["encoder"] = {{"variant", to_string(cfg.encoder.variant)},
                    {"input", {cfg.encoder.input_w, cfg.encoder.input_h, cfg.encoder.input_c}},
                    {"hidden", cfg.encoder.hidden_sizes},
                    {"embed_dim", cfg.encoder.embed_dim},
                    {"dropout_prob", cfg.encoder.dropout_prob},
                    {"init_seed", cfg.encoder.init_seed}};
    j["metric"] = to_string(cfg.metric);
    j["temperature"] = cfg.temperature;
    j["out_dir"] = cfg.out_dir.string();
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    reject_unknown(j, "", {"format_version", "manifest", "top_k", "split", "augment", "episode",
                           "train", "encoder", "metric", "temperature", "out_dir"});

    RunConfig cfg;
    int version = 1;
    read_field(j, "", "format_version", version);
    if (version != 1) throw ConfigError("unsupported config format_version");

    std::string manifest, out_dir = cfg.out_dir.string();
    read_field(j, "", "manifest", manifest);
    cfg.manifest = manifest;
    read_field(j, "", "top_k", cfg.top_k);

    if (j.contains("split")) {
        const auto& s = j.at("split");
        reject_unknown(s, "split.", {"ratios", "seed"});
        read_field(s, "split.", "ratios", cfg.split_ratios);
        read_field(s, "split.", "seed", cfg.split_seed);
    }
    if (j.contains("augment")) {
        const auto& a = j.at("augment");
        reject_unknown(a, "augment.",
                       {"hflip_prob", "max_rotation_deg", "brightness_jitter", "contrast_jitter",
                        "saturation_jitter", "gamma_range", "apply_clahe", "clahe"});
        read_field(a, "augment.", "hflip_prob", cfg.augment.hflip_prob);
        read_field(a, "augment.", "max_rotation_deg", cfg.augment.max_rotation_deg);
        read_field(a, "augment.", "brightness_jitter", cfg.augment.brightness_jitter);
        read_field(a, "augment.", "contrast_jitter", cfg.augment.contrast_jitter);
        read_field(a, "augment.", "saturation_jitter", cfg.augment.saturation_jitter);
        if (a.contains("gamma_range")) {
            std::array<double, 2> g{};
            read_field(a, "augment.", "gamma_range", g);
            cfg.augment.gamma_range = {g[0], g[1]};
        }
        read_field(a, "augment.", "apply_clahe", cfg.augment.apply_clahe);
        if (a.contains("clahe")) {
            const auto& c = a.at("clahe");
            reject_unknown(c, "augment.clahe.", {"tiles_x", "tiles_y", "clip_limit"});
            read_field(c, "augment.clahe.", "tiles_x", cfg.augment.clahe.tiles_x);
            read_field(c, "augment.clahe.", "tiles_y", cfg.augment.clahe.tiles_y);
            read_field(c, "augment.clahe.", "clip_limit", cfg.augment.clahe.clip_limit);
        }
    }
    if (j.contains("episode")) {
        const auto& e = j.at("episode");
        reject_unknown(e, "episode.", {"n_way", "k_shot", "n_query", "min_class_size"});
        read_field(e, "episode.", "n_way", cfg.episode.n_way);
        read_field(e, "episode.", "k_shot", cfg.episode.k_shot);
        read_field(e, "episode.", "n_query", cfg.episode.n_query);
        read_field(e, "episode.", "min_class_size", cfg.episode.min_class_size);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, "train.",
                       {"epochs", "episodes_per_epoch", "val_episodes", "lr0", "decay_factor",
                        "decay_every", "beta1", "beta2", "epsilon", "grad_clip", "resample_val",
                        "seed"});
        read_field(t, "train.", "epochs", cfg.train.epochs);
        read_field(t, "train.", "episodes_per_epoch", cfg.train.episodes_per_epoch);
        read_field(t, "train.", "val_episodes", cfg.train.val_episodes);
        read_field(t, "train.", "lr0", cfg.train.lr0);
        read_field(t, "train.", "decay_factor", cfg.train.decay_factor);
        read_field(t, "train.", "decay_every", cfg.train.decay_every);
        read_field(t, "train.", "beta1", cfg.train.beta1);
        read_field(t, "train.", "beta2", cfg.train.beta2);
        read_field(t, "train.", "epsilon", cfg.train.epsilon);
        read_field(t, "train.", "grad_clip", cfg.train.grad_clip);
        read_field(t, "train.", "resample_val", cfg.train.resample_val);
        read_field(t, "train.", "seed", cfg.train.seed);
    }
    if (j.contains("encoder")) {
        const auto& e = j.at("encoder");
        reject_unknown(e, "encoder.",
                       {"variant", "input", "hidden", "embed_dim", "dropout_prob", "init_seed"});
        if (e.contains("variant")) {
            std::string v;
            read_field(e, "encoder.", "variant", v);
            try {
                cfg.encoder.variant = encoder_variant_from_string(v);
            } catch (const ConfigError&) {
                throw ConfigError("config field `encoder.variant` must be mlp or random_projection");
            }
        }
        if (e.contains("input")) {
            std::array<int, 3> in{};
            read_field(e, "encoder.", "input", in);
            cfg.encoder.input_w = in[0];
            cfg.encoder.input_h = in[1];
            cfg.encoder.input_c = in[2];
        }
        read_field(e, "encoder.", "hidden", cfg.encoder.hidden_sizes);
        read_field(e, "encoder.", "embed_dim", cfg.encoder.embed_dim);
        read_field(e, "encoder.", "dropout_prob", cfg.encoder.dropout_prob);
        read_field(e, "encoder.", "init_seed", cfg.encoder.init_seed);
    }
    if (j.contains("metric")) {
        std::string m;
        read_field(j, "", "metric", m);
        try {
            cfg.metric = metric_from_string(m);
        } catch (const ConfigError&) {
            throw ConfigError("config field `metric` must be cosine or euclidean");
        }
    }
    read_field(j, "", "temperature", cfg.temperature);
    read_field(j, "", "out_dir", out_dir);
    cfg.out_dir = out_dir;

    cfg.train.spec = cfg.episode;
    validate_run_config(cfg);
    return cfg;
}

void validate_run_config(const RunConfig& cfg) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(cfg.top_k >= 1, "field `top_k` must be positive");
    double rsum = cfg.split_ratios[0] + cfg.split_ratios[1] + cfg.split_ratios[2];
    require(std::abs(rsum - 1.0) <= 1e-9, "field `split.ratios` must sum to 1");
    for (double r : cfg.split_ratios)
        require(r >= 0.0, "field `split.ratios` entries must be non-negative");

    require(cfg.augment.hflip_prob >= 0.0 && cfg.augment.hflip_prob <= 1.0,
            "field `augment.hflip_prob` must be in [0,1]");
    require(cfg.augment.max_rotation_deg >= 0.0,
            "field `augment.max_rotation_deg` must be >= 0");
    for (double v : {cfg.augment.brightness_jitter, cfg.augment.contrast_jitter,
                     cfg.augment.saturation_jitter})
        require(v >= 0.0 && v < 1.0, "field `augment.*_jitter` must be in [0,1)");
    require(cfg.augment.gamma_range.first > 0.0 &&
                cfg.augment.gamma_range.first <= cfg.augment.gamma_range.second,
            "field `augment.gamma_range` must satisfy 0 < lo <= hi");
    require(cfg.augment.clahe.tiles_x >= 1 && cfg.augment.clahe.tiles_y >= 1,
            "field `augment.clahe.tiles_*` must be >= 1");
    require(cfg.augment.clahe.clip_limit >= 1.0,
            "field `augment.clahe.clip_limit` must be >= 1");

    require(cfg.episode.n_way >= 1, "field `episode.n_way` must be positive");
    require(cfg.episode.k_shot >= 1, "field `episode.k_shot` must be positive");
    require(cfg.episode.n_query >= 1, "field `episode.n_query` must be positive");
    require(cfg.episode.min_class_size >= 2, "field `episode.min_class_size` must be >= 2");

    require(cfg.train.epochs >= 0, "field `train.epochs` must be >= 0");
    require(cfg.train.episodes_per_epoch >= 1,
            "field `train.episodes_per_epoch` must be positive");
    require(cfg.train.val_episodes >= 1, "field `train.val_episodes` must be positive");
    require(cfg.train.lr0 > 0.0, "field `train.lr0` must be positive");
    require(cfg.train.decay_factor > 0.0 && cfg.train.decay_factor <= 1.0,
            "field `train.decay_factor` must be in (0,1]");
    require(cfg.train.decay_every >= 1, "field `train.decay_every` must be positive");
    require(cfg.train.beta1 >= 0.0 && cfg.train.beta1 < 1.0,
            "field `train.beta1` must be in [0,1)");
    require(cfg.train.beta2 >= 0.0 && cfg.train.beta2 < 1.0,
            "field `train.beta2` must be in [0,1)");
    require(cfg.train.epsilon > 0.0, "field `train.epsilon` must be positive");
    require(cfg.train.grad_clip >= 0.0, "field `train.grad_clip` must be >= 0");

    require(cfg.encoder.input_w >= 1 && cfg.encoder.input_h >= 1,
            "field `encoder.input` dims must be positive");
    require(cfg.encoder.input_c == 1 || cfg.encoder.input_c == 3,
            "field `encoder.input` channels must be 1 or 3");
    for (int hs : cfg.encoder.hidden_sizes)
        require(hs >= 1, "field `encoder.hidden` entries must be positive");
    require(cfg.encoder.embed_dim >= 1, "field `encoder.embed_dim` must be positive");
    require(cfg.encoder.dropout_prob >= 0.0 && cfg.encoder.dropout_prob < 1.0,
            "field `encoder.dropout_prob` must be in [0,1)");

    require(cfg.temperature > 0.0, "field `temperature` must be positive");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
    write_file_atomic(path, run_config_to_json(cfg));
}

} // namespace fewshot
