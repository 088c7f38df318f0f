// fewshot: balanced few-shot episodic learning toolkit.
//
// Subcommands wire the core library into reproducible experiment runs:
//   prepare            manifest -> pool.json + splits.json
//   clahe              contrast-limited adaptive histogram equalization
//   train              episodic training from a run config
//   eval               episodic test evaluation + report rendering
//   sample-episodes    episode stream dump as JSON lines
//   import-embeddings  bring external encoder embeddings into eval
//   make-synthetic     bundled synthetic dataset generator
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fewshot/dataset.hpp"
#include "fewshot/error.hpp"
#include "fewshot/eval.hpp"
#include "fewshot/image_io.hpp"
#include "fewshot/run_config.hpp"
#include "fewshot/sampler.hpp"
#include "fewshot/synthetic.hpp"
#include "fewshot/trainer.hpp"

using namespace fewshot;

namespace {

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> out{};
    std::stringstream ss(text);
    std::string cell;
    int i = 0;
    while (std::getline(ss, cell, ',')) {
        if (i >= 3) throw ConfigError("--ratios expects three comma-separated fractions");
        try {
            out[i++] = std::stod(cell);
        } catch (const std::exception&) {
            throw ConfigError("--ratios: `" + cell + "` is not a number");
        }
    }
    if (i != 3) throw ConfigError("--ratios expects three comma-separated fractions");
    return out;
}

std::pair<int, int> parse_tiles(const std::string& text) {
    auto x = text.find('x');
    if (x == std::string::npos) throw ConfigError("--tiles expects WxH, e.g. 8x8");
    try {
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw ConfigError("--tiles expects WxH, e.g. 8x8");
    }
}

struct LoadedRun {
    RunConfig config;
    DatasetManifest manifest;
    ClassPool pool;
    SplitAssignment assignment;
};

LoadedRun load_run(const std::filesystem::path& config_path) {
    LoadedRun run;
    run.config = load_run_config(config_path);
    if (run.config.manifest.empty())
        throw ConfigError("config field `manifest` is required for this command");
    // manifest paths are relative to the config file's directory
    auto manifest_path = run.config.manifest.is_absolute()
                             ? run.config.manifest
                             : config_path.parent_path() / run.config.manifest;
    run.manifest = load_manifest(manifest_path);
    run.pool = select_top_k(run.manifest, run.config.top_k);
    run.assignment = split_stratified(run.pool, run.config.split_ratios, run.config.split_seed);
    return run;
}

ImagePipeline pipeline_of(const RunConfig& cfg) {
    ImagePipeline p;
    p.aug = cfg.augment;
    p.target_w = cfg.encoder.input_w;
    p.target_h = cfg.encoder.input_h;
    return p;
}

void print_pool_summary(const LoadedRun& run) {
    std::map<std::string, std::array<int, 3>> split_counts;
    for (const auto& cls : run.pool.classes) split_counts[cls] = {0, 0, 0};
    for (const auto& [cls, ids] : run.pool.eligible)
        for (const auto& id : ids) {
            auto it = run.assignment.split.find(id);
            if (it != run.assignment.split.end())
                split_counts[cls][static_cast<int>(it->second)] += 1;
        }

    std::printf("%-12s %9s %9s %7s %7s %7s\n", "class", "positives", "eligible", "train",
                "val", "test");
    for (const auto& cls : run.pool.classes) {
        auto count_it = run.manifest.class_counts.find(cls);
        const auto& sc = split_counts[cls];
        std::printf("%-12s %9d %9zu %7d %7d %7d\n", cls.c_str(),
                    count_it == run.manifest.class_counts.end() ? 0 : count_it->second,
                    run.pool.eligible.at(cls).size(), sc[0], sc[1], sc[2]);
    }
    if (run.pool.excluded_multi_positive > 0)
        std::printf("excluded %d record(s) with multiple selected labels\n",
                    run.pool.excluded_multi_positive);
}

int cmd_prepare(const std::string& manifest, int top_k, const std::string& ratios,
                uint64_t seed, const std::string& out_dir) {
    auto parsed_ratios = parse_ratios(ratios);
    DatasetManifest m = load_manifest(manifest);
    ClassPool pool = select_top_k(m, top_k);
    SplitAssignment assignment = split_stratified(pool, parsed_ratios, seed);

    std::filesystem::create_directories(out_dir);
    write_file_atomic(std::filesystem::path(out_dir) / "pool.json", pool_to_json(pool, m));
    write_file_atomic(std::filesystem::path(out_dir) / "splits.json",
                      split_to_json(assignment));

    LoadedRun run{RunConfig{}, std::move(m), std::move(pool), std::move(assignment)};
    print_pool_summary(run);
    std::printf("wrote %s/pool.json and %s/splits.json\n", out_dir.c_str(), out_dir.c_str());
    return 0;
}

int cmd_clahe(const std::string& in, const std::string& out, double clip,
              const std::string& tiles) {
    auto [tx, ty] = parse_tiles(tiles);
    RasterImage img = load_image(in);
    ClaheConfig cfg{tx, ty, clip};
    save_png(clahe(img, cfg), out);
    std::printf("wrote %s (%dx%d, %d channel(s), tiles %dx%d, clip %g)\n", out.c_str(),
                img.width, img.height, img.channels, tx, ty, clip);
    return 0;
}

int cmd_train(const std::string& config_path) {
    LoadedRun run = load_run(config_path);
    const auto& out_dir = run.config.out_dir;
    std::filesystem::create_directories(out_dir);

    save_run_config(run.config, out_dir / "config.json");
    write_file_atomic(out_dir / "pool.json", pool_to_json(run.pool, run.manifest));
    write_file_atomic(out_dir / "splits.json", split_to_json(run.assignment));

    ImageStore store = ImageStore::from_manifest(run.manifest);
    TrainData data;
    data.pool = &run.pool;
    data.assignment = &run.assignment;
    data.images = &store;
    data.pipeline = pipeline_of(run.config);
    data.encoder = run.config.encoder;
    data.metric = run.config.metric;
    data.temperature = run.config.temperature;

    TrainResult result = train(run.config.train, data, out_dir);
    std::printf("trained %d epoch(s); best val accuracy %.4f at epoch %d\n",
                static_cast<int>(result.log.epochs.size()), result.log.best_val_accuracy,
                result.log.best_epoch);
    std::printf("artifacts in %s: best.ckpt last.ckpt train_log.json\n",
                out_dir.string().c_str());
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, int episodes,
             uint64_t seed, const std::string& split_name, const std::string& embeddings,
             std::string out_dir) {
    LoadedRun run = load_run(config_path);
    Split split = split_from_string(split_name);
    PoolView view = make_pool_view(run.pool, run.assignment, split, run.config.episode);
    EpisodeStream stream{run.config.episode, seed, episodes};

    ImageStore store = ImageStore::from_manifest(run.manifest);
    std::optional<EncoderParams> params;
    std::optional<ExternalEmbeddingStore> external;
    std::unique_ptr<ItemEmbedder> embedder;

    if (!embeddings.empty()) {
        std::ifstream in(embeddings, std::ios::binary);
        if (!in) throw DataError("embedding store not found: " + embeddings);
        std::ostringstream ss;
        ss << in.rdbuf();
        external = ExternalEmbeddingStore::from_json(ss.str());
        embedder = std::make_unique<ExternalEmbeddingStore>(*external);
    } else {
        if (checkpoint.empty())
            throw ConfigError("either --checkpoint or --embeddings is required");
        params = load_checkpoint(checkpoint);
        if (params->embed_dim() != run.config.encoder.embed_dim)
            throw ConfigError("checkpoint embed_dim " + std::to_string(params->embed_dim()) +
                              " does not match config encoder.embed_dim " +
                              std::to_string(run.config.encoder.embed_dim));
        if (params->input_w != run.config.encoder.input_w ||
            params->input_h != run.config.encoder.input_h ||
            params->input_c != run.config.encoder.input_c)
            throw ConfigError("checkpoint input dims do not match config encoder.input");
        embedder = std::make_unique<EncoderEmbedder>(store, pipeline_of(run.config), *params);
    }

    EvalReport report =
        evaluate(*embedder, view, stream, run.config.metric, run.config.temperature);

    if (out_dir.empty()) out_dir = (run.config.out_dir / "report").string();
    render_report(report, out_dir);
    std::printf("episodes %d  accuracy %.4f  ci95 [%.4f, %.4f]  loss %.4f  macro-f1 %.4f\n",
                report.episode_count, report.mean_accuracy, report.ci95_lo, report.ci95_hi,
                report.mean_loss, report.macro_f1);
    std::printf("report in %s\n", out_dir.c_str());
    return 0;
}

int cmd_sample_episodes(const std::string& config_path, int count, uint64_t seed,
                        const std::string& split_name, const std::string& out_path) {
    LoadedRun run = load_run(config_path);
    Split split = split_from_string(split_name);
    PoolView view = make_pool_view(run.pool, run.assignment, split, run.config.episode);
    EpisodeStream stream{run.config.episode, seed, count};

    std::ostringstream lines;
    for (int i = 0; i < count; ++i)
        lines << episode_to_json_line(stream.episode(view, i)) << "\n";
    write_file_atomic(out_path, lines.str());
    std::printf("wrote %d episode(s) to %s\n", count, out_path.c_str());
    return 0;
}

int cmd_import_embeddings(const std::string& csv, const std::string& manifest_path,
                          const std::string& out_path) {
    auto store = ExternalEmbeddingStore::from_csv(csv);
    DatasetManifest manifest = load_manifest(manifest_path);

    std::set<std::string> known;
    for (const auto& rec : manifest.records) known.insert(rec.id);

    // every imported id must exist in the manifest
    std::vector<std::string> unknown;
    {
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::string id = line.substr(0, line.find(','));
            if (!known.count(id)) unknown.push_back(id);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (size_t i = 0; i < unknown.size() && i < 10; ++i)
            list += (i ? ", " : "") + unknown[i];
        if (unknown.size() > 10) list += ", ...";
        throw DataError("embeddings reference ids missing from the manifest: " + list);
    }

    write_file_atomic(out_path, store.to_json());
    std::printf("imported %zu embedding(s) of dimension %d into %s\n", store.size(),
                store.dim(), out_path.c_str());
    return 0;
}

int cmd_make_synthetic(const std::string& out_dir, uint64_t seed, int classes, int majority,
                       int majority_count, int minority_count, int size) {
    SyntheticConfig cfg;
    cfg.num_classes = classes;
    cfg.majority_classes = majority;
    cfg.majority_count = majority_count;
    cfg.minority_count = minority_count;
    cfg.image_size = size;
    cfg.seed = seed;
    auto manifest = write_synthetic_dataset(cfg, out_dir);
    std::printf("wrote synthetic dataset: %s\n", manifest.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"balanced few-shot episodic learning toolkit"};
    app.require_subcommand(1);

    // prepare
    std::string p_manifest, p_ratios = "0.7,0.1,0.2", p_out = ".";
    int p_top_k = 10;
    uint64_t p_seed = 0;
    auto* prepare = app.add_subcommand("prepare", "select top-k classes and write splits");
    prepare->add_option("--manifest", p_manifest, "CSV manifest path")->required();
    prepare->add_option("--top-k", p_top_k, "number of most frequent classes to keep")
        ->capture_default_str();
    prepare->add_option("--ratios", p_ratios, "train,val,test fractions")
        ->capture_default_str();
    prepare->add_option("--seed", p_seed, "split shuffle seed")->capture_default_str();
    prepare->add_option("--out", p_out, "output directory")->capture_default_str();

    // clahe
    std::string c_in, c_out, c_tiles = "8x8";
    double c_clip = 2.0;
    auto* clahe_cmd = app.add_subcommand("clahe", "enhance an image with CLAHE");
    clahe_cmd->add_option("--in", c_in, "input PNG or JPEG")->required();
    clahe_cmd->add_option("--out", c_out, "output PNG")->required();
    clahe_cmd->add_option("--clip", c_clip, "clip limit (multiple of the uniform level)")
        ->capture_default_str();
    clahe_cmd->add_option("--tiles", c_tiles, "tile grid, WxH")->capture_default_str();

    // train
    std::string t_config;
    auto* train_cmd = app.add_subcommand("train", "episodic training from a run config");
    train_cmd->add_option("--config", t_config, "run config JSON")->required();

    // eval
    std::string e_config, e_checkpoint, e_split = "test", e_embeddings, e_out;
    int e_episodes = 1000;
    uint64_t e_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "episodic evaluation and report rendering");
    eval_cmd->add_option("--config", e_config, "run config JSON")->required();
    eval_cmd->add_option("--checkpoint", e_checkpoint, "encoder checkpoint (.ckpt)");
    eval_cmd->add_option("--episodes", e_episodes, "number of test episodes")
        ->capture_default_str();
    eval_cmd->add_option("--seed", e_seed, "episode stream seed")->capture_default_str();
    eval_cmd->add_option("--split", e_split, "split to evaluate on")->capture_default_str();
    eval_cmd->add_option("--embeddings", e_embeddings,
                         "imported embedding store (bypasses the encoder)");
    eval_cmd->add_option("--out", e_out, "report directory (default <out_dir>/report)");

    // sample-episodes
    std::string s_config, s_split = "train", s_out = "episodes.jsonl";
    int s_count = 100;
    uint64_t s_seed = 0;
    auto* sample_cmd = app.add_subcommand("sample-episodes", "dump an episode stream as JSONL");
    sample_cmd->add_option("--config", s_config, "run config JSON")->required();
    sample_cmd->add_option("--count", s_count, "episodes to sample")->capture_default_str();
    sample_cmd->add_option("--seed", s_seed, "stream master seed")->capture_default_str();
    sample_cmd->add_option("--split", s_split, "split to draw from")->capture_default_str();
    sample_cmd->add_option("--out", s_out, "output JSONL path")->capture_default_str();

    // import-embeddings
    std::string i_csv, i_manifest, i_out = "embeddings.json";
    auto* import_cmd =
        app.add_subcommand("import-embeddings", "validate and store external embeddings");
    import_cmd->add_option("--csv", i_csv, "CSV with header id,e0,...,e{m-1}")->required();
    import_cmd->add_option("--manifest", i_manifest, "CSV manifest the ids must belong to")
        ->required();
    import_cmd->add_option("--out", i_out, "output store path")->capture_default_str();

    // make-synthetic
    std::string m_out;
    uint64_t m_seed = 0;
    int m_classes = 10, m_majority = 6, m_majority_count = 300, m_minority_count = 60,
        m_size = 64;
    auto* synth_cmd =
        app.add_subcommand("make-synthetic", "generate the bundled synthetic dataset");
    synth_cmd->add_option("--out", m_out, "output directory")->required();
    synth_cmd->add_option("--seed", m_seed, "generator seed")->capture_default_str();
    synth_cmd->add_option("--classes", m_classes, "number of classes")->capture_default_str();
    synth_cmd->add_option("--majority", m_majority, "number of majority classes")
        ->capture_default_str();
    synth_cmd->add_option("--majority-count", m_majority_count, "images per majority class")
        ->capture_default_str();
    synth_cmd->add_option("--minority-count", m_minority_count, "images per minority class")
        ->capture_default_str();
    synth_cmd->add_option("--size", m_size, "image side length in pixels")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(p_manifest, p_top_k, p_ratios, p_seed, p_out);
        if (clahe_cmd->parsed()) return cmd_clahe(c_in, c_out, c_clip, c_tiles);
        if (train_cmd->parsed()) return cmd_train(t_config);
        if (eval_cmd->parsed())
            return cmd_eval(e_config, e_checkpoint, e_episodes, e_seed, e_split, e_embeddings,
                            e_out);
        if (sample_cmd->parsed())
            return cmd_sample_episodes(s_config, s_count, s_seed, s_split, s_out);
        if (import_cmd->parsed()) return cmd_import_embeddings(i_csv, i_manifest, i_out);
        if (synth_cmd->parsed())
            return cmd_make_synthetic(m_out, m_seed, m_classes, m_majority, m_majority_count,
                                      m_minority_count, m_size);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
