#include "fewshot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ClassTexture {
    double orientation; // radians
    double frequency;   // cycles across the image
    double color[3];    // per-channel stripe weight in [0.15, 1]
};

ClassTexture class_texture(const SyntheticConfig& cfg, int class_idx) {
    ClassTexture t;
    t.orientation = class_idx * (kTwoPi / 2.0) / cfg.num_classes;
    t.frequency = (class_idx % 2 == 0) ? 3.0 : 6.5;
    for (int ch = 0; ch < 3; ++ch) {
        double hue = kTwoPi * class_idx / cfg.num_classes - ch * (kTwoPi / 3.0);
        t.color[ch] = 0.575 + 0.425 * std::cos(hue);
    }
    return t;
}

// Distractor stripes live between the class families: offset orientations,
// mid-band frequencies, shifted hues. They collide with each other across
// images (so raw-pixel similarity is noisy) without occupying any class's
// own stripe family.
ClassTexture distractor_texture(const SyntheticConfig& cfg, int slot) {
    ClassTexture t;
    t.orientation = (slot + 0.5) * (kTwoPi / 2.0) / cfg.num_classes;
    t.frequency = (slot % 2 == 0) ? 4.3 : 8.1;
    for (int ch = 0; ch < 3; ++ch) {
        double hue = kTwoPi * (slot + 0.5) / cfg.num_classes - ch * (kTwoPi / 3.0);
        t.color[ch] = 0.575 + 0.425 * std::cos(hue);
    }
    return t;
}

} // namespace

std::vector<std::string> synthetic_class_names(int num_classes) {
    std::vector<std::string> names;
    for (int k = 0; k < num_classes; ++k) {
        std::ostringstream ss;
        ss << "tex" << (k < 10 ? "0" : "") << k;
        names.push_back(ss.str());
    }
    return names;
}

RasterImage synthetic_image(const SyntheticConfig& cfg, int class_idx, uint64_t instance_seed) {
    if (class_idx < 0 || class_idx >= cfg.num_classes)
        throw ConfigError("synthetic_image: class index out of range");

    Rng rng(instance_seed);

    struct Wave {
        double cs, sn, freq, phase;
        const double* color;
    };
    std::vector<ClassTexture> textures;
    std::vector<Wave> waves;
    textures.reserve(1 + cfg.distractor_waves);

    auto add_wave = [&](int slot, bool distractor) {
        textures.push_back(distractor ? distractor_texture(cfg, slot)
                                      : class_texture(cfg, slot));
        const ClassTexture& tex = textures.back();
        Wave w;
        w.phase = rng.uniform(0.0, kTwoPi);
        const double orient = tex.orientation + rng.uniform(-0.035, 0.035);
        w.cs = std::cos(orient);
        w.sn = std::sin(orient);
        w.freq = tex.frequency * rng.uniform(0.98, 1.02);
        w.color = tex.color;
        waves.push_back(w);
    };

    add_wave(class_idx, false);
    for (int d = 0; d < cfg.distractor_waves; ++d)
        add_wave(static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.num_classes))), true);

    const double per_wave = cfg.amplitude / static_cast<double>(waves.size());
    const int size = cfg.image_size;
    RasterImage img(size, size, 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) / size;
            const double v = static_cast<double>(y) / size;
            double acc[3] = {0.0, 0.0, 0.0};
            for (const Wave& w : waves) {
                const double s = std::sin(kTwoPi * w.freq * (u * w.cs + v * w.sn) + w.phase);
                for (int ch = 0; ch < 3; ++ch) acc[ch] += w.color[ch] * s;
            }
            for (int ch = 0; ch < 3; ++ch) {
                double val = 0.5 + per_wave * acc[ch] + rng.next_gaussian() * cfg.noise_sigma;
                img.at(x, y, ch) = static_cast<uint8_t>(
                    std::clamp(std::lround(val * 255.0), 0L, 255L));
            }
        }
    }
    return img;
}

SyntheticDataset make_synthetic_dataset(const SyntheticConfig& cfg) {
    if (cfg.num_classes < 1 || cfg.majority_classes < 0 ||
        cfg.majority_classes > cfg.num_classes)
        throw ConfigError("synthetic config: bad class layout");
    if (cfg.majority_count < 1 || cfg.minority_count < 1)
        throw ConfigError("synthetic config: counts must be positive");

    SyntheticDataset ds;
    auto names = synthetic_class_names(cfg.num_classes);
    for (const auto& n : names) ds.manifest.class_counts[n] = 0;

    for (int k = 0; k < cfg.num_classes; ++k) {
        const int count = k < cfg.majority_classes ? cfg.majority_count : cfg.minority_count;
        const uint64_t class_seed = derive_seed(cfg.seed, static_cast<uint64_t>(k));
        for (int i = 0; i < count; ++i) {
            std::ostringstream id;
            id << names[k] << "_" << i;
            ImageRecord rec;
            rec.id = id.str();
            rec.path = "images/" + rec.id + ".png";
            rec.labels = {names[k]};
            ds.manifest.records.push_back(rec);
            ds.manifest.class_counts[names[k]] += 1;
            ds.images.put(rec.id,
                          synthetic_image(cfg, k, derive_seed(class_seed,
                                                              static_cast<uint64_t>(i))));
        }
    }
    return ds;
}

std::filesystem::path write_synthetic_dataset(const SyntheticConfig& cfg,
                                              const std::filesystem::path& out_dir) {
    SyntheticDataset ds = make_synthetic_dataset(cfg);
    std::filesystem::create_directories(out_dir / "images");

    for (const auto& rec : ds.manifest.records)
        save_png(ds.images.get(rec.id), out_dir / rec.path);

    auto names = synthetic_class_names(cfg.num_classes);
    std::ostringstream csv;
    csv << "ID,path";
    for (const auto& n : names) csv << "," << n;
    csv << "\n";
    for (const auto& rec : ds.manifest.records) {
        csv << rec.id << "," << rec.path;
        for (const auto& n : names) csv << "," << (rec.labels.count(n) ? 1 : 0);
        csv << "\n";
    }
    auto manifest_path = out_dir / "manifest.csv";
    write_file_atomic(manifest_path, csv.str());
    return manifest_path;
}

} // namespace fewshot
