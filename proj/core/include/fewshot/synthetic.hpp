#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fewshot/dataset.hpp"
#include "fewshot/image.hpp"
#include "fewshot/pipeline.hpp"

namespace fewshot {

/// Procedurally textured image classes: each class is a striped texture
/// with its own orientation, spatial frequency and color axis. The stripe
/// phase is uniform per image, so two images of one class are uncorrelated
/// pixel-to-pixel and every image shares the same mean color; class
/// identity is only recoverable from the texture itself. On top of its
/// class wave, every image carries `distractor_waves` additional waves
/// whose parameters are drawn from other classes' stripe families, which
/// keeps raw-pixel similarity uninformative about the class.
struct SyntheticConfig {
    int num_classes = 10;
    int majority_classes = 6;     // classes [0, majority_classes) are majority
    int majority_count = 300;
    int minority_count = 60;
    int image_size = 64;
    double amplitude = 0.4;       // total stripe contrast around the 0.5 mean
    double noise_sigma = 0.02;
    int distractor_waves = 3;
    uint64_t seed = 0;
};

std::vector<std::string> synthetic_class_names(int num_classes);

/// Renders one image of class `class_idx`; `instance_seed` drives the
/// phase, the small orientation/frequency jitter and the pixel noise.
RasterImage synthetic_image(const SyntheticConfig& cfg, int class_idx, uint64_t instance_seed);

/// In-memory dataset: manifest (ids, single-label annotations, counts) plus
/// a preloaded ImageStore. Record ids are "<class>_<index>".
struct SyntheticDataset {
    DatasetManifest manifest;
    ImageStore images;
};

SyntheticDataset make_synthetic_dataset(const SyntheticConfig& cfg);

/// Writes images/<id>.png and manifest.csv under out_dir, same content as
/// make_synthetic_dataset. Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const SyntheticConfig& cfg,
                                              const std::filesystem::path& out_dir);

} // namespace fewshot
