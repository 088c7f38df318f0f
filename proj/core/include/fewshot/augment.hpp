#pragma once

#include <cstdint>
#include <utility>

#include "fewshot/clahe.hpp"
#include "fewshot/image.hpp"

namespace fewshot {

struct AugSpec {
    double hflip_prob = 0.5;
    double max_rotation_deg = 15.0;
    double brightness_jitter = 0.2;
    double contrast_jitter = 0.2;
    double saturation_jitter = 0.2;
    std::pair<double, double> gamma_range{0.8, 1.25};
    bool apply_clahe = true;
    ClaheConfig clahe;

    bool operator==(const AugSpec&) const = default;
};

/// Stochastic augmentation of a 3-channel image, a pure function of
/// (img, spec, seed).
///
/// Parameters are drawn from Rng(seed) in a fixed order, one draw per
/// transform whether or not it ends up having an effect:
///   1. hflip: flip if u < hflip_prob
///   2. rotation: angle uniform in [-max_rotation_deg, +max_rotation_deg]
///   3. brightness: factor 1 + uniform(-j, j), multiplicative
///   4. contrast: factor 1 + uniform(-j, j), pivot = mean luma of the image
///      entering this step
///   5. saturation: factor 1 + uniform(-j, j), blends toward per-pixel luma
///   6. gamma: exponent uniform in [lo, hi] applied to samples/255
///   7. CLAHE with spec.clahe, if apply_clahe (no draw)
/// Each step rounds back to 8-bit and clamps.
RasterImage augment(const RasterImage& img, const AugSpec& spec, uint64_t seed);

} // namespace fewshot
