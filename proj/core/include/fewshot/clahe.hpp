#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fewshot/image.hpp"

namespace fewshot {

struct ClaheConfig {
    int tiles_x = 8;
    int tiles_y = 8;
    /// Clip threshold as a multiple of the uniform histogram level
    /// ceil(tile_pixels / 256). Must be >= 1.
    double clip_limit = 2.0;

    bool operator==(const ClaheConfig&) const = default;
};

/// Contrast limited adaptive histogram equalization.
///
/// Grayscale input is equalized directly. For 3-channel input the image is
/// converted to YCbCr (BT.601 full range), only the luma plane is equalized,
/// and the result is converted back with rounding and clamping; Cb/Cr pass
/// through untouched.
///
/// Per tile (the grid is tiles_x x tiles_y, tile t spanning columns
/// [floor(t*W/tiles_x), floor((t+1)*W/tiles_x)) and likewise for rows):
///   1. 256-bin histogram of the tile's luma values.
///   2. Clip each bin at floor(clip_limit * ceil(tile_pixels/256)), min 1.
///   3. Redistribute the clipped excess E in a single pass: every bin gains
///      floor(E/256), and bins 0..(E mod 256)-1 gain one more. Bins may end
///      above the clip threshold; there is no second clipping pass. Total
///      mass is conserved exactly.
///   4. Tile mapping: map[v] = round(255 * cdf[v]) over the redistributed
///      histogram.
/// Each output pixel bilinearly interpolates the mappings of the four tiles
/// whose centers surround it, clamping at the image border.
///
/// Throws DataError if the channel count is unsupported or the image is
/// smaller than the tile grid, ConfigError for invalid tile/clip values.
RasterImage clahe(const RasterImage& img, const ClaheConfig& cfg);

/// Steps 2-3 above, in isolation: clips `hist` at `clip_threshold` and
/// redistributes the excess. Bin sum is preserved exactly.
void clip_and_redistribute(std::array<uint32_t, 256>& hist, uint32_t clip_threshold);

/// Integer clip threshold for a tile: floor(clip_limit * ceil(pixels/256)),
/// at least 1.
uint32_t clahe_clip_threshold(double clip_limit, uint32_t tile_pixels);

/// Mapping from a (possibly clipped) histogram: round(255 * cdf[v]).
std::array<uint8_t, 256> equalization_map(const std::array<uint32_t, 256>& hist);

/// BT.601 full-range conversions used by the 3-channel path. Cb/Cr are kept
/// as real values between the two conversions; rgb_from_ycbcr rounds and
/// clamps to [0,255].
void ycbcr_from_rgb(double r, double g, double b, double& y, double& cb, double& cr);
void rgb_from_ycbcr(double y, double cb, double cr, uint8_t& r, uint8_t& g, uint8_t& b);

} // namespace fewshot
