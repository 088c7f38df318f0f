#pragma once

#include "fewshot/image.hpp"

namespace fewshot {

/// Bilinear resize. Source coordinates are half-pixel centered:
///   src_x = (dst_x + 0.5) * src_w / dst_w - 0.5
/// and edge-clamped, so a same-size resize is byte-identical to the input.
/// Output samples are rounded to nearest. Throws ConfigError on a zero
/// target dimension, DataError on an empty input.
RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h);

/// Samples divided by 255 exactly.
ImageTensor normalize(const RasterImage& img);

/// Inverse of normalize on 8-bit data: round(v * 255), clamped to [0,255].
RasterImage denormalize(const ImageTensor& t);

/// Mirrors columns: out(x) = in(width-1-x).
RasterImage flip_horizontal(const RasterImage& img);

/// Rotates by `degrees` (counterclockwise) about the image center with
/// bilinear resampling; pixels pulled from outside the source are black.
RasterImage rotate_bilinear(const RasterImage& img, double degrees);

/// BT.601 full-range luma of one pixel.
inline double luma601(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

} // namespace fewshot
