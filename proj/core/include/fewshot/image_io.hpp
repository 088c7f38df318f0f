#pragma once

#include <filesystem>

#include "fewshot/image.hpp"

namespace fewshot {

/// Reads an 8-bit PNG or JPEG (decided by content, not extension) into a
/// RasterImage with 1 or 3 channels. Palette/alpha PNGs are expanded; alpha
/// is dropped. Throws DataError on missing or undecodable files.
RasterImage load_image(const std::filesystem::path& path);

/// Writes a PNG. Throws DataError on I/O failure. The write is atomic:
/// a temporary file in the same directory is renamed over the target.
void save_png(const RasterImage& img, const std::filesystem::path& path);

/// Atomically writes `contents` to `path` (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace fewshot
