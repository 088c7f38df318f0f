#include "fewshot/clahe.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fewshot/error.hpp"

namespace fewshot {

namespace {

inline uint8_t round_clamp_u8(double v) {
    long r = std::lround(v);
    return static_cast<uint8_t>(std::clamp(r, 0L, 255L));
}

// Boundary of tile t along an extent of `size` pixels cut into `tiles`
// strips: [edge(t), edge(t+1)).
inline int tile_edge(int t, int size, int tiles) {
    return static_cast<int>(static_cast<int64_t>(t) * size / tiles);
}

struct Axis {
    std::vector<int> lo;    // left/top tile index per pixel
    std::vector<int> hi;    // right/bottom tile index per pixel
    std::vector<double> frac;
};

// For every pixel coordinate, the two tile centers that bracket it and the
// interpolation fraction, clamped at the borders.
Axis build_axis(int size, int tiles) {
    std::vector<double> centers(tiles);
    for (int t = 0; t < tiles; ++t) {
        int a = tile_edge(t, size, tiles);
        int b = tile_edge(t + 1, size, tiles);
        centers[t] = (a + b - 1) / 2.0;
    }
    Axis ax;
    ax.lo.resize(size);
    ax.hi.resize(size);
    ax.frac.resize(size);
    int t = 0;
    for (int x = 0; x < size; ++x) {
        while (t + 1 < tiles && centers[t + 1] <= x) ++t;
        if (x <= centers[0]) {
            ax.lo[x] = ax.hi[x] = 0;
            ax.frac[x] = 0.0;
        } else if (x >= centers[tiles - 1]) {
            ax.lo[x] = ax.hi[x] = tiles - 1;
            ax.frac[x] = 0.0;
        } else {
            ax.lo[x] = t;
            ax.hi[x] = t + 1;
            ax.frac[x] = (x - centers[t]) / (centers[t + 1] - centers[t]);
        }
    }
    return ax;
}

// Full CLAHE on one 8-bit plane.
std::vector<uint8_t> equalize_plane(const uint8_t* values, int w, int h,
                                    const ClaheConfig& cfg) {
    const int tx = cfg.tiles_x;
    const int ty = cfg.tiles_y;

    // one mapping per tile
    std::vector<std::array<uint8_t, 256>> maps(static_cast<size_t>(tx) * ty);
    for (int j = 0; j < ty; ++j) {
        int y0 = tile_edge(j, h, ty), y1 = tile_edge(j + 1, h, ty);
        for (int i = 0; i < tx; ++i) {
            int x0 = tile_edge(i, w, tx), x1 = tile_edge(i + 1, w, tx);
            std::array<uint32_t, 256> hist{};
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    ++hist[values[static_cast<size_t>(y) * w + x]];
            uint32_t pixels = static_cast<uint32_t>((x1 - x0) * (y1 - y0));
            clip_and_redistribute(hist, clahe_clip_threshold(cfg.clip_limit, pixels));
            maps[static_cast<size_t>(j) * tx + i] = equalization_map(hist);
        }
    }

    Axis ax = build_axis(w, tx);
    Axis ay = build_axis(h, ty);

    std::vector<uint8_t> out(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const auto* top_row = &maps[static_cast<size_t>(ay.lo[y]) * tx];
        const auto* bot_row = &maps[static_cast<size_t>(ay.hi[y]) * tx];
        double fy = ay.frac[y];
        for (int x = 0; x < w; ++x) {
            uint8_t v = values[static_cast<size_t>(y) * w + x];
            double fx = ax.frac[x];
            double top = (1.0 - fx) * top_row[ax.lo[x]][v] + fx * top_row[ax.hi[x]][v];
            double bot = (1.0 - fx) * bot_row[ax.lo[x]][v] + fx * bot_row[ax.hi[x]][v];
            out[static_cast<size_t>(y) * w + x] = round_clamp_u8((1.0 - fy) * top + fy * bot);
        }
    }
    return out;
}

} // namespace

uint32_t clahe_clip_threshold(double clip_limit, uint32_t tile_pixels) {
    double uniform_level = std::ceil(tile_pixels / 256.0);
    double raw = std::floor(clip_limit * uniform_level);
    // a bin can never exceed the tile's pixel count
    raw = std::min(raw, static_cast<double>(tile_pixels));
    return static_cast<uint32_t>(std::max(raw, 1.0));
}

void clip_and_redistribute(std::array<uint32_t, 256>& hist, uint32_t clip_threshold) {
    uint64_t excess = 0;
    for (auto& bin : hist) {
        if (bin > clip_threshold) {
            excess += bin - clip_threshold;
            bin = clip_threshold;
        }
    }
    const uint32_t share = static_cast<uint32_t>(excess / 256);
    const uint32_t remainder = static_cast<uint32_t>(excess % 256);
    for (size_t i = 0; i < hist.size(); ++i) {
        hist[i] += share;
        if (i < remainder) ++hist[i];
    }
}

std::array<uint8_t, 256> equalization_map(const std::array<uint32_t, 256>& hist) {
    uint64_t total = 0;
    for (uint32_t b : hist) total += b;
    std::array<uint8_t, 256> map{};
    uint64_t cum = 0;
    for (size_t v = 0; v < hist.size(); ++v) {
        cum += hist[v];
        map[v] = round_clamp_u8(255.0 * static_cast<double>(cum) / static_cast<double>(total));
    }
    return map;
}

void ycbcr_from_rgb(double r, double g, double b, double& y, double& cb, double& cr) {
    y = 0.299 * r + 0.587 * g + 0.114 * b;
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
}

void rgb_from_ycbcr(double y, double cb, double cr, uint8_t& r, uint8_t& g, uint8_t& b) {
    r = round_clamp_u8(y + 1.402 * (cr - 128.0));
    g = round_clamp_u8(y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0));
    b = round_clamp_u8(y + 1.772 * (cb - 128.0));
}

RasterImage clahe(const RasterImage& img, const ClaheConfig& cfg) {
    if (cfg.tiles_x < 1 || cfg.tiles_y < 1)
        throw ConfigError("clahe: tile grid must be at least 1x1");
    if (cfg.clip_limit < 1.0)
        throw ConfigError("clahe: clip_limit must be >= 1.0");
    if (img.channels != 1 && img.channels != 3)
        throw DataError("clahe: unsupported channel count " + std::to_string(img.channels));
    if (img.width < cfg.tiles_x || img.height < cfg.tiles_y)
        throw DataError("clahe: image smaller than tile grid");

    if (img.channels == 1) {
        RasterImage out(img.width, img.height, 1);
        out.data = equalize_plane(img.data.data(), img.width, img.height, cfg);
        return out;
    }

    const size_t n = img.pixel_count();
    std::vector<uint8_t> y_plane(n);
    std::vector<double> cb_plane(n), cr_plane(n);
    for (size_t p = 0; p < n; ++p) {
        double y, cb, cr;
        ycbcr_from_rgb(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2], y, cb, cr);
        y_plane[p] = round_clamp_u8(y);
        cb_plane[p] = cb;
        cr_plane[p] = cr;
    }

    std::vector<uint8_t> eq = equalize_plane(y_plane.data(), img.width, img.height, cfg);

    RasterImage out(img.width, img.height, 3);
    for (size_t p = 0; p < n; ++p) {
        uint8_t r, g, b;
        rgb_from_ycbcr(eq[p], cb_plane[p], cr_plane[p], r, g, b);
        out.data[p * 3] = r;
        out.data[p * 3 + 1] = g;
        out.data[p * 3 + 2] = b;
    }
    return out;
}

} // namespace fewshot
