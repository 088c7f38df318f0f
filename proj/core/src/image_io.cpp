#include "fewshot/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <unistd.h>

#include <atomic>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "fewshot/error.hpp"

namespace fewshot {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

RasterImage load_png_file(FILE* fp, const std::filesystem::path& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng: failed to allocate reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("libpng: failed to allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed to decode PNG: " + path.string());
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;

    RasterImage img(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<png_bytep> rows(h);
    size_t stride = static_cast<size_t>(w) * channels;
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.data.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

RasterImage load_jpeg_file(FILE* fp, const std::filesystem::path& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("failed to decode JPEG: " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    int channels = cinfo.output_components;
    RasterImage img(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height),
                    channels);
    size_t stride = static_cast<size_t>(img.width) * channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.data.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    static std::atomic<unsigned> counter{0};
    auto name = path.filename().string() + ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
                std::to_string(::getpid());
    return path.parent_path().empty() ? std::filesystem::path(name)
                                      : path.parent_path() / name;
}

} // namespace

RasterImage load_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw DataError("cannot open image file: " + path.string());

    unsigned char magic[3] = {0, 0, 0};
    size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::rewind(fp.get());
    if (got >= 3 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N')
        return load_png_file(fp.get(), path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8)
        return load_jpeg_file(fp.get(), path);
    throw DataError("unsupported image format (expected PNG or JPEG): " + path.string());
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
    if (img.empty()) throw DataError("refusing to write empty image: " + path.string());
    if (img.channels != 1 && img.channels != 3)
        throw DataError("PNG writer supports 1 or 3 channels, got " +
                        std::to_string(img.channels));

    auto tmp = temp_sibling(path);
    FilePtr fp(std::fopen(tmp.string().c_str(), "wb"));
    if (!fp) throw DataError("cannot open for writing: " + tmp.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng: failed to allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw DataError("libpng: failed to allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw DataError("failed to encode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.data.data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    fp.reset();

    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move temporary file onto " + path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw DataError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move temporary file onto " + path.string());
    }
}

} // namespace fewshot
