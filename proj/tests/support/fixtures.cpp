#include "support/fixtures.hpp"

#include <jpeglib.h>

#include <cstdio>
#include <stdexcept>

namespace fixtures {

void write_jpeg(const fewshot::RasterImage& img, const std::filesystem::path& path,
                int quality) {
    if (img.channels != 3) throw std::runtime_error("write_jpeg expects 3 channels");
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open " + path.string());

    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, fp);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    const size_t stride = static_cast<size_t>(img.width) * 3;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(img.data.data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(fp);
}

} // namespace fixtures
