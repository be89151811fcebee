#include "advseg/data/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

namespace advseg {

namespace {

struct PngImageGuard {
  png_image image;
  PngImageGuard() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

std::vector<std::uint8_t> read_with_format(const std::filesystem::path& path,
                                           png_uint_32 format, int& height, int& width) {
  PngImageGuard g;
  if (!png_image_begin_read_from_file(&g.image, path.c_str())) {
    throw Error(ErrorKind::Ingestion,
                "cannot read PNG " + path.string() + ": " + g.image.message);
  }
  g.image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(g.image));
  if (!png_image_finish_read(&g.image, nullptr, buf.data(), 0, nullptr)) {
    throw Error(ErrorKind::Ingestion,
                "cannot decode PNG " + path.string() + ": " + g.image.message);
  }
  height = static_cast<int>(g.image.height);
  width = static_cast<int>(g.image.width);
  return buf;
}

void write_with_format(const std::filesystem::path& path, png_uint_32 format, int height,
                       int width, const void* pixels, const void* colormap,
                       png_uint_32 colormap_entries) {
  PngImageGuard g;
  g.image.width = static_cast<png_uint_32>(width);
  g.image.height = static_cast<png_uint_32>(height);
  g.image.format = format;
  g.image.colormap_entries = colormap_entries;
  if (!png_image_write_to_file(&g.image, path.c_str(), 0, pixels, 0, colormap)) {
    throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + g.image.message);
  }
}

}  // namespace

Image read_png_rgb(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = read_with_format(path, PNG_FORMAT_RGB, h, w);
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(buf[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
  return img;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  GrayImage g;
  g.pixels = read_with_format(path, PNG_FORMAT_GRAY, g.height, g.width);
  return g;
}

void write_png_rgb(const std::filesystem::path& path, const Image& image) {
  const int h = image.height();
  const int w = image.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  write_with_format(path, PNG_FORMAT_RGB, h, w, buf.data(), nullptr, 0);
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  write_with_format(path, PNG_FORMAT_GRAY, image.height, image.width, image.pixels.data(),
                    nullptr, 0);
}

void write_png_indexed(const std::filesystem::path& path, const GrayImage& image,
                       const std::vector<Rgb>& palette) {
  if (palette.empty() || palette.size() > 256) {
    throw Error(ErrorKind::InvalidInput, "palette must have 1..256 entries");
  }
  for (auto p : image.pixels) {
    if (p >= palette.size()) throw Error(ErrorKind::InvalidInput, "pixel index outside palette");
  }
  std::vector<std::uint8_t> cmap;
  cmap.reserve(palette.size() * 3);
  for (const auto& c : palette) cmap.insert(cmap.end(), c.begin(), c.end());
  write_with_format(path, PNG_FORMAT_RGB_COLORMAP, image.height, image.width,
                    image.pixels.data(), cmap.data(),
                    static_cast<png_uint_32>(palette.size()));
}

}  // namespace advseg
