#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "edgepaint/imaging/image.hpp"

namespace ep {

namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing or unreadable file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double from_byte(unsigned char b, Range range) {
  const double u = double(b) / 255.0;
  return range == Range::Unit ? u : u * 2.0 - 1.0;
}

unsigned char to_byte(double x, Range range) {
  const double u = range == Range::Unit ? x : (x + 1.0) / 2.0;
  const long q = std::lround(u * 255.0);
  return static_cast<unsigned char>(std::clamp(q, 0L, 255L));
}

}  // namespace

Image load_image(const std::string& path, Range range) {
  const auto bytes = read_file_bytes(path);

  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size()))
    throw FormatError("undecodable image (" + std::string(pi.message) + "): " +
                      path);

  if (pi.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&pi);
    throw FormatError("unsupported channel count (alpha plane present): " +
                      path);
  }
  if (pi.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&pi);
    throw FormatError("unsupported bit depth (16-bit): " + path);
  }

  const bool color = (pi.format & PNG_FORMAT_FLAG_COLOR) != 0;
  pi.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  const int h = int(pi.height), w = int(pi.width);

  std::vector<unsigned char> rows(size_t(h) * w * channels);
  if (!png_image_finish_read(&pi, nullptr, rows.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw FormatError("undecodable image (" + msg + "): " + path);
  }

  Image out(h, w, color ? ImageKind::Rgb : ImageKind::Gray, range);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(c, y, x) = from_byte(rows[(size_t(y) * w + x) * channels + c], range);
  return out;
}

void save_image(const Image& img, const std::string& path) {
  const int channels = img.channels();
  const int h = img.height(), w = img.width();
  std::vector<unsigned char> rows(size_t(h) * w * channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        rows[(size_t(y) * w + x) * channels + c] =
            to_byte(img.at(c, y, x), img.range());

  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = png_uint_32(w);
  pi.height = png_uint_32(h);
  pi.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  if (!png_image_write_to_file(&pi, path.c_str(), 0, rows.data(), 0, nullptr))
    throw IoError("cannot write image (" + std::string(pi.message) + "): " +
                  path);
}

Mask load_mask(const std::string& path) {
  Image img = load_image(path, Range::Unit);
  if (img.kind() == ImageKind::Rgb) img = to_grayscale(img);
  Mask m(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      m.at(y, x) = img.at(0, y, x) >= 0.5 ? 1 : 0;
  return m;
}

void save_mask(const Mask& mask, const std::string& path) {
  Image img(mask.height(), mask.width(), ImageKind::Gray, Range::Unit);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      img.at(0, y, x) = mask.at(y, x) ? 1.0 : 0.0;
  save_image(img, path);
}

}  // namespace ep
