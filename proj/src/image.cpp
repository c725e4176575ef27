#include "vitalrr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "vitalrr/error.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

namespace {

// Row i of the result holds the weights of source cells averaged into output
// cell i; the weights of one output cell sum to 1.
std::vector<std::vector<std::pair<int, double>>> area_weights(int in, int out) {
  std::vector<std::vector<std::pair<int, double>>> w(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < in && s < hi; ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (overlap > 0.0) w[i].emplace_back(s, overlap / scale);
    }
  }
  return w;
}

}  // namespace

std::vector<double> area_resize(std::span<const double> src, int rows, int cols, int out_rows,
                                int out_cols) {
  if (rows <= 0 || cols <= 0 || out_rows <= 0 || out_cols <= 0 ||
      src.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("area_resize: invalid dimensions");
  }
  const auto wr = area_weights(rows, out_rows);
  const auto wc = area_weights(cols, out_cols);
  std::vector<double> tmp(static_cast<std::size_t>(out_rows) * cols, 0.0);
  for (int i = 0; i < out_rows; ++i) {
    for (auto [s, w] : wr[i]) {
      for (int c = 0; c < cols; ++c) tmp[static_cast<std::size_t>(i) * cols + c] += w * src[static_cast<std::size_t>(s) * cols + c];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols, 0.0);
  for (int i = 0; i < out_rows; ++i) {
    for (int j = 0; j < out_cols; ++j) {
      double acc = 0.0;
      for (auto [s, w] : wc[j]) acc += w * tmp[static_cast<std::size_t>(i) * cols + s];
      out[static_cast<std::size_t>(i) * out_cols + j] = acc;
    }
  }
  return out;
}

DetectorImage to_detector_grid(const Spectrogram& spec, const GridConfig& cfg) {
  if (spec.t_bins() == 0 || spec.f_bins() == 0) throw ShapeError("empty spectrogram");
  if (cfg.out_f_bins <= 0 || cfg.out_t_bins <= 0 || !(cfg.db_floor < 0.0)) {
    throw ConfigError("detector grid needs positive sizes and a negative dB floor");
  }
  const int rows = spec.f_bins();
  const int cols = spec.t_bins();
  double peak = 0.0;
  for (double m : spec.data()) peak = std::max(peak, m);

  // Source laid out with row 0 = most positive frequency.
  std::vector<double> db(static_cast<std::size_t>(rows) * cols, cfg.db_floor);
  if (peak > 0.0) {
    for (int r = 0; r < rows; ++r) {
      const int k = rows - 1 - r;
      for (int t = 0; t < cols; ++t) {
        const double m = spec.magnitude(t, k);
        const double v = m > 0.0 ? 20.0 * std::log10(m / peak) : cfg.db_floor;
        db[static_cast<std::size_t>(r) * cols + t] = std::max(v, cfg.db_floor);
      }
    }
  }
  auto resized = area_resize(db, rows, cols, cfg.out_f_bins, cfg.out_t_bins);

  DetectorImage img;
  img.rows = cfg.out_f_bins;
  img.cols = cfg.out_t_bins;
  img.column_step_s = spec.duration_s() / cfg.out_t_bins;
  img.t_begin_s = spec.first_time_s() - 0.5 * spec.column_step_s();
  img.pixels.resize(resized.size(), 0.0f);
  if (peak > 0.0) {
    const auto [lo, hi] = std::minmax_element(resized.begin(), resized.end());
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < resized.size(); ++i) {
      img.pixels[i] = range > 0.0 ? static_cast<float>((resized[i] - *lo) / range) : 1.0f;
    }
  }
  return img;
}

ImageFormat image_format_for(const std::string& path) {
  auto ends_with = [&](const std::string& ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  };
  if (ends_with(".png") || ends_with(".PNG")) return ImageFormat::Png;
  return ImageFormat::Pgm;
}

std::vector<unsigned char> quantize_image(const DetectorImage& image) {
  std::vector<unsigned char> px(image.pixels.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = std::clamp<double>(image.pixels[i], 0.0, 1.0);
    px[i] = static_cast<unsigned char>(std::lround(255.0 * v));
  }
  return px;
}

std::vector<unsigned char> encode_pgm(const DetectorImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  const auto px = quantize_image(image);
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_noop_flush(png_structp) {}

std::vector<unsigned char> encode_png(const DetectorImage& image) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<unsigned char> out;
  auto px = quantize_image(image);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_noop_flush);
  png_set_IHDR(png, info, image.cols, image.rows, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.rows; ++r) png_write_row(png, px.data() + static_cast<std::size_t>(r) * image.cols);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

void export_image(const DetectorImage& image, const std::string& path, ImageFormat format) {
  write_file_atomic(path, format == ImageFormat::Png ? encode_png(image) : encode_pgm(image));
}

}  // namespace vitalrr
