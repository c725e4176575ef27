#pragma once

#include <span>
#include <string>
#include <vector>

#include "vitalrr/spectrogram.hpp"

namespace vitalrr {

/// Grayscale image with values in [0, 1]. Row 0 is the most positive
/// frequency; column c is centred at t_begin_s + (c + 0.5) * column_step_s.
struct DetectorImage {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;  // row-major
  double t_begin_s = 0.0;
  double column_step_s = 0.0;

  float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double column_time_s(int c) const { return t_begin_s + (c + 0.5) * column_step_s; }
  /// Continuous column coordinate of a time; column c spans [c, c + 1).
  double time_to_column(double t_s) const { return (t_s - t_begin_s) / column_step_s; }
  double column_to_time(double u) const { return t_begin_s + u * column_step_s; }
};

struct GridConfig {
  int out_f_bins = 64;
  int out_t_bins = 256;
  double db_floor = -60.0;
};

/// Area-averaging resize of a row-major rows x cols array.
std::vector<double> area_resize(std::span<const double> src, int rows, int cols, int out_rows,
                                int out_cols);

/// dB relative to the global maximum, clamped at the floor, area-resized to
/// the output grid and min-max normalized to [0, 1].
DetectorImage to_detector_grid(const Spectrogram& spec, const GridConfig& cfg = {});

enum class ImageFormat { Pgm, Png };

ImageFormat image_format_for(const std::string& path);

/// 8-bit quantization used by both formats: round(255 * clamp(v, 0, 1)).
std::vector<unsigned char> quantize_image(const DetectorImage& image);
std::vector<unsigned char> encode_pgm(const DetectorImage& image);
void export_image(const DetectorImage& image, const std::string& path, ImageFormat format);

}  // namespace vitalrr
