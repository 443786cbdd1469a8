#pragma once

// 8-bit grayscale images: binary PGM (P5) and PNG.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xdiff/field.hpp"

namespace xdiff {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, nominal range 0..255

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  double operator()(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& operator()(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  // Rows map to axis 1, columns to axis 2, spacing h on both axes.
  ScalarField to_field(double h = 1.0) const;
  static GrayImage from_field(const ScalarField& f);
};

// Format is detected from the file contents. Throws IoError when the file
// cannot be read and FormatError for malformed, truncated, color or
// non-8-bit data.
GrayImage load_image(const std::filesystem::path& path);

// Clamps to [0, 255], rounds to nearest and writes PGM or PNG according to
// the extension (.pgm / .png).
void save_image(const GrayImage& img, const std::filesystem::path& path);

// Deterministic synthetic textures built from integer arithmetic only: step
// edges, triangle-wave gratings, polygons, disks and linear gradients. Every
// image contains a neighbour jump of at least 64.
std::vector<GrayImage> synth_corpus(int n, int width, int height, std::uint64_t seed);

// Largest absolute difference between horizontally or vertically adjacent
// pixels.
double max_neighbor_jump(const GrayImage& img);

}  // namespace xdiff
