#pragma once

// Image quality measures on the 0..255 intensity scale.

#include <string>

#include "xdiff/field.hpp"

namespace xdiff {

inline constexpr double kPeak = 255.0;

double mse(const ScalarField& a, const ScalarField& b);

// 10 log10(255^2 / MSE); +infinity when the images are identical.
double psnr(const ScalarField& restored, const ScalarField& reference);

// 1 x 9 (axis 2) or 9 x 1 (axis 1) moving average with edge replication.
ScalarField box_blur(const ScalarField& image, int axis);

// box_blur along both axes.
ScalarField uniform_blur(const ScalarField& image);

// No-reference perceptual blur in [0, 1], higher is blurrier. Compares the
// neighbour differences of the image with those of its 9-tap blur along each
// axis and returns the larger of the two per-axis scores. Differences are
// taken over interior pairs only. An axis without variation is ignored; an
// image without any variation scores 1.
double blur(const ScalarField& image);

struct EvalRow {
  std::string image_id;
  double psnr_db = 0.0;
  double blur = 0.0;
};

}  // namespace xdiff
