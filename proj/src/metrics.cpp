#include "xdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xdiff/error.hpp"

namespace xdiff {

double mse(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("mse: grid mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const ScalarField& restored, const ScalarField& reference) {
  const double e = mse(restored, reference);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / e);
}

ScalarField box_blur(const ScalarField& image, int axis) {
  if (axis != 1 && axis != 2) throw InvalidArgument("box_blur: axis must be 1 or 2");
  constexpr int kRadius = 4;
  const Grid& g = image.grid();
  ScalarField out(g);
  const int n = g.count(axis);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      const int j = axis == 1 ? j1 : j2;
      double sum = 0.0;
      for (int k = j - kRadius; k <= j + kRadius; ++k) {
        const int c = std::clamp(k, 0, n - 1);
        sum += axis == 1 ? image(c, j2) : image(j1, c);
      }
      out(j1, j2) = sum / (2 * kRadius + 1);
    }
  return out;
}

ScalarField uniform_blur(const ScalarField& image) { return box_blur(box_blur(image, 1), 2); }

double blur(const ScalarField& image) {
  const Grid& g = image.grid();
  if (g.n1 < 3 || g.n2 < 3) throw InvalidArgument("blur: image must be at least 3 x 3");
  double score = -1.0;
  for (int axis = 1; axis <= 2; ++axis) {
    const ScalarField smooth = box_blur(image, axis);
    const int o1 = axis == 1 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 0;
    double s_f = 0.0, s_v = 0.0;
    for (int j1 = o1; j1 < g.n1; ++j1)
      for (int j2 = o2; j2 < g.n2; ++j2) {
        const double df = std::abs(image(j1, j2) - image(j1 - o1, j2 - o2));
        const double db = std::abs(smooth(j1, j2) - smooth(j1 - o1, j2 - o2));
        s_f += df;
        s_v += std::max(0.0, df - db);
      }
    if (s_f > 0.0) score = std::max(score, (s_f - s_v) / s_f);
  }
  return score < 0.0 ? 1.0 : score;
}

}  // namespace xdiff
