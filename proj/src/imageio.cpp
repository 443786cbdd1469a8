#include "xdiff/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "xdiff/error.hpp"

namespace xdiff {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

ScalarField GrayImage::to_field(double h) const { return ScalarField(Grid(height, width, h, h), pixels); }

GrayImage GrayImage::from_field(const ScalarField& f) {
  GrayImage img(f.grid().n2, f.grid().n1);
  std::copy(f.values().begin(), f.values().end(), img.pixels.begin());
  return img;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<unsigned char>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
  return tok;
}

int pgm_int(const std::vector<unsigned char>& b, std::size_t& pos, const char* what) {
  const std::string tok = pgm_token(b, pos);
  if (tok.empty() || tok.size() > 9 || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw FormatError(std::string("PGM header: bad ") + what);
  return std::stoi(tok);
}

GrayImage decode_pgm(const std::vector<unsigned char>& b) {
  std::size_t pos = 2;
  const int w = pgm_int(b, pos, "width");
  const int h = pgm_int(b, pos, "height");
  const int maxval = pgm_int(b, pos, "maxval");
  if (w < 1 || h < 1) throw FormatError("PGM header: empty image");
  if (maxval < 1 || maxval > 255) throw FormatError("PGM: only 8-bit images (maxval <= 255) are supported");
  if (pos >= b.size() || !std::isspace(b[pos])) throw FormatError("PGM header: missing separator before raster");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (b.size() - pos < count) throw FormatError("PGM: truncated raster");
  GrayImage img(w, h);
  const double scale = 255.0 / maxval;
  for (std::size_t i = 0; i < count; ++i) {
    if (b[pos + i] > maxval) throw FormatError("PGM: sample exceeds maxval");
    img.pixels[i] = maxval == 255 ? b[pos + i] : b[pos + i] * scale;
  }
  return img;
}

GrayImage decode_png(const std::vector<unsigned char>& b) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, b.data(), b.size()))
    throw FormatError(std::string("PNG: ") + image.message);
  if (image.format & PNG_FORMAT_FLAG_COLOR) {
    png_image_free(&image);
    throw FormatError("PNG: color images are not supported");
  }
  if (image.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&image);
    throw FormatError("PNG: images with an alpha channel are not supported");
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw FormatError("PNG: only 8-bit images are supported");
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> raster(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG: " + msg);
  }
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  std::copy(raster.begin(), raster.end(), img.pixels.begin());
  return img;
}

std::vector<unsigned char> quantize(const GrayImage& img) {
  std::vector<unsigned char> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = img.pixels[i];
    if (std::isnan(x)) throw InvalidArgument("save: image contains NaN");
    out[i] = static_cast<unsigned char>(std::lround(std::clamp(x, 0.0, 255.0)));
  }
  return out;
}

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> b = read_file(path);
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (b.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, b.begin())) return decode_png(b);
  if (b.size() >= 2 && b[0] == 'P' && b[1] == '5') return decode_pgm(b);
  if (b.size() >= 2 && b[0] == 'P' && (b[1] == '6' || b[1] == '3')) throw FormatError("color PPM images are not supported");
  throw FormatError("unsupported image format: " + path.string());
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  const std::vector<unsigned char> raster = quantize(img);
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("failed writing " + path.string());
  } else if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data(), 0, nullptr))
      throw IoError("cannot write " + path.string() + ": " + image.message);
  } else {
    throw InvalidArgument("save: unsupported extension '" + ext + "' (use .pgm or .png)");
  }
}

double max_neighbor_jump(const GrayImage& img) {
  double m = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (x + 1 < img.width) m = std::max(m, std::abs(img(x + 1, y) - img(x, y)));
      if (y + 1 < img.height) m = std::max(m, std::abs(img(x, y + 1) - img(x, y)));
    }
  return m;
}

namespace {

class IntRng {
 public:
  explicit IntRng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
  }
  // Uniform-ish in [lo, hi] from raw 32-bit outputs; exact across platforms.
  int range(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint32_t>(hi - lo + 1)); }

 private:
  std::mt19937 engine_;
};

struct Canvas {
  int w, h;
  std::vector<int> px;
  int& at(int x, int y) { return px[static_cast<std::size_t>(y) * w + x]; }
};

void step_edge(Canvas& c, IntRng& r) {
  const int px = r.range(c.w / 4, 3 * c.w / 4), py = r.range(c.h / 4, 3 * c.h / 4);
  int nx = r.range(-8, 8), ny = r.range(-8, 8);
  if (nx == 0 && ny == 0) nx = 1;
  const int delta = (r.range(0, 1) ? 1 : -1) * r.range(64, 160);
  for (int y = 0; y < c.h; ++y)
    for (int x = 0; x < c.w; ++x)
      if (nx * (x - px) + ny * (y - py) > 0) c.at(x, y) += delta;
}

void disk(Canvas& c, IntRng& r) {
  const int cx = r.range(0, c.w - 1), cy = r.range(0, c.h - 1);
  const int rad = r.range(std::max(2, std::min(c.w, c.h) / 10), std::max(3, std::min(c.w, c.h) / 3));
  const int level = r.range(0, 255);
  for (int y = 0; y < c.h; ++y)
    for (int x = 0; x < c.w; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad) c.at(x, y) = level;
}

void polygon(Canvas& c, IntRng& r) {
  // Triangle via edge functions; orientation-independent.
  int xs[3], ys[3];
  for (int k = 0; k < 3; ++k) {
    xs[k] = r.range(-c.w / 4, c.w + c.w / 4);
    ys[k] = r.range(-c.h / 4, c.h + c.h / 4);
  }
  const int level = r.range(0, 255);
  for (int y = 0; y < c.h; ++y)
    for (int x = 0; x < c.w; ++x) {
      long long e[3];
      for (int k = 0; k < 3; ++k) {
        const int a = k, b = (k + 1) % 3;
        e[k] = static_cast<long long>(xs[b] - xs[a]) * (y - ys[a]) - static_cast<long long>(ys[b] - ys[a]) * (x - xs[a]);
      }
      const bool inside = (e[0] >= 0 && e[1] >= 0 && e[2] >= 0) || (e[0] <= 0 && e[1] <= 0 && e[2] <= 0);
      if (inside) c.at(x, y) = level;
    }
}

void grating(Canvas& c, IntRng& r) {
  const int x0 = r.range(0, c.w / 2), y0 = r.range(0, c.h / 2);
  const int x1 = r.range(x0 + c.w / 4, c.w), y1 = r.range(y0 + c.h / 4, c.h);
  const int period = r.range(4, 16);
  const int amp = r.range(16, 64);
  const bool along_x = r.range(0, 1) == 1;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const int t = (along_x ? x : y) % period;
      const int tri = std::abs(2 * t - period);  // 0..period
      c.at(x, y) += (amp * tri) / period - amp / 2;
    }
}

GrayImage synth_one(int w, int h, IntRng& r) {
  Canvas c{w, h, std::vector<int>(static_cast<std::size_t>(w) * h)};
  const int base = r.range(32, 160);
  const int gx = r.range(-48, 48), gy = r.range(-48, 48);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) c.at(x, y) = base + (gx * x) / w + (gy * y) / h;
  step_edge(c, r);
  const int extra = r.range(3, 6);
  for (int k = 0; k < extra; ++k) {
    switch (r.range(0, 3)) {
      case 0: step_edge(c, r); break;
      case 1: disk(c, r); break;
      case 2: polygon(c, r); break;
      default: grating(c, r); break;
    }
  }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < c.px.size(); ++i) img.pixels[i] = std::clamp(c.px[i], 0, 255);
  return img;
}

}  // namespace

std::vector<GrayImage> synth_corpus(int n, int width, int height, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("synth_corpus: n must be at least 1");
  if (width < 2 || height < 2) throw InvalidArgument("synth_corpus: images must be at least 2 x 2");
  IntRng r(seed);
  std::vector<GrayImage> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    GrayImage img = synth_one(width, height, r);
    if (max_neighbor_jump(img) >= 64.0) out.push_back(std::move(img));
  }
  return out;
}

}  // namespace xdiff
