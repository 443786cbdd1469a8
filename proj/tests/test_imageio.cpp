#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <png.h>

#include "xdiff/error.hpp"
#include "xdiff/imageio.hpp"

using namespace xdiff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("xdiff_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("PGM decoding is byte exact") {
  TempDir dir;
  const fs::path p = dir.path / "a.pgm";
  write_bytes(p, std::string("P5\n# comment\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
  const GrayImage img = load_image(p);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<double>{0, 255, 128, 64});
}

TEST_CASE("malformed files raise format errors") {
  TempDir dir;
  const fs::path p = dir.path / "bad.pgm";
  write_bytes(p, "P5\n2 x\n255\n");
  CHECK_THROWS_AS(load_image(p), FormatError);
  write_bytes(p, std::string("P5\n4 4\n255\n") + std::string("\x01\x02", 2));
  CHECK_THROWS_AS(load_image(p), FormatError);
  write_bytes(p, "P5\n2 2\n65535\n");
  CHECK_THROWS_AS(load_image(p), FormatError);
  write_bytes(p, "P6\n1 1\n255\nabc");
  CHECK_THROWS_AS(load_image(p), FormatError);
  write_bytes(p, "hello");
  CHECK_THROWS_AS(load_image(p), FormatError);
  CHECK_THROWS_AS(load_image(dir.path / "missing.pgm"), IoError);
}

TEST_CASE("save clamps and rounds") {
  TempDir dir;
  GrayImage img(3, 1);
  img.pixels = {-3.2, 254.6, 17.49};
  for (const char* name : {"q.pgm", "q.png"}) {
    save_image(img, dir.path / name);
    CHECK(load_image(dir.path / name).pixels == std::vector<double>{0, 255, 17});
  }
  CHECK_THROWS_AS(save_image(img, dir.path / "q.bmp"), InvalidArgument);
}

TEST_CASE("round trip of integer images") {
  TempDir dir;
  std::mt19937 rng(7);
  GrayImage img(13, 7);
  for (auto& x : img.pixels) x = static_cast<double>(rng() % 256);
  for (const char* name : {"r.pgm", "r.PNG"}) {
    save_image(img, dir.path / name);
    const GrayImage back = load_image(dir.path / name);
    CHECK(back.width == 13);
    CHECK(back.height == 7);
    CHECK(back.pixels == img.pixels);
  }
}

TEST_CASE("color PNG is rejected") {
  TempDir dir;
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = PNG_FORMAT_RGB;
  const unsigned char rgb[12] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 1, 2, 3};
  const fs::path p = dir.path / "c.png";
  REQUIRE(png_image_write_to_file(&image, p.c_str(), 0, rgb, 0, nullptr));
  CHECK_THROWS_AS(load_image(p), FormatError);
}

TEST_CASE("field conversion keeps rows on axis 1") {
  GrayImage img(3, 2);
  img(2, 1) = 5.0;
  const ScalarField f = img.to_field();
  CHECK(f.grid().n1 == 2);
  CHECK(f.grid().n2 == 3);
  CHECK(f(1, 2) == 5.0);
  CHECK(GrayImage::from_field(f).pixels == img.pixels);
}

TEST_CASE("synthetic corpus") {
  const auto a = synth_corpus(6, 64, 48, 42);
  const auto b = synth_corpus(6, 64, 48, 42);
  const auto c = synth_corpus(6, 64, 48, 43);
  REQUIRE(a.size() == 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pixels == b[i].pixels);
    differs = differs || a[i].pixels != c[i].pixels;
    CHECK(a[i].width == 64);
    CHECK(a[i].height == 48);
    CHECK(max_neighbor_jump(a[i]) >= 64.0);
    for (double x : a[i].pixels) {
      CHECK(x >= 0.0);
      CHECK(x <= 255.0);
      CHECK(x == std::floor(x));
    }
  }
  CHECK(differs);
  CHECK_THROWS_AS(synth_corpus(0, 8, 8, 1), InvalidArgument);
}
