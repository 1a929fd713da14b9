#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "sprobe/csv.hpp"
#include "sprobe/error.hpp"
#include "sprobe/image.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/numeric.hpp"
#include "sprobe/parallel.hpp"
#include "sprobe/rng.hpp"
#include "support.hpp"

using namespace sprobe;

TEST_CASE("image rejects sides below the minimum") {
  CHECK_THROWS_AS(Image(7, 32), Error);
  CHECK_THROWS_AS(Image(32, 0), Error);
  CHECK_NOTHROW(Image(8, 8));
  try {
    Image(4, 4);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidImage);
  }
}

TEST_CASE("clip maps into [0,1] and NaN to 0") {
  Image img(8, 8, 0.5f);
  img.at(0, 0, 0) = -1.0f;
  img.at(1, 0, 0) = 2.0f;
  img.at(2, 0, 0) = std::nanf("");
  img.clip();
  CHECK(img.at(0, 0, 0) == 0.0f);
  CHECK(img.at(1, 0, 0) == 1.0f);
  CHECK(img.at(2, 0, 0) == 0.0f);
}

TEST_CASE("mean intensity and bit identity") {
  const Image a = testing::constant_image(16, 16, 0.25f);
  CHECK(mean_intensity(a) == doctest::Approx(0.25).epsilon(1e-12));
  Image b = a;
  CHECK(bit_identical(a, b));
  b.at(3, 3, 1) = std::nextafter(0.25f, 1.0f);
  CHECK_FALSE(bit_identical(a, b));
  CHECK_FALSE(bit_identical(a, testing::constant_image(16, 8, 0.25f)));
}

TEST_CASE("16-bit PNG round trip is exact on the 16-bit grid") {
  Image img(9, 11);
  std::size_t i = 0;
  for (float& v : img.data()) v = static_cast<float>((i++ * 977) % 65536) / 65535.0f;
  const Image back = io::decode_png(io::encode_png(img, io::PngDepth::u16));
  REQUIRE(back.width() == 9);
  REQUIRE(back.height() == 11);
  for (std::size_t k = 0; k < img.size(); ++k) CHECK(back.data()[k] == img.data()[k]);
}

TEST_CASE("8-bit PNG quantizes to nearest code") {
  Image img = testing::gradient_image(20, 10);
  const Image back = io::decode_png(io::encode_png(img));
  for (std::size_t k = 0; k < img.size(); ++k) {
    CHECK(back.data()[k] == static_cast<float>(std::lround(img.data()[k] * 255.0f)) / 255.0f);
  }
}

TEST_CASE("JPEG round trip stays close on smooth content") {
  const Image img = testing::gradient_image(64, 64, 0.2f, 0.8f);
  const Image back = io::decode_jpeg(io::encode_jpeg(img, 95));
  double err = 0.0;
  for (std::size_t k = 0; k < img.size(); ++k) err += std::fabs(back.data()[k] - img.data()[k]);
  CHECK(err / static_cast<double>(img.size()) < 0.02);
}

TEST_CASE("read_image sniffs format and rejects garbage") {
  testing::TempDir dir;
  const Image img = testing::gradient_image(16, 16);
  io::write_png(img, dir / "a.png");
  const auto jpg = io::encode_jpeg(img, 90);
  io::write_file(dir / "b.dat", jpg);
  CHECK(io::read_image(dir / "a.png").width() == 16);
  CHECK(io::read_image(dir / "b.dat").height() == 16);
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  io::write_file(dir / "c.png", junk);
  CHECK_THROWS_AS(io::read_image(dir / "c.png"), Error);
  CHECK(io::is_image_path("x.JPG"));
  CHECK(io::is_image_path("x.png"));
  CHECK_FALSE(io::is_image_path("x.txt"));
}

TEST_CASE("csv handles quotes and escaped quotes") {
  const auto t = csv::parse("file,age,identity\na.png,31,\"Doe, Jane\"\n\"b\"\"q.png\",,\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column("identity") == 2);
  CHECK(t.column("missing") == -1);
  CHECK(t.rows[0][2] == "Doe, Jane");
  CHECK(t.rows[1][0] == "b\"q.png");
  CHECK(t.rows[1][1].empty());
  CHECK(csv::quote("a,b") == "\"a,b\"");
  CHECK(csv::quote("plain") == "plain");
  CHECK(csv::split_line(csv::quote("x\"y")) == std::vector<std::string>{"x\"y"});
}

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
  const rng::CounterRng a(42, 3), b(42, 3), c(43, 3), d(42, 4);
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(a.bits(i) == b.bits(i));
  int same_seed = 0, same_stream = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    same_seed += a.bits(i) == c.bits(i);
    same_stream += a.bits(i) == d.bits(i);
  }
  CHECK(same_seed == 0);
  CHECK(same_stream == 0);
}

TEST_CASE("counter rng moments") {
  const rng::CounterRng r(7, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sp = 0, umin = 1, umax = 0;
  std::int64_t lo = 10, hi = -1;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(static_cast<std::uint64_t>(i));
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = r.normal(static_cast<std::uint64_t>(i));
    sn += z;
    sn2 += z * z;
    sp += static_cast<double>(r.poisson(static_cast<std::uint64_t>(i), 4.5));
    const auto k = r.uniform_int(static_cast<std::uint64_t>(i), 0, 9);
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::fabs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sp / n == doctest::Approx(4.5).epsilon(0.01));
  CHECK(lo == 0);
  CHECK(hi == 9);
}

TEST_CASE("poisson handles large rates") {
  const rng::CounterRng r(1, 1);
  double s = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) s += static_cast<double>(r.poisson(static_cast<std::uint64_t>(i), 59.43));
  CHECK(s / n == doctest::Approx(59.43).epsilon(0.01));
  CHECK(r.poisson(0, 0.0) == 0);
}

TEST_CASE("kahan sum recovers cancelled low-order terms") {
  KahanSum k;
  double naive = 0.0;
  k.add(1e16);
  naive += 1e16;
  for (int i = 0; i < 1000; ++i) {
    k.add(1.0);
    naive += 1.0;
  }
  k.add(-1e16);
  naive -= 1e16;
  CHECK(k.value() == 1000.0);
  CHECK(naive != 1000.0);
}

TEST_CASE("parallel_for visits every index once") {
  for (Exec exec : {Exec::serial, Exec::parallel}) {
    std::vector<int> hits(1000, 0);
    parallel_for(exec, 1000, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  CHECK(max_threads() >= 1);
}

TEST_CASE("error codes have names") {
  CHECK(to_string(ErrorCode::ImageTooSmall) == "ImageTooSmall");
  const Error e(ErrorCode::ConfigError, "x");
  CHECK(std::string(e.what()).find("ConfigError") != std::string::npos);
}
