#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "golden_table.hpp"
#include "sprobe/corruption/catalog.hpp"
#include "sprobe/corruption/corrupt.hpp"
#include "sprobe/corruption/kernels.hpp"
#include "sprobe/corruption/reference.hpp"
#include "sprobe/error.hpp"
#include "support.hpp"

using namespace sprobe;
using namespace sprobe::corruption;

namespace {

double max_abs_diff(const kernels::Raster& a, const kernels::Raster& b) {
  REQUIRE(a.data.size() == b.data.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(double(a.data[i]) - double(b.data[i])));
  return m;
}

// Anisotropic total variation summed over channels.
double total_variation(const kernels::Raster& r) {
  double tv = 0.0;
  for (int c = 0; c < r.channels; ++c) {
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) {
        if (x + 1 < r.width) tv += std::fabs(r.at(x + 1, y, c) - r.at(x, y, c));
        if (y + 1 < r.height) tv += std::fabs(r.at(x, y + 1, c) - r.at(x, y, c));
      }
    }
  }
  return tv;
}

double sum(const std::vector<double>& w) {
  double s = 0;
  for (double v : w) s += v;
  return s;
}

}  // namespace

TEST_CASE("resolve_params matches the hand-transcribed table") {
  const auto& rows = testing::golden_table();
  REQUIRE(rows.size() == static_cast<std::size_t>(kKindCount));
  for (const auto& row : rows) {
    for (std::size_t s = 0; s < 4; ++s) {
      const ParamVector p = resolve_params(row.kind, testing::kGoldenSeverities[s]);
      CAPTURE(row.kind);
      CAPTURE(s);
      REQUIRE(p.size() == row.values[s].size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] == row.values[s][i]);
        if (!row.names.empty()) CHECK(p.entries()[i].first == row.names[i]);
      }
    }
  }
}

TEST_CASE("kind and severity parsing") {
  CHECK(parse_kind("fog") == Kind::fog);
  CHECK(kind_name(Kind::jpeg) == "jpeg");
  CHECK(parse_severity(0.99) == Severity::s099);
  CHECK(parse_severity(0.5 + 1e-12) == Severity::s050);
  try {
    parse_kind("blurry");
    FAIL("expected UnknownKind");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownKind);
  }
  try {
    parse_severity(0.3);
    FAIL("expected UnsupportedSeverity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedSeverity);
  }
  CHECK(spec_label(Kind::gaussian_noise, Severity::s025) == "gaussian_noise@0.25");
  CHECK(corruption_catalog().size() == static_cast<std::size_t>(kKindCount));
}

TEST_CASE("every corruption is deterministic, schedule independent and in range") {
  const Image src = testing::noise_image(48, 40, 5);
  for (int k = 0; k < kKindCount; ++k) {
    for (Severity s : kSeverities) {
      const CorruptionSpec spec{static_cast<Kind>(k), s, 1234};
      CAPTURE(spec_label(spec.kind, s));
      const Image a = apply_corruption(src, spec, Exec::parallel);
      const Image b = apply_corruption(src, spec, Exec::parallel);
      const Image c = apply_corruption(src, spec, Exec::serial);
      CHECK(bit_identical(a, b));
      CHECK(bit_identical(a, c));
      CHECK(a.width() == src.width());
      CHECK(a.height() == src.height());
      CHECK(std::all_of(a.data().begin(), a.data().end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
      CHECK_FALSE(bit_identical(a, src));
    }
  }
}

TEST_CASE("seed changes stochastic kinds only") {
  const Image src = testing::gradient_image(40, 40, 0.2f, 0.8f);
  for (int k = 0; k < kKindCount; ++k) {
    const Kind kind = static_cast<Kind>(k);
    const Image a = apply_corruption(src, {kind, Severity::s050, 1});
    const Image b = apply_corruption(src, {kind, Severity::s050, 2});
    CAPTURE(kind_name(kind));
    CHECK(bit_identical(a, b) == !is_stochastic(kind));
  }
}

TEST_CASE("gaussian noise sigma matches the table (robust estimate)") {
  const Image src = testing::gradient_image(256, 256, 0.3f, 0.7f);
  const double expected[] = {0.13, 0.22, 0.31, 0.40};
  for (std::size_t s = 0; s < 4; ++s) {
    const Image out = apply_corruption(src, {Kind::gaussian_noise, kSeverities[s], 9});
    std::vector<double> dev;
    for (std::size_t i = 0; i < src.size(); ++i) dev.push_back(std::fabs(double(out.data()[i]) - src.data()[i]));
    std::nth_element(dev.begin(), dev.begin() + static_cast<long>(dev.size() / 2), dev.end());
    const double sigma = dev[dev.size() / 2] / 0.6744897501960817;
    CHECK(sigma == doctest::Approx(expected[s]).epsilon(0.02));
  }
}

TEST_CASE("impulse noise hits the expected fraction") {
  const Image src = testing::constant_image(128, 128, 0.5f);
  const Image out = apply_corruption(src, {Kind::impulse_noise, Severity::s099, 3});
  std::size_t changed = 0, salt = 0;
  for (float v : out.data()) {
    changed += v != 0.5f;
    salt += v == 1.0f;
  }
  const double frac = double(changed) / double(out.size());
  CHECK(frac == doctest::Approx(0.27).epsilon(0.03));
  CHECK(double(salt) / double(changed) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("shot noise is unbiased with variance x/c") {
  const Image src = testing::constant_image(128, 128, 0.4f);
  const Image out = apply_corruption(src, {Kind::shot_noise, Severity::s025, 3});
  double m = 0, v = 0;
  for (float x : out.data()) m += x;
  m /= double(out.size());
  for (float x : out.data()) v += (x - m) * (x - m);
  v /= double(out.size() - 1);
  CHECK(m == doctest::Approx(0.4).epsilon(0.01));
  CHECK(v == doctest::Approx(0.4 / 17.25).epsilon(0.03));
}

TEST_CASE("brightness adds c to value on gray images") {
  const Image src = testing::constant_image(16, 16, 0.25f);
  const Image out = apply_corruption(src, {Kind::brightness, Severity::s025, 0});
  for (float v : out.data()) CHECK(v == doctest::Approx(0.45).epsilon(1e-6));
  const Image sat = apply_corruption(testing::constant_image(16, 16, 0.9f), {Kind::brightness, Severity::s099, 0});
  for (float v : sat.data()) CHECK(v == 1.0f);
}

TEST_CASE("contrast keeps per-channel means") {
  const Image src = testing::gradient_image(32, 32, 0.1f, 0.9f);
  const Image out = apply_corruption(src, {Kind::contrast, Severity::s050, 0});
  for (int c = 0; c < 3; ++c) {
    double a = 0, b = 0;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        a += src.at(x, y, c);
        b += out.at(x, y, c);
      }
    }
    CHECK(a == doctest::Approx(b).epsilon(1e-5));
  }
}

TEST_CASE("pixelate produces constant blocks") {
  const Image src = testing::noise_image(64, 64, 8);
  const Image out = apply_corruption(src, {Kind::pixelate, Severity::s099, 0});
  // floor(64 * 0.06) = 3 cells per side; neighbouring pixels mostly agree
  std::size_t equal = 0, total = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x + 1 < 64; ++x) {
      equal += out.at(x, y, 0) == out.at(x + 1, y, 0);
      ++total;
    }
  }
  CHECK(double(equal) / double(total) > 0.95);
}

TEST_CASE("minimum side limits") {
  CHECK(minimum_side(Kind::pixelate, Severity::s099) == 17);
  CHECK(minimum_side(Kind::glass_blur, Severity::s050) == 9);
  CHECK(minimum_side(Kind::glass_blur, Severity::s099) == 13);
  CHECK(minimum_side(Kind::brightness, Severity::s099) == Image::kMinSide);
  const Image small = testing::noise_image(16, 16, 1);
  try {
    apply_corruption(small, {Kind::pixelate, Severity::s099, 0});
    FAIL("expected ImageTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImageTooSmall);
  }
  CHECK_NOTHROW(apply_corruption(testing::noise_image(17, 17, 1), {Kind::pixelate, Severity::s099, 0}));
  CHECK_THROWS_AS(apply_corruption(testing::noise_image(12, 12, 1), {Kind::glass_blur, Severity::s099, 0}), Error);
  CHECK_NOTHROW(apply_corruption(testing::noise_image(13, 13, 1), {Kind::glass_blur, Severity::s099, 0}));
}

TEST_CASE("kernels are normalized") {
  for (double sigma : {0.5, 2.25, 5.95}) CHECK(sum(kernels::gaussian_weights(sigma)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kernels::gaussian_weights(2.25).size() == 2 * 9 + 1);
  CHECK(sum(kernels::disk_kernel(4.75, 0.2).weights) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sum(kernels::disk_kernel(9.93, 0.5).weights) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sum(kernels::motion_kernel(19.9, 14.88, 30.0).weights) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reflect index is half-sample symmetric") {
  CHECK(kernels::reflect_index(-1, 5) == 0);
  CHECK(kernels::reflect_index(-2, 5) == 1);
  CHECK(kernels::reflect_index(5, 5) == 4);
  CHECK(kernels::reflect_index(6, 5) == 3);
  CHECK(kernels::reflect_index(10, 5) == 0);
  CHECK(kernels::reflect_index(-11, 5) == 0);
}

TEST_CASE("optimized kernels agree with the naive reference") {
  const auto src = kernels::from_image(testing::noise_image(37, 29, 11));
  for (double sigma : {0.9, 2.25, 4.75}) {
    CHECK(max_abs_diff(kernels::gaussian_blur(src, sigma, Exec::parallel), reference::gaussian_blur(src, sigma)) < 1e-5);
  }
  const auto disk = kernels::disk_kernel(6.5, 0.3);
  CHECK(max_abs_diff(kernels::correlate(src, disk, Exec::parallel), reference::correlate(src, disk)) < 1e-5);
  const auto motion = kernels::motion_kernel(12.5, 6.0, -30.0);
  CHECK(max_abs_diff(kernels::correlate(src, motion, Exec::parallel), reference::correlate(src, motion)) < 1e-5);
  for (double z : {1.0, 1.06, 1.24}) {
    CHECK(max_abs_diff(kernels::zoom_center(src, z, Exec::parallel), reference::zoom_center(src, z)) < 1e-6);
  }
  for (auto [w, h] : {std::pair{3, 2}, std::pair{17, 13}, std::pair{74, 58}}) {
    const auto down = kernels::resize_nearest(src, w, h, Exec::parallel);
    CHECK(max_abs_diff(down, reference::resize_nearest(src, w, h)) == 0.0);
  }
}

TEST_CASE("symmetric blurs do not increase total variation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto src = kernels::from_image(testing::noise_image(40, 32, seed));
    const double tv = total_variation(src);
    CHECK(total_variation(kernels::gaussian_blur(src, 2.25, Exec::parallel)) <= tv);
    CHECK(total_variation(kernels::correlate(src, kernels::disk_kernel(4.75, 0.2), Exec::parallel)) <= tv);
    CHECK(total_variation(kernels::box_blur(src, 3, Exec::parallel)) <= tv);
  }
}

TEST_CASE("motion blur smooths noise") {
  const Image src = testing::noise_image(64, 64, 4);
  const Image out = apply_corruption(src, {Kind::motion_blur, Severity::s050, 4});
  CHECK(total_variation(kernels::from_image(out)) < 0.5 * total_variation(kernels::from_image(src)));
}

TEST_CASE("zoom factor 1 is the identity") {
  const auto src = kernels::from_image(testing::noise_image(24, 24, 2));
  CHECK(max_abs_diff(kernels::zoom_center(src, 1.0, Exec::serial), src) < 1e-7);
}
