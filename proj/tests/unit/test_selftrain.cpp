#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pseudoseg/selftrain.hpp"

using namespace pseudoseg;

namespace {

Mask block(int h, int w, int r0, int c0, int r1, int c1) {
  Mask m(h, w, 0);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) m(r, c) = 1;
  }
  return m;
}

CheckpointMaskSet checkpoint(int id, const std::string& image, std::vector<Mask> masks) {
  CheckpointMaskSet s{id, {}};
  for (auto& m : masks) s.masks.push_back({image, std::move(m)});
  return s;
}

}  // namespace

TEST_CASE("IoU examples") {
  const auto a = block(2, 3, 0, 0, 1, 1);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(block(3, 3, 0, 0, 0, 0), block(3, 3, 2, 2, 2, 2)) == 0.0);
  CHECK(iou(a, block(2, 3, 0, 1, 1, 2)) == doctest::Approx(2.0 / 6.0));
  CHECK(iou(Mask(2, 2, 0), Mask(2, 2, 0)) == 0.0);
  CHECK_THROWS_AS(iou(Mask(2, 2, 0), Mask(2, 3, 0)), Error);
}

TEST_CASE("IoU is symmetric and bounded") {
  std::mt19937_64 rng(107);
  for (int t = 0; t < 200; ++t) {
    const auto a = fixture::random_blob_mask(rng, 7, 9, 0.4), b = fixture::random_blob_mask(rng, 7, 9, 0.4);
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("stability scores") {
  const auto m = block(6, 6, 1, 1, 3, 3);
  SUBCASE("identical masks across three checkpoints") {
    const std::vector<CheckpointMaskSet> mid = {checkpoint(1, "x", {m}), checkpoint(2, "x", {m})};
    CHECK(stability_score({"x", m}, mid) == 2.0);
  }
  SUBCASE("no overlap anywhere") {
    const std::vector<CheckpointMaskSet> mid = {checkpoint(1, "x", {block(6, 6, 5, 5, 5, 5)}),
                                                checkpoint(2, "x", {})};
    CHECK(stability_score({"x", m}, mid) == 0.0);
  }
  SUBCASE("best match per checkpoint") {
    const auto half = block(6, 6, 0, 0, 1, 1);             // 4 pixels
    const auto m4 = block(6, 6, 0, 0, 0, 3);               // IoU with half: 2/6
    const auto two = block(6, 6, 0, 0, 0, 1);              // IoU with half: 0.5
    const auto quarter = block(6, 6, 0, 0, 0, 0);          // IoU with half: 0.25
    const std::vector<CheckpointMaskSet> mid = {checkpoint(1, "x", {m4, two}),
                                                checkpoint(2, "x", {quarter})};
    CHECK(stability_score({"x", half}, mid) == doctest::Approx(0.75).epsilon(1e-15));
  }
  SUBCASE("masks of other images are ignored") {
    const std::vector<CheckpointMaskSet> mid = {checkpoint(1, "y", {m}), checkpoint(2, "x", {m})};
    CHECK(stability_score({"x", m}, mid) == 1.0);
  }
}

TEST_CASE("stability scores stay within [0, e-1]") {
  std::mt19937_64 rng(109);
  for (int t = 0; t < 100; ++t) {
    const int e = 2 + int(rng() % 4);
    std::vector<CheckpointMaskSet> mid;
    for (int j = 1; j < e; ++j) {
      std::vector<Mask> ms;
      for (int i = 0, n = int(rng() % 4); i < n; ++i) ms.push_back(fixture::random_blob_mask(rng, 5, 5, 0.5));
      mid.push_back(checkpoint(j, "img", ms));
    }
    const double z = stability_score({"img", fixture::random_blob_mask(rng, 5, 5, 0.5)}, mid);
    CHECK(z >= 0.0);
    CHECK(z <= e - 1);
  }
}

TEST_CASE("min-max normalisation") {
  const auto v = minmax_normalize({0.0, 1.0, 2.0}, 0.6);
  CHECK(std::abs(v[0] - 0.6) < 1e-12);
  CHECK(std::abs(v[1] - 0.8) < 1e-12);
  CHECK(std::abs(v[2] - 1.0) < 1e-12);
  CHECK(minmax_normalize({1.7}, 0.6) == std::vector<double>{1.0});
  CHECK(minmax_normalize({0.4, 0.4, 0.4}, 0.6) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(minmax_normalize({}, 0.6), Error);
  CHECK_THROWS_AS(minmax_normalize({0.0, 1.0}, 1.0), Error);

  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z(1 + rng() % 8);
    for (auto& x : z) x = u(rng);
    const auto n = minmax_normalize(z, 0.6);
    const auto lo = std::min_element(z.begin(), z.end()) - z.begin();
    const auto hi = std::max_element(z.begin(), z.end()) - z.begin();
    for (std::size_t i = 0; i < z.size(); ++i) {
      CHECK(n[i] >= 0.6 - 1e-15);
      CHECK(n[i] <= 1.0);
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[i] < z[j]) CHECK(n[i] <= n[j]);
      }
    }
    CHECK(n[hi] == 1.0);
    if (z.size() > 1 && z[lo] != z[hi]) CHECK(n[lo] == doctest::Approx(0.6).epsilon(1e-15));
  }
}

TEST_CASE("boundary pixels are two-sided") {
  const auto m = block(4, 5, 1, 1, 2, 2);
  const auto b = boundary_pixels(m);
  // Whole 2x2 block plus the 8 outside pixels sharing an edge with it.
  CHECK(mask_area(b) == 4 + 8);
  CHECK(b(0, 0) == 0);
  CHECK(b(0, 1) == 1);
  CHECK(b(1, 3) == 1);
  CHECK(mask_area(boundary_pixels(Mask(3, 3, 1))) == 0);
}

TEST_CASE("distance transform examples") {
  // Left column foreground on a 1x6 strip: boundary is pixels 0 and 1.
  const Mask strip(1, 6, {1, 0, 0, 0, 0, 0});
  const auto d = distance_transform(strip);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  CHECK(d[3] == 2.0);
  CHECK(d[5] == 4.0);

  Mask dot(5, 5, 0);
  dot(0, 0) = 1;
  const auto dd = distance_transform(dot);
  // boundary = (0,0), (0,1), (1,0)
  CHECK(dd(1, 1) == 1.0);
  CHECK(dd(2, 2) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));

  const auto full = distance_transform(Mask(3, 4, 1)), empty = distance_transform(Mask(3, 4, 0));
  for (double v : full.values()) CHECK(v == kNoBoundary);
  for (double v : empty.values()) CHECK(v == kNoBoundary);
}

TEST_CASE("distance transform equals the brute-force oracle") {
  std::mt19937_64 rng(127);
  for (int t = 0; t < 60; ++t) {
    const int h = 1 + int(rng() % 32), w = 1 + int(rng() % 32);
    const double fill = std::uniform_real_distribution<double>(0.02, 0.98)(rng);
    const auto m = t % 2 ? fixture::random_blob_mask(rng, h, w, fill) : fixture::random_rect_mask(rng, h, w);
    CHECK(distance_transform(m) == oracle::brute_force_distance(m));
  }
}

TEST_CASE("weight maps") {
  Grid<double> d(1, 3, {5.0, 2.0, 3.0});
  const auto w = weight_map_from_distance(d, 0.8, 3.0);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.8);
  CHECK(w[2] == 0.8);
  const auto unit = weight_map(block(6, 6, 1, 1, 3, 4), 1.0, 3.0), full = weight_map(Mask(4, 4, 1), 0.7, 3.0);
  for (double v : unit.values()) CHECK(v == 1.0);
  for (double v : full.values()) CHECK(v == 1.0);
  CHECK_THROWS_AS(weight_map(Mask(2, 2, 0), 0.0, 3.0), Error);
  CHECK_THROWS_AS(weight_map(Mask(2, 2, 0), 0.5, 0.0), Error);

  std::mt19937_64 rng(131);
  for (int t = 0; t < 30; ++t) {
    const auto m = fixture::random_blob_mask(rng, 12, 15, 0.3);
    const auto ref = oracle::brute_force_distance(m);
    const auto wm = weight_map(m, 0.65, 3.0);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(wm[i] == (ref[i] <= 3.0 ? 0.65 : 1.0));
  }
}

TEST_CASE("adaptive loss") {
  SUBCASE("single pixel") {
    const auto r = adaptive_loss(Grid<double>(1, 1, 0.5), Mask(1, 1, 1), Grid<double>(1, 1, 0.8));
    CHECK(r.value == doctest::Approx(0.8 * std::log(2.0)));
    CHECK(std::abs(r.value - 0.554518) < 1e-6);
  }
  SUBCASE("prediction equals target") {
    const Mask t(3, 3, {1, 0, 1, 0, 1, 0, 1, 0, 1});
    Grid<double> p(3, 3);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = t[i];
    const auto r = adaptive_loss(p, t, Grid<double>(3, 3, 0.7));
    CHECK(r.value < 1e-5);
    for (double g : r.grad.values()) CHECK(std::abs(g) < 1.0);
  }
  SUBCASE("unit weights reduce to plain BCE") {
    std::mt19937_64 rng(137);
    for (int t = 0; t < 20; ++t) {
      const auto p = fixture::random_prob(rng, 7, 5, 0.0, 1.0);
      const auto m = fixture::random_blob_mask(rng, 7, 5, 0.5);
      const Grid<double> ones(7, 5, 1.0);
      CHECK(adaptive_loss(p, m, ones).value == doctest::Approx(oracle::reference_weighted_bce(p, m, ones)).epsilon(1e-14));
    }
  }
  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(139);
    for (int t = 0; t < 20; ++t) {
      const int h = 2 + int(rng() % 15), w = 2 + int(rng() % 15);
      const auto p = fixture::random_prob(rng, h, w);
      const auto m = fixture::random_blob_mask(rng, h, w, 0.5);
      const auto wm = weight_map(m, 0.6 + 0.4 * double(rng() % 100) / 100.0, 3.0);
      const auto r = adaptive_loss(p, m, wm);
      auto f = [&](const Grid<double>& q) { return oracle::reference_weighted_bce(q, m, wm); };
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(oracle::relative_error(r.grad[i], oracle::central_difference(f, p, i, 1e-4)) < 1e-4);
      }
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(adaptive_loss(Grid<double>(2, 2, 0.5), Mask(2, 3, 1), Grid<double>(2, 2, 1.0)), Error);
    CHECK_THROWS_AS(adaptive_loss(Grid<double>(2, 2, 0.5), Mask(2, 2, 1), Grid<double>(1, 2, 1.0)), Error);
  }
}
