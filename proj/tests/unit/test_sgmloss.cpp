#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pseudoseg/sgmloss.hpp"

using namespace pseudoseg;

namespace {

const double kLn2 = std::log(2.0);

SuperpixelSeg seg_from(const Grid<std::int32_t>& labels, const RgbImage& img) {
  return ingest_labels(labels, img);
}

RgbImage grey(int h, int w, std::uint8_t v) {
  return RgbImage{h, w, std::vector<std::uint8_t>(std::size_t(h) * w * 3, v)};
}

SuperpixelLabeling labeling(std::initializer_list<SuperpixelLabel> y) {
  SuperpixelLabeling out{y, 0};
  for (auto v : y) out.n_labeled += v != SuperpixelLabel::Unlabeled;
  return out;
}

SquareMatrix matrix(int n, std::initializer_list<double> v) {
  SquareMatrix m(n, 0.0);
  m.values.assign(v);
  return m;
}

// Max relative error between the analytic gradient and central differences
// of `f`, over every pixel.
double max_grad_error(const Grid<double>& prob, const Grid<double>& grad,
                      const std::function<double(const Grid<double>&)>& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double fd = oracle::central_difference(f, prob, i, 1e-4);
    worst = std::max(worst, oracle::relative_error(grad[i], fd));
  }
  return worst;
}

}  // namespace

TEST_CASE("colour similarity") {
  const LabColor mu{50, 10, -10};
  CHECK(color_similarity(mu, mu, 100) == 1.0);
  CHECK(color_similarity(mu, {60, 10, -10}, 100) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  double prev = 1.0;
  for (double d = 1; d < 200; d *= 1.5) {
    const double s = color_similarity(mu, {50 + d, 10, -10}, 100);
    CHECK(s < prev);
    CHECK(s > 0.0);
    prev = s;
  }
  CHECK_THROWS_AS(color_similarity(mu, mu, 0.0), Error);
}

TEST_CASE("superpixel probabilities") {
  SUBCASE("uniform colour gives the plain mean") {
    const auto seg = seg_from(Grid<std::int32_t>(1, 2, {0, 0}), grey(1, 2, 128));
    const auto sp = superpixel_prob(Grid<double>(1, 2, {0.2, 0.8}), seg, 100.0);
    CHECK(sp.p[0] == doctest::Approx(0.5));
    CHECK(sp.upsilon[0] == doctest::Approx(2.0));
  }
  SUBCASE("constant probability is reproduced for any colours") {
    std::mt19937_64 rng(71);
    const auto labels = fixture::voronoi_labels(rng, 9, 11, 5);
    const auto seg = seg_from(labels, fixture::region_image(rng, labels, 40));
    const auto sp = superpixel_prob(Grid<double>(9, 11, 0.3), seg, 100.0);
    for (double p : sp.p) CHECK(p == 0.3);
  }
  SUBCASE("explicit similarity weights") {
    const auto seg = seg_from(Grid<std::int32_t>(1, 2, {0, 0}), grey(1, 2, 0));
    const auto pm = clamp_probabilities(Grid<double>(1, 2, {1.0, 0.0}));
    const auto sp = superpixel_prob(pm, seg, Grid<double>(1, 2, {1.0, std::exp(-1.0)}));
    CHECK(sp.p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-5));
  }
}

TEST_CASE("clamping") {
  const auto pm = clamp_probabilities(Grid<double>(1, 3, {-1.0, 0.5, 2.0}));
  CHECK(pm[0] == kProbFloor);
  CHECK(pm[1] == 0.5);
  CHECK(pm[2] == 1.0 - kProbFloor);
  CHECK_THROWS_AS(clamp_probabilities(Grid<double>(1, 1, std::nan(""))), Error);
}

TEST_CASE("superpixel labelling") {
  const auto seg = seg_from(Grid<std::int32_t>(2, 2, {0, 0, 1, 1}), grey(2, 2, 9));
  auto all = label_superpixels(Mask(2, 2, 1), seg);
  CHECK(all.n_labeled == 2);
  for (auto y : all.y) CHECK(y == SuperpixelLabel::Foreground);
  auto none = label_superpixels(Mask(2, 2, 0), seg);
  for (auto y : none.y) CHECK(y == SuperpixelLabel::Background);
  auto mixed = label_superpixels(Mask(2, 2, {1, 0, 1, 1}), seg);
  CHECK(mixed.y[0] == SuperpixelLabel::Unlabeled);
  CHECK(mixed.y[1] == SuperpixelLabel::Foreground);
  CHECK(mixed.n_labeled == 1);
}

TEST_CASE("hard loss") {
  const auto one = hard_loss({1.0 - kProbFloor}, labeling({SuperpixelLabel::Foreground}));
  CHECK(one.value == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(hard_loss({0.5}, labeling({SuperpixelLabel::Foreground})).value == doctest::Approx(kLn2));
  const auto two = hard_loss({0.5, 0.5}, labeling({SuperpixelLabel::Foreground, SuperpixelLabel::Background}));
  CHECK(two.value == doctest::Approx(kLn2));
  CHECK(two.d_p[0] == doctest::Approx(-1.0));
  CHECK(two.d_p[1] == doctest::Approx(1.0));
  const auto none = hard_loss({0.3, 0.9}, labeling({SuperpixelLabel::Unlabeled, SuperpixelLabel::Unlabeled}));
  CHECK(none.value == 0.0);
  CHECK(none.d_p == std::vector<double>{0.0, 0.0});
}

TEST_CASE("affinity tree examples") {
  const auto pair = build_affinity_tree(2, {{0, 1, 0.0}});
  CHECK(pair.mst_edges.size() == 1);
  CHECK(pair.pathmax(0, 1) == 0.0);

  const auto chain = build_affinity_tree(3, {{0, 1, 100.0}, {1, 2, 300.0}});
  CHECK(chain.pathmax(0, 2) == 300.0);
  CHECK(chain.pathmax(2, 0) == 300.0);
  CHECK(chain.pathmax(0, 1) == 100.0);

  const auto tri = build_affinity_tree(3, {{0, 1, 1.0}, {1, 2, 2.0}, {0, 2, 3.0}});
  REQUIRE(tri.mst_edges.size() == 2);
  CHECK(tri.mst_edges[0].w == 1.0);
  CHECK(tri.mst_edges[1].w == 2.0);
  CHECK(tri.pathmax(0, 2) == 2.0);

  const auto split = build_affinity_tree(3, {{0, 1, 5.0}});
  CHECK(split.pathmax(0, 2) == kUnreachable);
  CHECK(split.pathmax(2, 2) == 0.0);

  CHECK_THROWS_AS(build_affinity_tree(2, {{0, 2, 1.0}}), Error);
  CHECK_THROWS_AS(build_affinity_tree(2, {{0, 1, -1.0}}), Error);
}

TEST_CASE("pathmax agrees with DFS on the tree and minimax over the graph") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> w(0.0, 500.0);
  for (int t = 0; t < 100; ++t) {
    const int k = 1 + int(rng() % 30);
    std::vector<SuperpixelEdge> edges;
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        // Integer weights make ties common.
        if (rng() % 3 == 0) edges.push_back({a, b, t % 2 ? std::floor(w(rng) / 50) : w(rng)});
      }
    }
    const auto tree = build_affinity_tree(k, edges);
    CHECK(tree.pathmax.values == oracle::dfs_pathmax(k, tree.mst_edges));
    CHECK(tree.pathmax.values == oracle::minimax_paths(k, edges));
    double total = 0.0;
    for (const auto& e : tree.mst_edges) total += e.w;
    CHECK(total == doctest::Approx(oracle::prim_forest_weight(k, edges)));
  }
}

TEST_CASE("global affinity") {
  const auto chain = build_affinity_tree(3, {{0, 1, 100.0}, {1, 2, 300.0}});
  const auto psi = global_affinity(chain, 200.0);
  CHECK(psi(0, 0) == 1.0);
  CHECK(psi(0, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));
  CHECK(std::abs(psi(0, 2) - 0.223130) < 1e-6);
  const auto split = global_affinity(build_affinity_tree(2, {}), 200.0);
  CHECK(split(0, 1) == 0.0);

  // Larger path maxima never raise psi.
  std::mt19937_64 rng(79);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + int(rng() % 10);
    std::vector<SuperpixelEdge> edges;
    for (int a = 0; a + 1 < k; ++a) edges.push_back({a, a + 1, double(rng() % 400)});
    const auto tree = build_affinity_tree(k, edges);
    const auto g = global_affinity(tree, 200.0);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      for (std::size_t j = 0; j < g.values.size(); ++j) {
        if (tree.pathmax.values[i] <= tree.pathmax.values[j]) CHECK(g.values[i] >= g.values[j]);
      }
    }
  }
}

TEST_CASE("soft labels") {
  CHECK(soft_labels({0.3}, matrix(1, {1.0})) == std::vector<double>{0.3});
  const auto two = soft_labels({1.0, 0.0}, matrix(2, {1.0, 1.0, 1.0, 1.0}));
  CHECK(two[0] == doctest::Approx(0.5));
  CHECK(two[1] == doctest::Approx(0.5));
  const auto no_self = soft_labels({1.0, 0.0}, matrix(2, {1.0, 1.0, 1.0, 1.0}), false);
  CHECK(no_self[0] == 0.0);
  CHECK(no_self[1] == 1.0);
  const auto psi = matrix(3, {1.0, 0.2, 0.0, 0.2, 1.0, 0.7, 0.0, 0.7, 1.0});
  for (double v : soft_labels({0.4, 0.4, 0.4}, psi)) CHECK(v == 0.4);
  // Isolated node without self term keeps its own probability.
  CHECK(soft_labels({0.9, 0.1}, matrix(2, {1.0, 0.0, 0.0, 1.0}), false) == std::vector<double>{0.9, 0.1});
}

TEST_CASE("soft loss") {
  const auto zero = soft_loss({0.3, 0.6}, {0.3, 0.6});
  CHECK(zero.value == 0.0);
  CHECK(zero.d_p == std::vector<double>{0.0, 0.0});
  const auto half = soft_loss({1.0, 0.0}, {0.5, 0.5});
  CHECK(half.value == doctest::Approx(0.5));
  CHECK(half.d_p[0] == doctest::Approx(0.5));
  CHECK(half.d_p[1] == doctest::Approx(-0.5));
  CHECK(soft_loss({0.1, 0.9, 0.4}, {0.2, 0.5, 0.4}).value ==
        doctest::Approx(soft_loss({0.9, 0.4, 0.1}, {0.5, 0.4, 0.2}).value).epsilon(1e-15));
}

TEST_CASE("soft loss through the target matches finite differences") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (bool self : {true, false}) {
    for (int t = 0; t < 20; ++t) {
      const int k = 2 + int(rng() % 6);
      SquareMatrix psi(k, 0.0);
      for (int a = 0; a < k; ++a) {
        psi(a, a) = 1.0;
        for (int b = a + 1; b < k; ++b) psi(a, b) = psi(b, a) = u(rng);
      }
      std::vector<double> p(k);
      for (auto& v : p) v = u(rng);
      const auto term = soft_loss_through_target(p, psi, self);
      for (int j = 0; j < k; ++j) {
        auto f = [&](double x) {
          auto q = p;
          q[j] = x;
          return soft_loss(q, soft_labels(q, psi, self)).value;
        };
        const double fd = (f(p[j] + 1e-6) - f(p[j] - 1e-6)) / 2e-6;
        CHECK(std::abs(term.d_p[j] - fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("sgm loss examples") {
  const HyperParams hp;
  SUBCASE("perfect agreement") {
    const auto seg = seg_from(Grid<std::int32_t>(2, 2, {0, 0, 1, 1}), grey(2, 2, 77));
    const auto r = sgm_loss(Grid<double>(2, 2, 1.0 - kProbFloor), Mask(2, 2, 1), seg, hp);
    CHECK(r.hard == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(r.soft == 0.0);
    CHECK(r.total == r.hard + r.soft);
    CHECK(r.n_labeled == 2);
  }
  SUBCASE("every superpixel mixed") {
    const auto seg = seg_from(Grid<std::int32_t>(2, 4, {0, 0, 1, 1, 0, 0, 1, 1}), grey(2, 4, 77));
    const Mask checker(2, 4, {1, 0, 1, 0, 0, 1, 0, 1});
    std::mt19937_64 rng(89);
    const auto r = sgm_loss(fixture::random_prob(rng, 2, 4), checker, seg, hp);
    CHECK(r.no_labeled_superpixels);
    CHECK(r.hard == 0.0);
    CHECK(r.total == r.soft);
  }
  SUBCASE("shape errors") {
    const auto seg = seg_from(Grid<std::int32_t>(2, 2, 0), grey(2, 2, 77));
    CHECK_THROWS_AS(sgm_loss(Grid<double>(2, 3, 0.5), Mask(2, 2, 1), seg, hp), Error);
    CHECK_THROWS_AS(sgm_loss(Grid<double>(2, 2, 0.5), Mask(3, 2, 1), seg, hp), Error);
  }
}

TEST_CASE("sgm loss agrees with the from-definition evaluation") {
  std::mt19937_64 rng(97);
  const HyperParams hp;
  for (bool self : {true, false}) {
    for (int t = 0; t < 25; ++t) {
      const int h = 4 + int(rng() % 13), w = 4 + int(rng() % 13);
      const auto labels = fixture::voronoi_labels(rng, h, w, 2 + int(rng() % 7));
      const auto image = fixture::region_image(rng, labels, 10);
      const auto seg = ingest_labels(labels, image);
      const auto prob = fixture::random_prob(rng, h, w, -0.1, 1.1);
      const auto mask = fixture::random_rect_mask(rng, h, w);
      const auto r = sgm_loss(prob, mask, seg, hp, {self, false});
      const auto ref = oracle::reference_sgm(prob, mask, seg.labels, image, hp.alpha1, hp.alpha2, self);
      CHECK(r.hard == doctest::Approx(ref.hard).epsilon(1e-6));
      CHECK(r.soft == doctest::Approx(ref.soft).epsilon(1e-6));
      CHECK(r.total == r.hard + r.soft);
      for (int k = 0; k < seg.k; ++k) CHECK(r.p_hat[k] == doctest::Approx(ref.p_hat[k]).epsilon(1e-6));
    }
  }
}

TEST_CASE("soft term vanishes for constant probability maps") {
  std::mt19937_64 rng(101);
  const HyperParams hp;
  for (int t = 0; t < 20; ++t) {
    const auto labels = fixture::voronoi_labels(rng, 10, 10, 6);
    const auto seg = ingest_labels(labels, fixture::region_image(rng, labels, 20));
    const double c = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const auto r = sgm_loss(Grid<double>(10, 10, c), fixture::random_rect_mask(rng, 10, 10), seg, hp);
    CHECK(r.soft == 0.0);
    for (double p : r.p_super) CHECK(p == c);
  }
}

TEST_CASE("sgm gradient matches finite differences") {
  std::mt19937_64 rng(103);
  const HyperParams hp;
  SUBCASE("through the soft targets") {
    const SgmOptions opts{true, true};
    for (int t = 0; t < 10; ++t) {
      const auto inst = fixture::sgm_instance(rng, 12, 6, hp, opts);
      const auto ctx = prepare_sgm(inst.seg, hp);
      const auto r = sgm_loss(ctx, inst.prob, inst.mask, opts);
      auto f = [&](const Grid<double>& p) { return sgm_loss(ctx, p, inst.mask, opts).total; };
      CHECK(max_grad_error(inst.prob, r.grad, f) < 1e-4);
    }
  }
  SUBCASE("detached targets differentiate the frozen-target loss") {
    const SgmOptions opts{true, false};
    for (int t = 0; t < 10; ++t) {
      const auto inst = fixture::sgm_instance(rng, 12, 6, hp, opts);
      const auto r = sgm_loss(inst.prob, inst.mask, inst.seg, hp, opts);
      const auto frozen = r.p_hat;
      auto f = [&](const Grid<double>& p) {
        return oracle::reference_sgm(p, inst.mask, inst.seg.labels, inst.image, hp.alpha1, hp.alpha2,
                                     true, &frozen)
            .total;
      };
      CHECK(max_grad_error(inst.prob, r.grad, f) < 1e-4);
    }
  }
}

TEST_CASE("nearest upsampling") {
  const Mask m(2, 2, {1, 0, 0, 1});
  const auto up = upsample_nearest(m, 4, 6);
  CHECK(up == Mask(4, 6, {1, 1, 1, 0, 0, 0,
                          1, 1, 1, 0, 0, 0,
                          0, 0, 0, 1, 1, 1,
                          0, 0, 0, 1, 1, 1}));
  CHECK(upsample_nearest(m, 2, 2) == m);
  CHECK_THROWS_AS(upsample_nearest(Mask(), 2, 2), Error);
}
