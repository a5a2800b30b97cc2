#pragma once

// Random instance generators shared by the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <random>
#include <vector>

#include <json.hpp>

#include "pseudoseg/affinity.hpp"
#include "pseudoseg/grid.hpp"
#include "pseudoseg/ndio.hpp"
#include "pseudoseg/sgmloss.hpp"
#include "pseudoseg/superpixel.hpp"

namespace fixture {

using pseudoseg::Grid;
using pseudoseg::Mask;
using pseudoseg::RgbImage;

// Nearest-seed label map with up to max_regions seeds; ingest_labels later
// splits anything disconnected.
inline Grid<std::int32_t> voronoi_labels(std::mt19937_64& rng, int h, int w, int regions) {
  std::vector<std::pair<int, int>> seeds;
  for (int s = 0; s < regions; ++s) seeds.push_back({int(rng() % h), int(rng() % w)});
  Grid<std::int32_t> labels(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int best = 0;
      long best_d = -1;
      for (int s = 0; s < regions; ++s) {
        const long d = long(r - seeds[s].first) * (r - seeds[s].first) +
                       long(c - seeds[s].second) * (c - seeds[s].second);
        if (best_d < 0 || d < best_d) best_d = d, best = s;
      }
      labels(r, c) = best;
    }
  }
  return labels;
}

// One base colour per region plus per-pixel jitter, so colour similarities
// are neither all 1 nor vanishing.
inline RgbImage region_image(std::mt19937_64& rng, const Grid<std::int32_t>& labels, int jitter) {
  int regions = 0;
  for (auto l : labels.values()) regions = std::max(regions, l + 1);
  std::vector<std::array<int, 3>> base(regions);
  for (auto& b : base) b = {int(rng() % 256), int(rng() % 256), int(rng() % 256)};
  RgbImage img{labels.rows(), labels.cols(), {}};
  std::uniform_int_distribution<int> j(-jitter, jitter);
  for (auto l : labels.values()) {
    for (int ch = 0; ch < 3; ++ch) {
      img.rgb.push_back(static_cast<std::uint8_t>(std::clamp(base[l][ch] + j(rng), 0, 255)));
    }
  }
  return img;
}

inline Grid<double> random_prob(std::mt19937_64& rng, int h, int w, double lo = 0.05, double hi = 0.95) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid<double> p(h, w);
  for (auto& v : p.values()) v = u(rng);
  return p;
}

inline Mask random_rect_mask(std::mt19937_64& rng, int h, int w) {
  const int r0 = rng() % h, c0 = rng() % w;
  const int r1 = r0 + rng() % (h - r0), c1 = c0 + rng() % (w - c0);
  Mask m(h, w, 0);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) m(r, c) = 1;
  }
  return m;
}

inline Mask random_blob_mask(std::mt19937_64& rng, int h, int w, double fill) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mask m(h, w, 0);
  for (auto& v : m.values()) v = u(rng) < fill;
  return m;
}

// Features for an n x n patch grid with `objects` planted square objects,
// each with its own direction, on a shared background direction.
inline pseudoseg::PatchGrid planted_features(std::mt19937_64& rng, int n, int dim, int objects) {
  std::normal_distribution<float> g;
  auto direction = [&] {
    std::vector<float> v(dim);
    for (auto& x : v) x = g(rng);
    return v;
  };
  const auto bg = direction();
  Grid<std::int32_t> owner(n, n, -1);
  for (int o = 0; o < objects; ++o) {
    const int size = 2 + int(rng() % std::max(1, n / 3));
    const int r0 = 1 + int(rng() % std::max(1, n - size - 1));
    const int c0 = 1 + int(rng() % std::max(1, n - size - 1));
    for (int r = r0; r < std::min(n - 1, r0 + size); ++r) {
      for (int c = c0; c < std::min(n - 1, c0 + size); ++c) owner(r, c) = o;
    }
  }
  std::vector<std::vector<float>> dirs;
  for (int o = 0; o < objects; ++o) dirs.push_back(direction());
  std::vector<float> values;
  for (int i = 0; i < n * n; ++i) {
    const auto& d = owner[i] < 0 ? bg : dirs[owner[i]];
    for (int k = 0; k < dim; ++k) values.push_back(d[k] + 0.05f * g(rng));
  }
  return pseudoseg::PatchGrid(n, dim, values);
}

struct SgmInstance {
  RgbImage image;
  pseudoseg::SuperpixelSeg seg;
  Grid<double> prob;
  Mask mask;
};

// Random instance of at most max_side x max_side pixels and max_regions
// superpixels. The L1 soft term has a kink wherever P_k equals its target,
// so instances closer than `margin` to a kink are redrawn; finite
// differences are meaningless there.
inline SgmInstance sgm_instance(std::mt19937_64& rng, int max_side, int max_regions,
                                const pseudoseg::HyperParams& hp, const pseudoseg::SgmOptions& opts,
                                double margin = 1e-3) {
  while (true) {
    const int h = 4 + int(rng() % (max_side - 3)), w = 4 + int(rng() % (max_side - 3));
    const int regions = 2 + int(rng() % (max_regions - 1));
    SgmInstance inst;
    auto labels = voronoi_labels(rng, h, w, regions);
    inst.image = region_image(rng, labels, 6);
    inst.seg = pseudoseg::ingest_labels(labels, inst.image);
    if (inst.seg.k > max_regions) continue;
    inst.prob = random_prob(rng, h, w);
    inst.mask = random_rect_mask(rng, h, w);
    const auto report = pseudoseg::sgm_loss(inst.prob, inst.mask, inst.seg, hp, opts);
    bool near_kink = false;
    for (int k = 0; k < inst.seg.k; ++k) {
      near_kink |= std::abs(report.p_super[k] - report.p_hat[k]) < margin;
    }
    if (!near_kink) return inst;
  }
}

// Writes `count` synthetic images (n x n patches of `patch` pixels each) with
// features, RGB image, probability map and three checkpoint mask stacks, plus
// one manifest listing them all with paths relative to `dir`. Returns the
// manifest path.
inline std::filesystem::path write_dataset(const std::filesystem::path& dir, int count,
                                           std::uint64_t seed, int n = 8, int patch = 4) {
  namespace fs = std::filesystem;
  using namespace pseudoseg;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  fs::create_directories(dir / "inputs");
  auto listing = nlohmann::json::array();
  for (int img = 0; img < count; ++img) {
    const std::string id = "synthetic_" + std::to_string(img);
    const int side = n * patch, dim = 6;
    // Two rectangular objects on background, in patch units.
    Grid<std::int32_t> owner(n, n, 0);
    for (int o = 1; o <= 2; ++o) {
      const int size = 2 + int(rng() % 2);
      const int r0 = 1 + int(rng() % (n - size - 1)), c0 = 1 + int(rng() % (n - size - 1));
      for (int r = r0; r < r0 + size; ++r) {
        for (int c = c0; c < c0 + size; ++c) owner(r, c) = o;
      }
    }
    std::vector<std::vector<float>> dirs(3, std::vector<float>(dim));
    for (auto& d : dirs) {
      for (auto& x : d) x = g(rng);
    }
    std::vector<float> feats;
    for (int i = 0; i < n * n; ++i) {
      for (int k = 0; k < dim; ++k) feats.push_back(dirs[owner[i]][k] + 0.05f * g(rng));
    }
    write_array(ArrayFile::from<float>({std::size_t(n), std::size_t(n), std::size_t(dim)}, feats),
                dir / "inputs" / (id + "_features.npy"));

    const std::array<std::array<int, 3>, 3> palette = {
        {{40, 90, 40}, {200, 40, 40}, {40, 60, 210}}};
    std::vector<std::uint8_t> rgb;
    Grid<double> prob(side, side);
    std::uniform_int_distribution<int> jitter(-8, 8);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const int o = owner(r / patch, c / patch);
        for (int ch = 0; ch < 3; ++ch) rgb.push_back(std::uint8_t(std::clamp(palette[o][ch] + jitter(rng), 0, 255)));
        prob(r, c) = o ? 0.7 + u(rng) : 0.05 + u(rng);
      }
    }
    write_image_ppm(ArrayFile::from<std::uint8_t>({std::size_t(side), std::size_t(side), 3}, rgb),
                    dir / "inputs" / (id + ".ppm"));
    write_array(from_grid(prob), dir / "inputs" / (id + "_prob.npy"));

    auto checkpoints = nlohmann::json::array();
    for (int e = 1; e <= 3; ++e) {
      std::vector<Mask> stack;
      for (int o = 1; o <= 2; ++o) {
        Mask m(side, side, 0);
        for (int r = 0; r < side; ++r) {
          for (int c = 0; c < side; ++c) m(r, c) = owner(r / patch, c / patch) == o;
        }
        // Earlier checkpoints are noisier, the second object more so.
        for (int k = 0; k < (3 - e) * o * 3; ++k) m[rng() % m.size()] ^= 1;
        stack.push_back(m);
      }
      const std::string name = id + "_checkpoint_" + std::to_string(e) + ".npy";
      write_array(from_mask_stack(stack, side, side), dir / "inputs" / name);
      checkpoints.push_back("inputs/" + name);
    }
    listing.push_back({{"image_id", id},
                       {"features", "inputs/" + id + "_features.npy"},
                       {"image", "inputs/" + id + ".ppm"},
                       {"prob_map", "inputs/" + id + "_prob.npy"},
                       {"checkpoints", checkpoints}});
  }
  write_text(listing.dump(2), dir / "manifest.json");
  return dir / "manifest.json";
}

// Every regular file under root, keyed by relative path, with its bytes.
inline std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    out[std::filesystem::relative(entry.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

}  // namespace fixture
