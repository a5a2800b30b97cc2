#include "pseudoseg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <tuple>
#include <utility>

#include <json.hpp>

namespace pseudoseg {

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ; the reference white is the image of
// RGB (1,1,1) so white maps to a = b = 0 exactly.
constexpr double kRgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                    {0.2126729, 0.7151522, 0.0721750},
                                    {0.0193339, 0.1191920, 0.9503041}};

double srgb_to_linear(std::uint8_t v) {
  const double c = v / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kEps = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

constexpr int kDr[4] = {-1, 0, 0, 1};
constexpr int kDc[4] = {0, -1, 1, 0};

void require_image_extent(const Grid<std::int32_t>& labels, const RgbImage& image) {
  if (labels.rows() != image.height || labels.cols() != image.width) {
    throw Error(ErrorCode::ShapeMismatch,
                "label map " + std::to_string(labels.rows()) + "x" +
                    std::to_string(labels.cols()) + " vs image " +
                    std::to_string(image.height) + "x" + std::to_string(image.width));
  }
}

// Labels must already be contiguous and connected.
SuperpixelSeg build_stats(Grid<std::int32_t> labels, int k, Grid<LabColor> colors) {
  SuperpixelSeg seg;
  seg.k = k;
  seg.sizes.assign(k, 0);
  std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    ++seg.sizes[l];
    sums[l][0] += colors[i].l;
    sums[l][1] += colors[i].a;
    sums[l][2] += colors[i].b;
  }
  seg.mean_color.resize(k);
  for (int l = 0; l < k; ++l) {
    const double n = seg.sizes[l];
    seg.mean_color[l] = {sums[l][0] / n, sums[l][1] / n, sums[l][2] / n};
  }
  std::set<std::pair<int, int>> pairs;
  for (int r = 0; r < labels.rows(); ++r) {
    for (int c = 0; c < labels.cols(); ++c) {
      const int here = labels(r, c);
      if (c + 1 < labels.cols() && labels(r, c + 1) != here) {
        pairs.emplace(std::min(here, labels(r, c + 1)), std::max(here, labels(r, c + 1)));
      }
      if (r + 1 < labels.rows() && labels(r + 1, c) != here) {
        pairs.emplace(std::min(here, labels(r + 1, c)), std::max(here, labels(r + 1, c)));
      }
    }
  }
  seg.edges.reserve(pairs.size());
  for (const auto& [m, n] : pairs) {
    seg.edges.push_back({m, n, squared_distance(seg.mean_color[m], seg.mean_color[n])});
  }
  seg.labels = std::move(labels);
  seg.pixel_color = std::move(colors);
  return seg;
}

// 4-connected components numbered by (source label, first raster position).
std::pair<Grid<std::int32_t>, int> split_components(const Grid<std::int32_t>& labels) {
  const int rows = labels.rows(), cols = labels.cols();
  Grid<std::int32_t> comp(rows, cols, -1);
  struct Component {
    std::int32_t source;
    std::size_t first;
  };
  std::vector<Component> components;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.push_back({labels[start], start});
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(p / cols), c = static_cast<int>(p % cols);
      for (int d = 0; d < 4; ++d) {
        const int rr = r + kDr[d], cc = c + kDc[d];
        if (!labels.contains(rr, cc)) continue;
        const std::size_t q = labels.index(rr, cc);
        if (comp[q] < 0 && labels[q] == labels[start]) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  std::vector<int> order(components.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return std::tie(components[x].source, components[x].first) <
           std::tie(components[y].source, components[y].first);
  });
  std::vector<std::int32_t> rank(components.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<std::int32_t>(i);
  for (auto& v : comp.values()) v = rank[v];
  return {std::move(comp), static_cast<int>(components.size())};
}

}  // namespace

LabColor rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double lin[3] = {srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b)};
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    const double white = kRgbToXyz[i][0] + kRgbToXyz[i][1] + kRgbToXyz[i][2];
    xyz[i] = (kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2]) /
             white;
  }
  const double fx = lab_f(xyz[0]), fy = lab_f(xyz[1]), fz = lab_f(xyz[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Grid<LabColor> image_to_lab(const RgbImage& image) {
  if (image.rgb.size() != std::size_t(image.height) * std::size_t(image.width) * 3) {
    throw Error(ErrorCode::ShapeMismatch, "RGB buffer size does not match extents");
  }
  Grid<LabColor> lab(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const auto px = image.pixel(r, c);
      lab(r, c) = rgb_to_lab(px[0], px[1], px[2]);
    }
  }
  return lab;
}

SuperpixelSeg snic_superpixels(const RgbImage& image, const SnicOptions& options) {
  const int rows = image.height, cols = image.width;
  const long long n_pixels = static_cast<long long>(rows) * cols;
  if (options.k_target < 1 || n_pixels < options.k_target) {
    throw Error(ErrorCode::InvalidArgument, "k_target must lie in [1, H*W]");
  }
  if (!(options.compactness > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "compactness must be positive");
  }
  auto lab = image_to_lab(image);

  // Seed grid: strips of roughly sqrt(area / k) pixels, never more seeds than k.
  const double step = std::sqrt(static_cast<double>(n_pixels) / options.k_target);
  int xs = std::clamp(static_cast<int>(std::lround(cols / step)), 1, cols);
  int ys = std::clamp(static_cast<int>(std::lround(rows / step)), 1, rows);
  while (static_cast<long long>(xs) * ys > options.k_target) {
    if (xs >= ys) --xs; else --ys;
  }
  const int k = xs * ys;

  struct Centroid {
    double r = 0, c = 0, l = 0, a = 0, b = 0;
    int count = 0;
  };
  std::vector<Centroid> sums(k);
  struct Node {
    double dist;
    std::uint64_t seq;
    int pixel;
    int label;
  };
  struct NodeOrder {
    bool operator()(const Node& x, const Node& y) const {
      if (x.dist != y.dist) return x.dist > y.dist;
      return x.seq > y.seq;
    }
  };
  std::priority_queue<Node, std::vector<Node>, NodeOrder> queue;
  std::uint64_t seq = 0;
  for (int j = 0; j < ys; ++j) {
    for (int i = 0; i < xs; ++i) {
      const int r = static_cast<int>((j + 0.5) * rows / ys);
      const int c = static_cast<int>((i + 0.5) * cols / xs);
      queue.push({0.0, seq++, r * cols + c, j * xs + i});
    }
  }

  const double spatial_weight =
      options.compactness * options.compactness * k / static_cast<double>(n_pixels);
  Grid<std::int32_t> labels(rows, cols, -1);
  while (!queue.empty()) {
    const Node top = queue.top();
    queue.pop();
    if (labels[top.pixel] >= 0) continue;
    labels[top.pixel] = top.label;
    const int r = top.pixel / cols, c = top.pixel % cols;
    auto& s = sums[top.label];
    const auto& px = lab[top.pixel];
    s.r += r;
    s.c += c;
    s.l += px.l;
    s.a += px.a;
    s.b += px.b;
    ++s.count;
    const double inv = 1.0 / s.count;
    for (int d = 0; d < 4; ++d) {
      const int rr = r + kDr[d], cc = c + kDc[d];
      if (!labels.contains(rr, cc)) continue;
      const std::size_t q = labels.index(rr, cc);
      if (labels[q] >= 0) continue;
      const LabColor mean{s.l * inv, s.a * inv, s.b * inv};
      const double dr = rr - s.r * inv, dc = cc - s.c * inv;
      const double dist = squared_distance(lab[q], mean) + (dr * dr + dc * dc) * spatial_weight;
      queue.push({dist, seq++, static_cast<int>(q), top.label});
    }
  }
  auto [components, count] = split_components(labels);
  return build_stats(std::move(components), count, std::move(lab));
}

SuperpixelSeg ingest_labels(const Grid<std::int32_t>& labels, const RgbImage& image) {
  require_image_extent(labels, image);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw Error(ErrorCode::NegativeLabel,
                  "negative superpixel label " + std::to_string(labels[i]) + " at pixel " +
                      std::to_string(i));
    }
  }
  auto [components, count] = split_components(labels);
  return build_stats(std::move(components), count, image_to_lab(image));
}

std::string superpixel_stats_json(const SuperpixelSeg& seg) {
  nlohmann::json j;
  j["K"] = seg.k;
  j["sizes"] = seg.sizes;
  auto colors = nlohmann::json::array();
  for (const auto& c : seg.mean_color) colors.push_back({c.l, c.a, c.b});
  j["mean_color"] = std::move(colors);
  auto edges = nlohmann::json::array();
  for (const auto& e : seg.edges) edges.push_back({e.m, e.n, e.w});
  j["edges"] = std::move(edges);
  return j.dump();
}

}  // namespace pseudoseg
