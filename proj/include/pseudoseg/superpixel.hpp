#pragma once

// Superpixel generation (SNIC-style), ingestion of external label maps, and
// per-superpixel colour statistics and adjacency.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoseg/grid.hpp"
#include "pseudoseg/ndio.hpp"

namespace pseudoseg {

// CIELAB under D65.
struct LabColor {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

inline double squared_distance(const LabColor& x, const LabColor& y) {
  const double dl = x.l - y.l, da = x.a - y.a, db = x.b - y.b;
  return dl * dl + da * da + db * db;
}

// sRGB (8-bit, gamma encoded) -> linear -> XYZ (D65) -> CIELAB.
LabColor rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
Grid<LabColor> image_to_lab(const RgbImage& image);

struct SuperpixelEdge {
  int m = 0;  // m < n
  int n = 0;
  double w = 0.0;  // squared Lab distance between the two mean colours

  friend bool operator==(const SuperpixelEdge&, const SuperpixelEdge&) = default;
};

struct SuperpixelSeg {
  Grid<std::int32_t> labels;  // 0..k-1, every label 4-connected
  int k = 0;
  std::vector<LabColor> mean_color;
  std::vector<int> sizes;
  std::vector<SuperpixelEdge> edges;  // 4-adjacency, sorted by (m, n)
  Grid<LabColor> pixel_color;         // Lab colour of every pixel
};

struct SnicOptions {
  int k_target = 300;
  double compactness = 10.0;
};

// Priority-queue region growing from a regular seed grid. Ties in the queue
// resolve by insertion order, so the result is a pure function of the input.
SuperpixelSeg snic_superpixels(const RgbImage& image, const SnicOptions& options = {});

// Relabels an arbitrary non-negative label map to 0..k-1, splitting
// 4-disconnected pieces. Components are numbered by (original label, first
// raster position), so an already contiguous connected map is unchanged.
// Throws NegativeLabel or ShapeMismatch.
SuperpixelSeg ingest_labels(const Grid<std::int32_t>& labels, const RgbImage& image);

// Sidecar: {"K", "sizes", "mean_color", "edges": [[m, n, w], ...]}.
std::string superpixel_stats_json(const SuperpixelSeg& seg);

}  // namespace pseudoseg
