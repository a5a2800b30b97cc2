#pragma once

// Stability scoring of final-checkpoint masks against earlier checkpoints,
// boundary-band weight maps, and the weighted self-training loss.

#include <limits>
#include <string>
#include <vector>

#include "pseudoseg/grid.hpp"
#include "pseudoseg/sgmloss.hpp"

namespace pseudoseg {

inline constexpr double kNoBoundary = std::numeric_limits<double>::infinity();

struct TaggedMask {
  std::string image_id;
  Mask mask;
};

struct CheckpointMaskSet {
  int checkpoint_id = 0;  // 1..e
  std::vector<TaggedMask> masks;
};

// |a & b| / |a | b|, or 0 for two empty masks. Throws ShapeMismatch.
double iou(const Mask& a, const Mask& b);

// Sum over the intermediate checkpoints of the best IoU achieved by any mask
// of that checkpoint tagged with the same image id.
double stability_score(const TaggedMask& last,
                       const std::vector<CheckpointMaskSet>& intermediates);

// Min-max normalisation into [epsilon, 1]; a constant list maps to all 1.
std::vector<double> minmax_normalize(const std::vector<double>& scores, double epsilon);

// Pixels on either side of the mask contour (4-neighbour test) with the
// other class as a neighbour.
Mask boundary_pixels(const Mask& mask);

// Exact Euclidean distance to the nearest boundary pixel, by two separable
// passes of the lower-envelope squared distance transform. Every entry is
// kNoBoundary when the mask is all foreground or all background.
Grid<double> distance_transform(const Mask& mask);

// z_bar inside the band d <= d_hat, 1 elsewhere.
Grid<double> weight_map(const Mask& mask, double z_bar, double d_hat);
Grid<double> weight_map_from_distance(const Grid<double>& distance, double z_bar, double d_hat);

struct AdaptiveLoss {
  double value = 0.0;
  Grid<double> grad;
};

// Per-pixel BCE weighted by the weight map and averaged over all pixels.
AdaptiveLoss adaptive_loss(const Grid<double>& prob, const Mask& target,
                           const Grid<double>& weights);

}  // namespace pseudoseg
