#pragma once

// Ranking of coarse patch masks by inner-vs-edge affinity contrast and top-Q
// selection.

#include <limits>
#include <vector>

#include "pseudoseg/affinity.hpp"
#include "pseudoseg/grid.hpp"

namespace pseudoseg {

// Rating given to masks without interior patches; ranks below every finite rating.
inline constexpr double kNoInteriorRating = -std::numeric_limits<double>::infinity();

struct InnerEdge {
  std::vector<int> inner;  // flat patch indices, ascending
  std::vector<int> edge;
};

struct ScoredMask {
  Mask mask;
  double rating = kNoInteriorRating;
  bool kept = false;
};

// Edge patches are mask patches with a background 8-neighbour or lying on
// the grid border; inner patches are the rest of the mask.
InnerEdge split_inner_edge(const Mask& m);

// Mean affinity over inner patches minus mean affinity over edge patches.
// Returns kNoInteriorRating when the mask has no inner patch.
double rate_mask(const Mask& m, const AffinityMap& a);

// Marks the ceil(q_percent/100 * count) best masks as kept. Ties on rating
// prefer larger area, then lower input index. Order of the input is preserved.
std::vector<ScoredMask> select_top_q(std::vector<ScoredMask> scored, double q_percent);

std::size_t top_q_count(std::size_t count, double q_percent);

}  // namespace pseudoseg
