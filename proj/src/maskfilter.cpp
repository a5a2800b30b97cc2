#include "pseudoseg/maskfilter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pseudoseg {

InnerEdge split_inner_edge(const Mask& m) {
  InnerEdge out;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      bool edge = false;
      for (int dr = -1; dr <= 1 && !edge; ++dr) {
        for (int dc = -1; dc <= 1 && !edge; ++dc) {
          if (dr == 0 && dc == 0) continue;
          // Off-grid neighbours count as background.
          edge = !m.contains(r + dr, c + dc) || !m(r + dr, c + dc);
        }
      }
      (edge ? out.edge : out.inner).push_back(static_cast<int>(m.index(r, c)));
    }
  }
  return out;
}

double rate_mask(const Mask& m, const AffinityMap& a) {
  require_same_shape(m, a, "rate_mask");
  const auto parts = split_inner_edge(m);
  if (parts.inner.empty()) return kNoInteriorRating;
  auto mean = [&](const std::vector<int>& idx) {
    double s = 0.0;
    for (int i : idx) s += a[static_cast<std::size_t>(i)];
    return s / static_cast<double>(idx.size());
  };
  return mean(parts.inner) - mean(parts.edge);
}

std::size_t top_q_count(std::size_t count, double q_percent) {
  if (!(q_percent > 0.0 && q_percent <= 100.0)) {
    throw Error(ErrorCode::InvalidArgument, "q_percent must lie in (0,100]");
  }
  // q * count / 100 keeps integer percentages exact before rounding up.
  const double want = std::ceil(q_percent * static_cast<double>(count) / 100.0);
  return std::min(count, static_cast<std::size_t>(want));
}

std::vector<ScoredMask> select_top_q(std::vector<ScoredMask> scored, double q_percent) {
  const std::size_t keep = top_q_count(scored.size(), q_percent);
  std::vector<std::size_t> area(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) area[i] = mask_area(scored[i].mask);

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double rx = scored[x].rating, ry = scored[y].rating;
    if (rx != ry) return rx > ry;
    if (area[x] != area[y]) return area[x] > area[y];
    return x < y;
  });
  for (auto& s : scored) s.kept = false;
  for (std::size_t i = 0; i < keep; ++i) scored[order[i]].kept = true;
  return scored;
}

}  // namespace pseudoseg
