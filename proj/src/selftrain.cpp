#include "pseudoseg/selftrain.hpp"

#include <algorithm>
#include <cmath>

namespace pseudoseg {

namespace {

// 1-D squared distance transform over the sampled function f (lower envelope
// of parabolas rooted at the finite samples). Entries of f equal to +inf are
// not sites. Output is +inf everywhere when there are no sites.
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v;     // parabola roots in the envelope
  std::vector<double> z;  // z[i] is where v[i] starts dominating; z.back() = +inf
  v.reserve(n);
  z.reserve(n + 1);
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (v.empty()) {
      v.push_back(q);
      z = {-kNoBoundary, kNoBoundary};
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    double s = intersect(v.back());
    // z[0] = -inf keeps at least one parabola in the envelope.
    while (s <= z[v.size() - 1]) {
      v.pop_back();
      z.pop_back();
      s = intersect(v.back());
    }
    z.back() = s;
    v.push_back(q);
    z.push_back(kNoBoundary);
  }
  out.assign(n, kNoBoundary);
  if (v.empty()) return;
  std::size_t j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

double iou(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double stability_score(const TaggedMask& last,
                       const std::vector<CheckpointMaskSet>& intermediates) {
  double z = 0.0;
  for (const auto& checkpoint : intermediates) {
    double best = 0.0;
    for (const auto& candidate : checkpoint.masks) {
      if (candidate.image_id != last.image_id) continue;
      best = std::max(best, iou(last.mask, candidate.mask));
    }
    z += best;
  }
  return z;
}

std::vector<double> minmax_normalize(const std::vector<double>& scores, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  }
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "no scores to normalise");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo, max = *hi;
  std::vector<double> out(scores.size(), 1.0);
  if (max == min) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == max) continue;  // exact 1 at the top
    out[i] = (scores[i] - min) / (max - min) * (1.0 - epsilon) + epsilon;
  }
  return out;
}

Mask boundary_pixels(const Mask& mask) {
  constexpr int kDr[4] = {-1, 0, 0, 1};
  constexpr int kDc[4] = {0, -1, 1, 0};
  Mask out(mask.rows(), mask.cols(), 0);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const bool inside = mask(r, c) != 0;
      for (int d = 0; d < 4; ++d) {
        const int rr = r + kDr[d], cc = c + kDc[d];
        if (mask.contains(rr, cc) && (mask(rr, cc) != 0) != inside) {
          out(r, c) = 1;
          break;
        }
      }
    }
  }
  return out;
}

Grid<double> distance_transform(const Mask& mask) {
  const Mask boundary = boundary_pixels(mask);
  const int rows = mask.rows(), cols = mask.cols();
  Grid<double> sq(rows, cols, kNoBoundary);
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (boundary[i]) sq[i] = 0.0;
  }
  std::vector<double> line, out;
  // Columns, then rows over the column result.
  for (int c = 0; c < cols; ++c) {
    line.resize(rows);
    for (int r = 0; r < rows; ++r) line[r] = sq(r, c);
    squared_dt_1d(line, out);
    for (int r = 0; r < rows; ++r) sq(r, c) = out[r];
  }
  for (int r = 0; r < rows; ++r) {
    line.assign(sq.values().begin() + static_cast<std::ptrdiff_t>(sq.index(r, 0)),
                sq.values().begin() + static_cast<std::ptrdiff_t>(sq.index(r, 0) + cols));
    squared_dt_1d(line, out);
    for (int c = 0; c < cols; ++c) sq(r, c) = out[c];
  }
  for (auto& v : sq.values()) v = std::sqrt(v);
  return sq;
}

Grid<double> weight_map_from_distance(const Grid<double>& distance, double z_bar, double d_hat) {
  if (!(z_bar > 0.0 && z_bar <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "z_bar must lie in (0,1]");
  }
  if (!(d_hat > 0.0)) throw Error(ErrorCode::InvalidArgument, "d_hat must be positive");
  Grid<double> w(distance.rows(), distance.cols(), 1.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (distance[i] <= d_hat) w[i] = z_bar;
  }
  return w;
}

Grid<double> weight_map(const Mask& mask, double z_bar, double d_hat) {
  return weight_map_from_distance(distance_transform(mask), z_bar, d_hat);
}

AdaptiveLoss adaptive_loss(const Grid<double>& prob, const Mask& target,
                           const Grid<double>& weights) {
  require_same_shape(prob, target, "probability map vs target mask");
  require_same_shape(prob, weights, "probability map vs weight map");
  const ProbMap pm = clamp_probabilities(prob);
  AdaptiveLoss out;
  out.grad = Grid<double>(pm.rows(), pm.cols(), 0.0);
  if (pm.empty()) return out;
  const double inv_np = 1.0 / static_cast<double>(pm.size());
  for (std::size_t j = 0; j < pm.size(); ++j) {
    const double p = pm[j];
    if (target[j]) {
      out.value -= weights[j] * std::log(p);
      out.grad[j] = -weights[j] * inv_np / p;
    } else {
      out.value -= weights[j] * std::log(1.0 - p);
      out.grad[j] = weights[j] * inv_np / (1.0 - p);
    }
  }
  out.value *= inv_np;
  return out;
}

}  // namespace pseudoseg
