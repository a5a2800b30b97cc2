#include "pseudoseg/sgmloss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace pseudoseg {

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

void require_seg_extent(const Grid<double>& pm, const SuperpixelSeg& seg) {
  require_same_shape(pm, seg.labels, "probability map vs superpixel labels");
}

// gamma_k and the denominator convention shared by the value and gradient
// paths of the soft labels.
std::vector<double> row_weights(const SquareMatrix& psi, bool include_self) {
  std::vector<double> gamma(psi.n, 0.0);
  for (int k = 0; k < psi.n; ++k) {
    for (int l = 0; l < psi.n; ++l) {
      if (l == k && !include_self) continue;
      gamma[k] += psi(k, l);
    }
  }
  return gamma;
}

}  // namespace

ProbMap clamp_probabilities(const Grid<double>& raw) {
  ProbMap out = raw;
  for (auto& v : out.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite probability");
    v = std::clamp(v, kProbFloor, 1.0 - kProbFloor);
  }
  return out;
}

double color_similarity(const LabColor& mu_k, const LabColor& c_i, double alpha1) {
  if (!(alpha1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha1 must be positive");
  return std::exp(-squared_distance(mu_k, c_i) / alpha1);
}

Grid<double> pixel_similarity(const SuperpixelSeg& seg, double alpha1) {
  require_same_shape(seg.labels, seg.pixel_color, "superpixel colours");
  Grid<double> delta(seg.labels.rows(), seg.labels.cols(), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = color_similarity(seg.mean_color[seg.labels[i]], seg.pixel_color[i], alpha1);
  }
  return delta;
}

SuperpixelProb superpixel_prob(const ProbMap& pm, const SuperpixelSeg& seg, double alpha1) {
  return superpixel_prob(pm, seg, pixel_similarity(seg, alpha1));
}

SuperpixelProb superpixel_prob(const ProbMap& pm, const SuperpixelSeg& seg,
                               const Grid<double>& delta) {
  require_seg_extent(pm, seg);
  require_same_shape(pm, delta, "probability map vs colour similarity");
  // Sums are taken relative to the first pixel of each superpixel, so a
  // constant map reproduces its value exactly.
  SuperpixelProb out;
  out.p.assign(seg.k, 0.0);
  out.upsilon.assign(seg.k, 0.0);
  std::vector<double> ref(seg.k, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < pm.size(); ++i) {
    const int k = seg.labels[i];
    if (std::isnan(ref[k])) ref[k] = pm[i];
    out.p[k] += (pm[i] - ref[k]) * delta[i];
    out.upsilon[k] += delta[i];
  }
  for (int k = 0; k < seg.k; ++k) {
    // delta underflows to 0 only for colour distances beyond ~745 * alpha1.
    if (out.upsilon[k] > 0.0) {
      out.p[k] = ref[k] + out.p[k] / out.upsilon[k];
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "colour similarity underflow in superpixel " + std::to_string(k));
    }
  }
  return out;
}

SuperpixelLabeling label_superpixels(const Mask& mask, const SuperpixelSeg& seg) {
  require_same_shape(mask, seg.labels, "mask vs superpixel labels");
  std::vector<int> fg(seg.k, 0), total(seg.k, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int k = seg.labels[i];
    ++total[k];
    fg[k] += mask[i] != 0;
  }
  SuperpixelLabeling out;
  out.y.assign(seg.k, SuperpixelLabel::Unlabeled);
  for (int k = 0; k < seg.k; ++k) {
    if (total[k] == 0) continue;
    if (fg[k] == total[k]) {
      out.y[k] = SuperpixelLabel::Foreground;
    } else if (fg[k] == 0) {
      out.y[k] = SuperpixelLabel::Background;
    }
    out.n_labeled += out.y[k] != SuperpixelLabel::Unlabeled;
  }
  return out;
}

LossTerm hard_loss(const std::vector<double>& p, const SuperpixelLabeling& labeling) {
  if (p.size() != labeling.y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "hard_loss: probability and label counts differ");
  }
  LossTerm out;
  out.d_p.assign(p.size(), 0.0);
  if (labeling.n_labeled == 0) return out;
  const double inv_ns = 1.0 / labeling.n_labeled;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (labeling.y[k] == SuperpixelLabel::Unlabeled) continue;
    if (labeling.y[k] == SuperpixelLabel::Foreground) {
      out.value -= std::log(p[k]);
      out.d_p[k] = -inv_ns / p[k];
    } else {
      out.value -= std::log(1.0 - p[k]);
      out.d_p[k] = inv_ns / (1.0 - p[k]);
    }
  }
  out.value *= inv_ns;
  return out;
}

AffinityTree build_affinity_tree(int k, std::vector<SuperpixelEdge> edges) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "affinity tree needs at least one node");
  for (const auto& e : edges) {
    if (e.m < 0 || e.n < 0 || e.m >= k || e.n >= k || e.m == e.n) {
      throw Error(ErrorCode::InvalidArgument, "superpixel edge outside 0..k-1 or self-loop");
    }
    if (!(e.w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative superpixel edge weight");
  }
  std::stable_sort(edges.begin(), edges.end(), [](const SuperpixelEdge& x, const SuperpixelEdge& y) {
    return std::tie(x.w, x.m, x.n) < std::tie(y.w, y.m, y.n);
  });

  AffinityTree tree;
  tree.k = k;
  tree.pathmax = SquareMatrix(k, kUnreachable);
  for (int i = 0; i < k; ++i) tree.pathmax(i, i) = 0.0;

  // Components as explicit member lists: every accepted edge is the heaviest
  // on any tree path it completes, because Kruskal accepts in nondecreasing
  // weight order.
  std::vector<int> owner(k);
  std::vector<std::vector<int>> members(k);
  for (int i = 0; i < k; ++i) {
    owner[i] = i;
    members[i] = {i};
  }
  for (const auto& e : edges) {
    int a = owner[e.m], b = owner[e.n];
    if (a == b) continue;
    for (int x : members[a]) {
      for (int y : members[b]) {
        tree.pathmax(x, y) = e.w;
        tree.pathmax(y, x) = e.w;
      }
    }
    if (members[a].size() < members[b].size()) std::swap(a, b);
    for (int y : members[b]) owner[y] = a;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    tree.mst_edges.push_back(e);
    if (static_cast<int>(tree.mst_edges.size()) == k - 1) break;
  }
  return tree;
}

AffinityTree build_affinity_tree(const SuperpixelSeg& seg) {
  return build_affinity_tree(seg.k, seg.edges);
}

SquareMatrix global_affinity(const AffinityTree& tree, double alpha2) {
  if (!(alpha2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha2 must be positive");
  SquareMatrix psi(tree.k, 0.0);
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    psi.values[i] = std::exp(-tree.pathmax.values[i] / alpha2);
  }
  return psi;
}

std::vector<double> soft_labels(const std::vector<double>& p, const SquareMatrix& psi,
                                bool include_self) {
  if (p.size() != static_cast<std::size_t>(psi.n)) {
    throw Error(ErrorCode::ShapeMismatch, "soft_labels: psi does not match superpixel count");
  }
  const auto gamma = row_weights(psi, include_self);
  std::vector<double> p_hat(p.size(), 0.0);
  for (int k = 0; k < psi.n; ++k) {
    if (gamma[k] <= 0.0) {
      // Isolated superpixel without the self term: nothing to propagate from.
      p_hat[k] = p[k];
      continue;
    }
    // p_k + sum_l psi(k,l) (p_l - p_k) / gamma_k: exact when p is constant.
    double s = 0.0;
    for (int l = 0; l < psi.n; ++l) {
      if (l == k && !include_self) continue;
      s += (p[l] - p[k]) * psi(k, l);
    }
    p_hat[k] = p[k] + s / gamma[k];
  }
  return p_hat;
}

LossTerm soft_loss(const std::vector<double>& p, const std::vector<double>& p_hat) {
  if (p.size() != p_hat.size() || p.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "soft_loss: mismatched or empty inputs");
  }
  const double inv_k = 1.0 / static_cast<double>(p.size());
  LossTerm out;
  out.d_p.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.value += std::abs(p[k] - p_hat[k]);
    out.d_p[k] = sign(p[k] - p_hat[k]) * inv_k;
  }
  out.value *= inv_k;
  return out;
}

LossTerm soft_loss_through_target(const std::vector<double>& p, const SquareMatrix& psi,
                                  bool include_self) {
  const auto p_hat = soft_labels(p, psi, include_self);
  LossTerm out = soft_loss(p, p_hat);
  const auto gamma = row_weights(psi, include_self);
  // d p_hat_k / d p_j = psi(k, j) / gamma_k over the summed terms.
  const double inv_k = 1.0 / static_cast<double>(p.size());
  for (int k = 0; k < psi.n; ++k) {
    const double s = sign(p[k] - p_hat[k]) * inv_k;
    if (s == 0.0) continue;
    if (gamma[k] <= 0.0) {
      out.d_p[k] -= s;
      continue;
    }
    for (int j = 0; j < psi.n; ++j) {
      if (j == k && !include_self) continue;
      out.d_p[j] -= s * psi(k, j) / gamma[k];
    }
  }
  return out;
}

SgmContext prepare_sgm(const SuperpixelSeg& seg, const HyperParams& hp) {
  SgmContext ctx;
  ctx.seg = &seg;
  ctx.delta = pixel_similarity(seg, hp.alpha1);
  ctx.psi = global_affinity(build_affinity_tree(seg), hp.alpha2);
  return ctx;
}

LossReport sgm_loss(const SgmContext& ctx, const Grid<double>& prob, const Mask& mask,
                    const SgmOptions& options) {
  const SuperpixelSeg& seg = *ctx.seg;
  require_seg_extent(prob, seg);
  require_same_shape(mask, prob, "mask vs probability map");
  const ProbMap pm = clamp_probabilities(prob);

  const auto sp = superpixel_prob(pm, seg, ctx.delta);
  const auto labeling = label_superpixels(mask, seg);
  const auto hard = hard_loss(sp.p, labeling);
  const auto p_hat = soft_labels(sp.p, ctx.psi, options.include_self);
  const auto soft = options.grad_through_target
                        ? soft_loss_through_target(sp.p, ctx.psi, options.include_self)
                        : soft_loss(sp.p, p_hat);

  LossReport report;
  report.hard = hard.value;
  report.soft = soft.value;
  report.total = report.hard + report.soft;
  report.n_labeled = labeling.n_labeled;
  report.no_labeled_superpixels = labeling.n_labeled == 0;
  report.p_super = sp.p;
  report.p_hat = p_hat;

  // d P_k / d M_i = delta_{k,i} / upsilon_k for pixels of S_k.
  std::vector<double> d_p(seg.k);
  for (int k = 0; k < seg.k; ++k) d_p[k] = (hard.d_p[k] + soft.d_p[k]) / sp.upsilon[k];
  report.grad = Grid<double>(pm.rows(), pm.cols(), 0.0);
  for (std::size_t i = 0; i < pm.size(); ++i) {
    report.grad[i] = d_p[seg.labels[i]] * ctx.delta[i];
  }
  return report;
}

LossReport sgm_loss(const Grid<double>& prob, const Mask& mask, const SuperpixelSeg& seg,
                    const HyperParams& hp, const SgmOptions& options) {
  const auto ctx = prepare_sgm(seg, hp);
  return sgm_loss(ctx, prob, mask, options);
}

Mask upsample_nearest(const Mask& patch_mask, int rows, int cols) {
  if (patch_mask.empty() || rows < 0 || cols < 0) {
    throw Error(ErrorCode::InvalidArgument, "cannot upsample an empty mask");
  }
  Mask out(rows, cols, 0);
  for (int r = 0; r < rows; ++r) {
    const int pr = static_cast<int>(static_cast<long long>(r) * patch_mask.rows() / rows);
    for (int c = 0; c < cols; ++c) {
      const int pc = static_cast<int>(static_cast<long long>(c) * patch_mask.cols() / cols);
      out(r, c) = patch_mask(pr, pc);
    }
  }
  return out;
}

}  // namespace pseudoseg
