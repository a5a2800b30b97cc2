#pragma once

// Superpixel-guided mask loss: a hard term from superpixel labels derived
// from a coarse mask, and a soft term from labels propagated along the
// minimum spanning tree of the superpixel colour graph. Both terms come with
// analytic gradients with respect to the per-pixel probability map.

#include <cstdint>
#include <limits>
#include <vector>

#include "pseudoseg/grid.hpp"
#include "pseudoseg/ndio.hpp"
#include "pseudoseg/superpixel.hpp"

namespace pseudoseg {

inline constexpr double kProbFloor = 1e-6;
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Per-pixel foreground probabilities, H x W.
using ProbMap = Grid<double>;

// Clamps into [kProbFloor, 1 - kProbFloor]. Non-finite entries throw InvalidArgument.
ProbMap clamp_probabilities(const Grid<double>& raw);

enum class SuperpixelLabel : std::int8_t { Background = 0, Foreground = 1, Unlabeled = -1 };

struct SuperpixelLabeling {
  std::vector<SuperpixelLabel> y;
  int n_labeled = 0;
};

// Square matrix, row-major.
struct SquareMatrix {
  int n = 0;
  std::vector<double> values;

  SquareMatrix() = default;
  SquareMatrix(int size, double fill) : n(size), values(std::size_t(size) * size, fill) {}
  double& operator()(int r, int c) { return values[std::size_t(r) * n + c]; }
  double operator()(int r, int c) const { return values[std::size_t(r) * n + c]; }
};

struct AffinityTree {
  int k = 0;
  std::vector<SuperpixelEdge> mst_edges;  // in the order Kruskal accepted them
  // Largest edge weight on the tree path; 0 on the diagonal and kUnreachable
  // between different components.
  SquareMatrix pathmax;
};

struct SuperpixelProb {
  std::vector<double> p;        // delta-weighted mean probability per superpixel
  std::vector<double> upsilon;  // sum of delta per superpixel
};

struct LossTerm {
  double value = 0.0;
  std::vector<double> d_p;  // derivative with respect to each superpixel probability
};

struct SgmOptions {
  // Keep l = k in the soft-label average.
  bool include_self = true;
  // Differentiate through the soft labels instead of treating them as constants.
  bool grad_through_target = false;
};

struct LossReport {
  double hard = 0.0;
  double soft = 0.0;
  double total = 0.0;
  int n_labeled = 0;
  bool no_labeled_superpixels = false;
  Grid<double> grad;  // d total / d probability, H x W
  std::vector<double> p_super;
  std::vector<double> p_hat;
};

double color_similarity(const LabColor& mu_k, const LabColor& c_i, double alpha1);

// delta_{k,i} for every pixel i against the mean colour of its own superpixel.
Grid<double> pixel_similarity(const SuperpixelSeg& seg, double alpha1);

SuperpixelProb superpixel_prob(const ProbMap& pm, const SuperpixelSeg& seg, double alpha1);
SuperpixelProb superpixel_prob(const ProbMap& pm, const SuperpixelSeg& seg,
                               const Grid<double>& delta);

// Foreground only if every pixel is in the mask, background only if none is.
SuperpixelLabeling label_superpixels(const Mask& mask, const SuperpixelSeg& seg);

// Binary cross-entropy over labelled superpixels, averaged over their count.
// With no labelled superpixel the value and gradient are zero.
LossTerm hard_loss(const std::vector<double>& p, const SuperpixelLabeling& labeling);

// Kruskal minimum spanning forest; pathmax is filled as components merge.
AffinityTree build_affinity_tree(int k, std::vector<SuperpixelEdge> edges);
AffinityTree build_affinity_tree(const SuperpixelSeg& seg);

SquareMatrix global_affinity(const AffinityTree& tree, double alpha2);

std::vector<double> soft_labels(const std::vector<double>& p, const SquareMatrix& psi,
                                bool include_self = true);

// Mean absolute difference with the soft labels held constant. sign(0) = 0.
LossTerm soft_loss(const std::vector<double>& p, const std::vector<double>& p_hat);

// Same value, but the gradient also flows through p_hat = soft_labels(p, psi).
LossTerm soft_loss_through_target(const std::vector<double>& p, const SquareMatrix& psi,
                                  bool include_self = true);

// Image-level quantities shared by every mask scored against the same image.
struct SgmContext {
  const SuperpixelSeg* seg = nullptr;
  Grid<double> delta;
  SquareMatrix psi;
};

SgmContext prepare_sgm(const SuperpixelSeg& seg, const HyperParams& hp);

LossReport sgm_loss(const SgmContext& ctx, const Grid<double>& prob, const Mask& mask,
                    const SgmOptions& options = {});
LossReport sgm_loss(const Grid<double>& prob, const Mask& mask, const SuperpixelSeg& seg,
                    const HyperParams& hp, const SgmOptions& options = {});

// Nearest-neighbour resampling of a patch mask to pixel resolution.
Mask upsample_nearest(const Mask& patch_mask, int rows, int cols);

}  // namespace pseudoseg
