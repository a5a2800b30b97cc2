#pragma once

// Patch-level affinities computed from self-supervised patch embeddings.

#include <span>
#include <vector>

#include "pseudoseg/grid.hpp"
#include "pseudoseg/ndio.hpp"

namespace pseudoseg {

// N x N grid of E-dimensional patch embeddings, stored [n, n, e].
class PatchGrid {
 public:
  PatchGrid() = default;
  // Throws ShapeMismatch on a size mismatch, InvalidArgument on non-finite entries.
  PatchGrid(int n, int dim, std::vector<float> values);

  // Accepts float32 [N,N,E].
  static PatchGrid from_array(const ArrayFile& a);
  ArrayFile to_array() const;

  int n() const noexcept { return n_; }
  int dim() const noexcept { return dim_; }
  std::span<const float> patch(int row, int col) const noexcept {
    return {values_.data() + (static_cast<std::size_t>(row) * n_ + col) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  std::span<float> patch(int row, int col) noexcept {
    return {values_.data() + (static_cast<std::size_t>(row) * n_ + col) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  // Patches whose norm falls below the cosine degeneracy threshold.
  std::vector<int> degenerate_patches() const;

 private:
  int n_ = 0;
  int dim_ = 0;
  std::vector<float> values_;
};

// Per-patch mean cosine similarity to the 8-neighbourhood, in [-1, 1].
using AffinityMap = Grid<double>;

struct SignedEdge {
  int u = 0;
  int v = 0;
  double cost = 0.0;

  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
};

// Multicut input. Edges satisfy u < v with no duplicates; positive cost
// rewards joining the endpoints.
struct SignedGraph {
  int node_count = 0;
  std::vector<SignedEdge> edges;
};

inline constexpr double kDegenerateNorm = 1e-12;

// Returns 0 when either norm is below kDegenerateNorm. Throws DimensionMismatch.
double cosine(std::span<const float> u, std::span<const float> v);

AffinityMap build_affinity_map(const PatchGrid& f);

// One node per patch (id = row * n + col), one edge per 8-neighbour pair,
// cost = cosine - tau_cut. Edges come sorted by (u, v).
SignedGraph build_multicut_graph(const PatchGrid& f, double tau_cut);

// Throws InvalidArgument on self-loops, out-of-range ids, u >= v or duplicates.
void validate_graph(const SignedGraph& g);

}  // namespace pseudoseg
