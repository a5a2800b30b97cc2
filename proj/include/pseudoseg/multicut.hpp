#pragma once

// Correlation clustering of the signed patch graph and the corner rule that
// separates object clusters from background.

#include <vector>

#include "pseudoseg/affinity.hpp"
#include "pseudoseg/grid.hpp"

namespace pseudoseg {

struct Partition {
  std::vector<int> labels;  // per node, contiguous 0..k-1
  int k = 0;

  friend bool operator==(const Partition&, const Partition&) = default;
};

// Relabels arbitrary non-negative ids to 0..k-1 in order of first appearance.
Partition make_partition(const std::vector<int>& raw_labels);

// Sum of costs over edges whose endpoints lie in different clusters.
// Throws LabelOutOfRange.
double multicut_objective(const SignedGraph& g, const Partition& p);

// Greedy additive edge contraction. Ties on aggregate cost go to the
// lexicographically smallest (min id, max id) cluster pair; a merged cluster
// keeps the smaller id.
Partition solve_multicut(const SignedGraph& g);

// One n x n mask per cluster, in cluster-id order.
std::vector<Mask> partition_to_masks(const Partition& p, int n);

// True iff the mask covers at most one of the four grid corners.
bool is_foreground(const Mask& m);

}  // namespace pseudoseg
