#include "pseudoseg/multicut.hpp"

#include <map>
#include <queue>
#include <string>
#include <tuple>

namespace pseudoseg {

namespace {

struct Candidate {
  double cost;
  int a;  // a < b
  int b;
  std::uint64_t stamp;
};

// Max-heap on cost; equal costs pop the lexicographically smallest pair.
struct CandidateOrder {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.cost != y.cost) return x.cost < y.cost;
    return std::tie(x.a, x.b) > std::tie(y.a, y.b);
  }
};

struct Link {
  double cost;
  std::uint64_t stamp;
};

}  // namespace

Partition make_partition(const std::vector<int>& raw_labels) {
  Partition p;
  p.labels.resize(raw_labels.size());
  std::map<int, int> remap;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (raw_labels[i] < 0) throw Error(ErrorCode::LabelOutOfRange, "negative cluster id");
    auto [it, inserted] = remap.emplace(raw_labels[i], static_cast<int>(remap.size()));
    p.labels[i] = it->second;
  }
  p.k = static_cast<int>(remap.size());
  return p;
}

double multicut_objective(const SignedGraph& g, const Partition& p) {
  if (p.labels.size() != static_cast<std::size_t>(g.node_count)) {
    throw Error(ErrorCode::LabelOutOfRange,
                "partition labels " + std::to_string(p.labels.size()) + " nodes, graph has " +
                    std::to_string(g.node_count));
  }
  for (int l : p.labels) {
    if (l < 0 || l >= p.k) {
      throw Error(ErrorCode::LabelOutOfRange, "cluster id " + std::to_string(l) +
                                                  " outside 0.." + std::to_string(p.k - 1));
    }
  }
  double total = 0.0;
  for (const auto& e : g.edges) {
    if (e.u < 0 || e.v < 0 || e.u >= g.node_count || e.v >= g.node_count) {
      throw Error(ErrorCode::LabelOutOfRange, "edge endpoint outside the partition");
    }
    if (p.labels[e.u] != p.labels[e.v]) total += e.cost;
  }
  return total;
}

Partition solve_multicut(const SignedGraph& g) {
  validate_graph(g);
  const int n = g.node_count;
  // adjacency[c] maps neighbouring cluster id -> aggregate cost of all edges
  // between the two clusters.
  std::vector<std::map<int, Link>> adjacency(n);
  std::vector<int> parent(n);
  std::vector<bool> alive(n, true);
  for (int i = 0; i < n; ++i) parent[i] = i;

  std::uint64_t stamp = 0;
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> heap;
  for (const auto& e : g.edges) {
    auto& link = adjacency[e.u][e.v];
    link.cost += e.cost;
    link.stamp = ++stamp;
    adjacency[e.v][e.u] = link;
  }
  for (int u = 0; u < n; ++u) {
    for (const auto& [v, link] : adjacency[u]) {
      if (u < v && link.cost > 0.0) heap.push({link.cost, u, v, link.stamp});
    }
  }

  while (!heap.empty()) {
    const Candidate top = heap.top();
    heap.pop();
    if (!alive[top.a] || !alive[top.b]) continue;
    auto it = adjacency[top.a].find(top.b);
    if (it == adjacency[top.a].end() || it->second.stamp != top.stamp) continue;

    // Contract b into a, summing parallel edges.
    const int a = top.a, b = top.b;
    adjacency[a].erase(b);
    adjacency[b].erase(a);
    for (const auto& [c, link] : adjacency[b]) {
      adjacency[c].erase(b);
      auto& merged = adjacency[a][c];
      merged.cost += link.cost;
      merged.stamp = ++stamp;
      adjacency[c][a] = merged;
    }
    adjacency[b].clear();
    alive[b] = false;
    parent[b] = a;
    for (const auto& [c, link] : adjacency[a]) {
      if (link.cost > 0.0) heap.push({link.cost, std::min(a, c), std::max(a, c), link.stamp});
    }
  }

  std::vector<int> root(n);
  for (int i = 0; i < n; ++i) {
    int r = i;
    while (parent[r] != r) r = parent[r];
    root[i] = r;
  }
  return make_partition(root);
}

std::vector<Mask> partition_to_masks(const Partition& p, int n) {
  if (n < 0 || p.labels.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::ShapeMismatch, "partition does not cover an n x n grid");
  }
  std::vector<Mask> masks(p.k, Mask(n, n, 0));
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    const int l = p.labels[i];
    if (l < 0 || l >= p.k) throw Error(ErrorCode::LabelOutOfRange, "cluster id out of range");
    masks[l][i] = 1;
  }
  return masks;
}

bool is_foreground(const Mask& m) {
  if (m.empty()) return false;
  const int r = m.rows() - 1, c = m.cols() - 1;
  const int corners = (m(0, 0) != 0) + (m(0, c) != 0) + (m(r, 0) != 0) + (m(r, c) != 0);
  return corners <= 1;
}

}  // namespace pseudoseg
