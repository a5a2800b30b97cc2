#include "pseudoseg/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace pseudoseg {

namespace {

constexpr int kNeighbourOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                          {0, 1},   {1, -1}, {1, 0},  {1, 1}};

double norm(std::span<const float> u) {
  double s = 0.0;
  for (float x : u) s += double(x) * double(x);
  return std::sqrt(s);
}

void require_grid(const PatchGrid& f) {
  if (f.n() < 2) {
    throw Error(ErrorCode::InvalidArgument, "patch grid needs at least 2 patches per side");
  }
}

}  // namespace

PatchGrid::PatchGrid(int n, int dim, std::vector<float> values)
    : n_(n), dim_(dim), values_(std::move(values)) {
  if (n < 0 || dim < 1) throw Error(ErrorCode::InvalidArgument, "bad patch grid extents");
  if (values_.size() != std::size_t(n) * std::size_t(n) * std::size_t(dim)) {
    throw Error(ErrorCode::ShapeMismatch, "patch grid value count does not match [n,n,e]");
  }
  for (float x : values_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite patch feature");
  }
}

PatchGrid PatchGrid::from_array(const ArrayFile& a) {
  if (a.rank() != 3 || a.shape()[0] != a.shape()[1]) {
    throw Error(ErrorCode::ShapeMismatch, "features must be float32 [N,N,E]");
  }
  auto v = a.values<float>();
  return PatchGrid(static_cast<int>(a.shape()[0]), static_cast<int>(a.shape()[2]),
                   std::vector<float>(v.begin(), v.end()));
}

ArrayFile PatchGrid::to_array() const {
  return ArrayFile::from<float>({std::size_t(n_), std::size_t(n_), std::size_t(dim_)}, values_);
}

std::vector<int> PatchGrid::degenerate_patches() const {
  std::vector<int> out;
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      if (norm(patch(r, c)) < kDegenerateNorm) out.push_back(r * n_ + c);
    }
  }
  return out;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with dimensions " +
                                                  std::to_string(u.size()) + " and " +
                                                  std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += double(u[i]) * double(v[i]);
    uu += double(u[i]) * double(u[i]);
    vv += double(v[i]) * double(v[i]);
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < kDegenerateNorm || nv < kDegenerateNorm) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

AffinityMap build_affinity_map(const PatchGrid& f) {
  require_grid(f);
  const int n = f.n();
  AffinityMap a(n, n, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double sum = 0.0;
      int count = 0;
      for (const auto& off : kNeighbourOffsets) {
        const int rr = r + off[0], cc = c + off[1];
        if (rr < 0 || cc < 0 || rr >= n || cc >= n) continue;
        sum += cosine(f.patch(r, c), f.patch(rr, cc));
        ++count;
      }
      a(r, c) = sum / count;
    }
  }
  return a;
}

SignedGraph build_multicut_graph(const PatchGrid& f, double tau_cut) {
  require_grid(f);
  const int n = f.n();
  SignedGraph g;
  g.node_count = n * n;
  // Forward half of the 8-neighbourhood: every pair is visited once from its
  // lower id, and the visiting order keeps (u, v) sorted.
  constexpr int kForward[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int u = r * n + c;
      std::vector<SignedEdge> local;
      for (const auto& off : kForward) {
        const int rr = r + off[0], cc = c + off[1];
        if (rr < 0 || cc < 0 || rr >= n || cc >= n) continue;
        local.push_back({u, rr * n + cc, cosine(f.patch(r, c), f.patch(rr, cc)) - tau_cut});
      }
      std::sort(local.begin(), local.end(),
                [](const SignedEdge& a, const SignedEdge& b) { return a.v < b.v; });
      g.edges.insert(g.edges.end(), local.begin(), local.end());
    }
  }
  return g;
}

void validate_graph(const SignedGraph& g) {
  if (g.node_count < 0) throw Error(ErrorCode::InvalidArgument, "negative node count");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    if (e.u < 0 || e.v >= g.node_count || e.u >= e.v) {
      throw Error(ErrorCode::InvalidArgument,
                  "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                      ") violates 0 <= u < v < node_count");
    }
    if (!seen.emplace(e.u, e.v).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate edge (" + std::to_string(e.u) + "," +
                                                  std::to_string(e.v) + ")");
    }
    if (!std::isfinite(e.cost)) throw Error(ErrorCode::InvalidArgument, "non-finite edge cost");
  }
}

}  // namespace pseudoseg
