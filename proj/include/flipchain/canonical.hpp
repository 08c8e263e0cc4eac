#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "flipchain/triangulation.hpp"

namespace flipchain {

namespace detail {

/// Rotation system of a triangulation: for every directed link v->u,
/// the next neighbour of v after u in one fixed global orientation.
/// Dense (n+1)^2 tables; canonicalization is meant for small n.
struct RotationSystem {
  std::uint32_t n = 0;
  std::vector<NodeId> succ;  // succ[v*(n+1)+u]
  std::vector<NodeId> pred;

  NodeId next(NodeId v, NodeId u, bool forward) const {
    return forward ? succ[v * (n + 1) + u] : pred[v * (n + 1) + u];
  }
};

inline RotationSystem orient(const Triangulation& t) {
  const std::uint32_t n = t.node_count();
  const std::size_t stride = n + 1;
  RotationSystem rs;
  rs.n = n;
  rs.succ.assign(stride * stride, 0);
  rs.pred.assign(stride * stride, 0);

  // third[x*(n+1)+y] = z for each oriented face (x,y,z); filled by BFS over
  // faces so that neighbouring faces traverse their shared link oppositely.
  std::vector<NodeId> third(stride * stride, 0);
  const auto faces = t.triangles();
  std::deque<std::array<NodeId, 3>> queue;
  auto place = [&](NodeId x, NodeId y, NodeId z) {
    if (third[x * stride + y] != 0) return;
    third[x * stride + y] = z;
    third[y * stride + z] = x;
    third[z * stride + x] = y;
    queue.push_back({x, y, z});
  };
  place(faces.front().v[0], faces.front().v[1], faces.front().v[2]);
  while (!queue.empty()) {
    const auto [x, y, z] = queue.front();
    queue.pop_front();
    for (auto [p, q] : {std::pair{x, y}, std::pair{y, z}, std::pair{z, x}}) {
      // Across link {p,q}, the neighbour face is oriented (q, p, w).
      const auto& r = t.record(t.find_link(p, q)->slot);
      const NodeId other_apex = (r.c == third[p * stride + q]) ? r.d : r.c;
      place(q, p, other_apex);
    }
  }
  for (NodeId v = 1; v <= n; ++v) {
    for (auto slot : t.incident_slots(v)) {
      const NodeId u = t.record(slot).other(v);
      const NodeId w = third[v * stride + u];  // face (v,u,w): w follows u around v
      rs.succ[v * stride + u] = w;
      rs.pred[v * stride + w] = u;
    }
  }
  return rs;
}

/// Breadth-first relabelling code from root edge (root -> first) walking
/// each rotation forward or backward. Labels are 1-based; 0 ends a vertex.
inline void bfs_code(const RotationSystem& rs, NodeId root, NodeId first, bool forward,
                     std::vector<std::uint32_t>& label, std::vector<NodeId>& entry,
                     std::vector<NodeId>& order, std::vector<std::uint32_t>& code) {
  std::fill(label.begin(), label.end(), 0);
  order.clear();
  code.clear();
  std::uint32_t next_label = 1;
  label[root] = next_label++;
  entry[root] = first;
  order.push_back(root);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const NodeId v = order[head];
    const NodeId start = entry[v];
    NodeId u = start;
    do {
      if (label[u] == 0) {
        label[u] = next_label++;
        entry[u] = v;
        order.push_back(u);
      }
      code.push_back(label[u]);
      u = rs.next(v, u, forward);
    } while (u != start);
    code.push_back(0);
  }
}

}  // namespace detail

/// Isomorphism invariant: equal for two triangulations iff they are
/// isomorphic as unrooted maps, with mirror images identified. Minimum over
/// every directed root link and both orientations of a breadth-first
/// relabelling code. O(n^2) per call.
inline std::string canonical_code(const Triangulation& t) {
  if (auto problems = validate(t); !problems.empty()) {
    throw usage_error("canonical_code on invalid triangulation: " + problems.front());
  }
  const auto rs = detail::orient(t);
  const std::uint32_t n = t.node_count();
  std::vector<std::uint32_t> label(n + 1), best, code;
  std::vector<NodeId> entry(n + 1), order;
  bool have_best = false;
  for (NodeId v = 1; v <= n; ++v) {
    for (auto slot : t.incident_slots(v)) {
      const NodeId u = t.record(slot).other(v);
      for (bool forward : {true, false}) {
        detail::bfs_code(rs, v, u, forward, label, entry, order, code);
        if (!have_best || code < best) {
          best = code;
          have_best = true;
        }
      }
    }
  }
  std::string out;
  out.reserve(best.size() * 2);
  for (auto x : best) {
    out.push_back(static_cast<char>((x >> 8) & 0xff));
    out.push_back(static_cast<char>(x & 0xff));
  }
  return out;
}

}  // namespace flipchain
