#pragma once

#include "flipchain/triangulation.hpp"

namespace flipchain {

// Reaches into the private tables to fake corruption.
struct TriangulationTestAccess {
  static void drop_adjacency(Triangulation& t, NodeId x, NodeId y) { t.index_.erase(Triangulation::key(x, y)); }
  static void add_stray_adjacency(Triangulation& t, NodeId x, NodeId y, std::uint32_t slot) {
    t.index_[Triangulation::key(x, y)] = slot;
  }
  static void set_apex(Triangulation& t, std::uint32_t slot, NodeId c) { t.links_[slot].c = c; }
  static void skew_degree_cache(Triangulation& t) { ++t.sum_sq_degrees_; }
};

}  // namespace flipchain
