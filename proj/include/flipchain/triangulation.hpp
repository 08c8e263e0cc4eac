#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "flipchain/errors.hpp"

namespace flipchain {

/// Node label in 1..n. Labels are fixed for the lifetime of a triangulation.
using NodeId = std::uint32_t;

/// Unordered node pair, stored with a < b.
struct NodePair {
  NodeId a = 0;
  NodeId b = 0;

  NodePair() = default;
  NodePair(NodeId x, NodeId y) : a(std::min(x, y)), b(std::max(x, y)) {}

  bool contains(NodeId v) const { return a == v || b == v; }
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Handle to a live link. A flip re-keys the slot in place and bumps its
/// generation, so handles taken before the flip become stale.
struct LinkId {
  std::uint32_t slot = 0;
  std::uint32_t generation = 0;
  friend bool operator==(const LinkId&, const LinkId&) = default;
};

/// Face with vertices sorted ascending.
struct Triangle {
  std::array<NodeId, 3> v{};

  Triangle() = default;
  Triangle(NodeId x, NodeId y, NodeId z) : v{x, y, z} { std::sort(v.begin(), v.end()); }
  friend auto operator<=>(const Triangle&, const Triangle&) = default;
};

struct FlipOutcome {
  enum class Kind { flipped, rejected };

  Kind kind = Kind::rejected;
  NodePair removed;  // set when flipped
  NodePair added;    // set when flipped

  bool flipped() const { return kind == Kind::flipped; }

  static FlipOutcome rejected() { return {}; }
  static FlipOutcome done(NodePair removed, NodePair added) {
    return {Kind::flipped, removed, added};
  }
};

class Triangulation;
struct TriangulationTestAccess;

std::vector<std::string> validate(const Triangulation& t);

/// Combinatorial triangulation of the sphere on nodes 1..n.
///
/// Storage is a fixed table of 3n-6 link slots. Each slot holds the two
/// endpoints, the two opposite vertices (apexes of the two faces sharing the
/// link), the four links bounding those two faces, and the link's position
/// in each endpoint's incidence list. An
/// open-addressing map from node pair to slot answers adjacency queries.
/// Faces are implicit: {a,b,c} is a face iff c is an apex of link {a,b}.
class Triangulation {
 public:
  struct LinkRecord {
    NodeId a = 0, b = 0;  // endpoints, a < b
    NodeId c = 0, d = 0;  // apexes, c < d
    std::uint32_t pos_a = 0, pos_b = 0;
    std::uint32_t generation = 0;
    // wing[i][j]: slot of the link joining endpoint j (a, b) to apex i (c, d).
    std::array<std::array<std::uint32_t, 2>, 2> wing{};

    NodeId other(NodeId v) const { return v == a ? b : a; }
    std::uint32_t& pos_of(NodeId v) { return v == a ? pos_a : pos_b; }
  };

  Triangulation() = default;

  /// Builds from a face list. Throws usage_error when the faces do not form
  /// a sphere triangulation on 1..n.
  static Triangulation from_triangles(std::uint32_t n, std::span<const Triangle> faces) {
    if (n < 4) throw usage_error("triangulation needs n >= 4, got " + std::to_string(n));
    std::map<NodePair, std::vector<NodeId>> apexes;
    for (const auto& f : faces) {
      for (auto v : f.v) {
        if (v < 1 || v > n) {
          throw usage_error("node " + std::to_string(v) + " out of range 1.." + std::to_string(n));
        }
      }
      if (f.v[0] == f.v[1] || f.v[1] == f.v[2]) throw usage_error("degenerate face");
      apexes[{f.v[0], f.v[1]}].push_back(f.v[2]);
      apexes[{f.v[0], f.v[2]}].push_back(f.v[1]);
      apexes[{f.v[1], f.v[2]}].push_back(f.v[0]);
    }
    Triangulation t;
    t.n_ = n;
    t.incidence_.assign(n + 1, {});
    t.links_.reserve(apexes.size());
    t.index_.reserve(apexes.size());
    for (const auto& [pair, third] : apexes) {
      if (third.size() != 2) {
        throw usage_error("link {" + std::to_string(pair.a) + "," + std::to_string(pair.b) +
                          "} lies in " + std::to_string(third.size()) + " faces, expected 2");
      }
      const NodePair apex(third[0], third[1]);
      t.push_link(pair, apex);
    }
    for (auto& r : t.links_) {
      r.wing = {{{t.slot_of(r.a, r.c), t.slot_of(r.b, r.c)}, {t.slot_of(r.a, r.d), t.slot_of(r.b, r.d)}}};
    }
    for (NodeId v = 1; v <= n; ++v) {
      const auto d = t.degree(v);
      t.sum_sq_degrees_ += std::uint64_t{d} * d;
    }
    if (auto problems = validate(t); !problems.empty()) throw usage_error(problems.front());
    return t;
  }

  std::uint32_t node_count() const { return n_; }
  std::size_t link_count() const { return links_.size(); }
  std::uint32_t degree(NodeId v) const { return static_cast<std::uint32_t>(incidence_[v].size()); }
  std::uint64_t sum_squared_degrees() const { return sum_sq_degrees_; }

  bool linked(NodeId x, NodeId y) const { return index_.contains(key(x, y)); }

  std::optional<LinkId> find_link(NodeId x, NodeId y) const {
    auto it = index_.find(key(x, y));
    if (it == index_.end()) return std::nullopt;
    return LinkId{it->second, links_[it->second].generation};
  }

  LinkId link_at(std::uint32_t slot) const { return {slot, links_.at(slot).generation}; }
  const LinkRecord& record(std::uint32_t slot) const { return links_[slot]; }

  std::span<const std::uint32_t> incident_slots(NodeId v) const { return incidence_[v]; }

  NodePair endpoints(LinkId id) const {
    const auto& r = live(id);
    return {r.a, r.b};
  }

  /// The two apexes (C, D) of the faces (A,B,C), (A,B,D) sharing the link.
  NodePair opposite_vertices(LinkId id) const {
    const auto& r = live(id);
    return {r.c, r.d};
  }

  /// True iff the complementary link is absent.
  bool is_flippable(LinkId id) const {
    const auto& r = live(id);
    return !linked(r.c, r.d);
  }

  FlipOutcome flip(LinkId id) {
    live(id);
    return flip_slot(id.slot);
  }

  /// Unchecked-handle flip on a slot index; the hot path of the samplers.
  FlipOutcome flip_slot(std::uint32_t slot) {
    LinkRecord& r = links_[slot];
    const NodeId a = r.a, b = r.b, c = r.c, d = r.d;
    if (linked(c, d)) return FlipOutcome::rejected();

    // Faces (a,b,c), (a,b,d) become (a,c,d), (b,c,d).
    const std::uint32_t ac = r.wing[0][0], bc = r.wing[0][1], ad = r.wing[1][0], bd = r.wing[1][1];
    retarget(ac, b, d, a, ad, slot);
    retarget(bc, a, d, b, bd, slot);
    retarget(ad, b, c, a, ac, slot);
    retarget(bd, a, c, b, bc, slot);

    const std::uint64_t da = degree(a), db = degree(b), dc = degree(c), dd = degree(d);
    sum_sq_degrees_ = sum_sq_degrees_ - 2 * (da + db) + 2 + 2 * (dc + dd) + 2;

    detach(slot, a);
    detach(slot, b);
    index_.erase(key(a, b));
    r.a = c;  // c < d by record invariant
    r.b = d;
    r.c = a;
    r.d = b;
    r.pos_a = attach(slot, c);
    r.pos_b = attach(slot, d);
    r.wing = {{{ac, ad}, {bc, bd}}};
    ++r.generation;
    index_.emplace(key(c, d), slot);
    return FlipOutcome::done({a, b}, {c, d});
  }

  /// Faces, sorted.
  std::vector<Triangle> triangles() const {
    std::vector<Triangle> out;
    out.reserve(links_.size() * 2 / 3);
    for (const auto& r : links_) {
      // Each face {x<y<z} is emitted once, from link {x,y} with apex z.
      if (r.c > r.b) out.emplace_back(r.a, r.b, r.c);
      if (r.d > r.b) out.emplace_back(r.a, r.b, r.d);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<NodePair> link_pairs() const {
    std::vector<NodePair> out;
    out.reserve(links_.size());
    for (const auto& r : links_) out.emplace_back(r.a, r.b);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool same_links(const Triangulation& other) const {
    return n_ == other.n_ && link_pairs() == other.link_pairs();
  }

  /// Copy with node v renamed to perm[v]; perm has size n+1, perm[0] unused.
  Triangulation relabeled(std::span<const NodeId> perm) const {
    if (perm.size() != n_ + 1) throw usage_error("relabeling must have n+1 entries");
    auto faces = triangles();
    for (auto& f : faces) f = Triangle(perm[f.v[0]], perm[f.v[1]], perm[f.v[2]]);
    return from_triangles(n_, faces);
  }

 private:
  friend std::vector<std::string> validate(const Triangulation& t);
  friend struct TriangulationTestAccess;

  struct PairHash {
    std::size_t operator()(std::uint64_t k) const {
      k *= 0x9e3779b97f4a7c15ull;
      return static_cast<std::size_t>(k ^ (k >> 29));
    }
  };

  static std::uint64_t key(NodeId x, NodeId y) {
    if (x > y) std::swap(x, y);
    return (std::uint64_t{x} << 32) | y;
  }

  const LinkRecord& live(LinkId id) const {
    if (id.slot >= links_.size() || links_[id.slot].generation != id.generation) {
      throw usage_error("stale or foreign link handle (slot " + std::to_string(id.slot) + ")");
    }
    return links_[id.slot];
  }

  std::uint32_t slot_of(NodeId x, NodeId y) const { return index_.find(key(x, y))->second; }

  /// Link `slot` loses apex `from` to `to`. The new face's other two links
  /// are `via_x` (through endpoint x) and `via_y` (through the other one).
  void retarget(std::uint32_t slot, NodeId from, NodeId to, NodeId x, std::uint32_t via_x, std::uint32_t via_y) {
    auto& r = links_[slot];
    const int i = r.c == from ? 0 : 1;
    (i == 0 ? r.c : r.d) = to;
    const int j = r.a == x ? 0 : 1;
    r.wing[i][j] = via_x;
    r.wing[i][1 - j] = via_y;
    if (r.c > r.d) {
      std::swap(r.c, r.d);
      std::swap(r.wing[0], r.wing[1]);
    }
  }

  std::uint32_t attach(std::uint32_t slot, NodeId v) {
    incidence_[v].push_back(slot);
    return static_cast<std::uint32_t>(incidence_[v].size() - 1);
  }

  void detach(std::uint32_t slot, NodeId v) {
    auto& list = incidence_[v];
    const std::uint32_t pos = links_[slot].pos_of(v);
    const std::uint32_t moved = list.back();
    list[pos] = moved;
    links_[moved].pos_of(v) = pos;
    list.pop_back();
  }

  void push_link(NodePair ends, NodePair apex) {
    const auto slot = static_cast<std::uint32_t>(links_.size());
    LinkRecord r;
    r.a = ends.a;
    r.b = ends.b;
    r.c = apex.a;
    r.d = apex.b;
    links_.push_back(r);
    links_.back().pos_a = attach(slot, ends.a);
    links_.back().pos_b = attach(slot, ends.b);
    index_.emplace(key(ends.a, ends.b), slot);
  }

  std::uint32_t n_ = 0;
  std::vector<LinkRecord> links_;
  std::vector<std::vector<std::uint32_t>> incidence_;
  absl::flat_hash_map<std::uint64_t, std::uint32_t, PairHash> index_;
  std::uint64_t sum_sq_degrees_ = 0;
};

/// Every invariant violation found, one human-readable line each. Empty iff
/// the triangulation is sound. Recomputes everything from the link table.
inline std::vector<std::string> validate(const Triangulation& t) {
  std::vector<std::string> out;
  auto pair_str = [](NodeId x, NodeId y) {
    return "{" + std::to_string(x) + "," + std::to_string(y) + "}";
  };
  const std::uint32_t n = t.n_;
  if (n < 4) {
    out.push_back("node count " + std::to_string(n) + " < 4");
    return out;
  }
  const std::size_t expected_links = 3 * std::size_t{n} - 6;
  if (t.links_.size() != expected_links) {
    out.push_back("euler: " + std::to_string(t.links_.size()) + " links, expected " +
                  std::to_string(expected_links));
  }
  if (t.incidence_.size() != n + 1) {
    out.push_back("incidence table has wrong size");
    return out;
  }

  auto in_range = [n](NodeId v) { return v >= 1 && v <= n; };
  bool endpoints_ok = true;
  for (std::uint32_t s = 0; s < t.links_.size(); ++s) {
    const auto& r = t.links_[s];
    if (!in_range(r.a) || !in_range(r.b) || !in_range(r.c) || !in_range(r.d)) {
      out.push_back("link slot " + std::to_string(s) + " references a node outside 1.." +
                    std::to_string(n));
      endpoints_ok = false;
      continue;
    }
    if (r.a == r.b) {
      out.push_back("simple: loop at node " + std::to_string(r.a));
      endpoints_ok = false;
    }
    if (r.c == r.d) {
      out.push_back("link " + pair_str(r.a, r.b) + ": both apexes are node " + std::to_string(r.c));
    }
    if (r.c == r.a || r.c == r.b || r.d == r.a || r.d == r.b) {
      out.push_back("link " + pair_str(r.a, r.b) + ": apex coincides with an endpoint");
    }
  }
  if (!endpoints_ok) return out;

  // Adjacency map vs link table.
  if (t.index_.size() != t.links_.size()) {
    out.push_back("adjacency: " + std::to_string(t.index_.size()) + " entries for " +
                  std::to_string(t.links_.size()) + " links (parallel link or stray entry)");
  }
  for (std::uint32_t s = 0; s < t.links_.size(); ++s) {
    const auto& r = t.links_[s];
    auto it = t.index_.find(Triangulation::key(r.a, r.b));
    if (it == t.index_.end() || it->second != s) {
      out.push_back("adjacency: entry for " + pair_str(r.a, r.b) + " does not reference slot " +
                    std::to_string(s));
    }
  }

  // Incidence lists vs link table.
  std::size_t incidence_total = 0;
  for (NodeId v = 1; v <= n; ++v) incidence_total += t.incidence_[v].size();
  if (incidence_total != 2 * t.links_.size()) {
    out.push_back("incidence: lists hold " + std::to_string(incidence_total) + " entries, expected " +
                  std::to_string(2 * t.links_.size()));
  }
  for (std::uint32_t s = 0; s < t.links_.size(); ++s) {
    const auto& r = t.links_[s];
    const auto& la = t.incidence_[r.a];
    const auto& lb = t.incidence_[r.b];
    if (r.pos_a >= la.size() || la[r.pos_a] != s || r.pos_b >= lb.size() || lb[r.pos_b] != s) {
      out.push_back("incidence: link " + pair_str(r.a, r.b) + " missing from an endpoint list");
    }
  }
  for (std::uint32_t s = 0; s < t.links_.size(); ++s) {
    const auto& r = t.links_[s];
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const auto w = r.wing[i][j];
        const NodePair want(j == 0 ? r.a : r.b, i == 0 ? r.c : r.d);
        if (w >= t.links_.size() || NodePair(t.links_[w].a, t.links_[w].b) != want) {
          out.push_back("link " + pair_str(r.a, r.b) + ": wing " + pair_str(want.a, want.b) + " is stale");
        }
      }
    }
  }
  if (!out.empty()) return out;

  // Faces: each apex record must be mirrored by the other two sides.
  auto apex_of = [&](NodeId x, NodeId y, NodeId z) {
    auto it = t.index_.find(Triangulation::key(x, y));
    if (it == t.index_.end()) return false;
    const auto& r = t.links_[it->second];
    return r.c == z || r.d == z;
  };
  std::set<Triangle> faces;
  for (const auto& r : t.links_) {
    for (NodeId apex : {r.c, r.d}) {
      if (!apex_of(r.a, apex, r.b) || !apex_of(r.b, apex, r.a)) {
        out.push_back("face {" + std::to_string(r.a) + "," + std::to_string(r.b) + "," +
                      std::to_string(apex) + "} is not recorded by all three of its links");
      } else {
        faces.emplace(r.a, r.b, apex);
      }
    }
  }
  const std::size_t expected_faces = 2 * std::size_t{n} - 4;
  if (faces.size() != expected_faces) {
    out.push_back("euler: " + std::to_string(faces.size()) + " faces, expected " +
                  std::to_string(expected_faces));
  }

  std::uint64_t degree_sum = 0, sq_sum = 0;
  for (NodeId v = 1; v <= n; ++v) {
    const std::uint64_t d = t.incidence_[v].size();
    degree_sum += d;
    sq_sum += d * d;
    if (d < 3) out.push_back("node " + std::to_string(v) + " has degree " + std::to_string(d) + " < 3");
  }
  if (degree_sum != 6 * std::uint64_t{n} - 12) {
    out.push_back("handshake: degree sum " + std::to_string(degree_sum) + ", expected " +
                  std::to_string(6 * std::uint64_t{n} - 12));
  }
  if (sq_sum != t.sum_sq_degrees_) {
    out.push_back("cached squared-degree sum " + std::to_string(t.sum_sq_degrees_) +
                  " disagrees with recomputed " + std::to_string(sq_sum));
  }
  if (!out.empty()) return out;

  // Each vertex link must be a single cycle through all neighbours.
  for (NodeId v = 1; v <= n; ++v) {
    const auto& inc = t.incidence_[v];
    const NodeId first = t.links_[inc.front()].other(v);
    NodeId prev = 0, cur = first;
    std::size_t steps = 0;
    do {
      const auto& r = t.links_[t.index_.find(Triangulation::key(v, cur))->second];
      const NodeId next = (r.c != prev) ? r.c : r.d;
      prev = cur;
      cur = next;
      ++steps;
    } while (cur != first && steps <= inc.size());
    if (steps != inc.size()) {
      out.push_back("node " + std::to_string(v) + ": neighbourhood is not a single cycle");
    }
  }
  return out;
}

inline Triangulation make_tetrahedron() {
  const std::array<Triangle, 4> faces{Triangle(1, 2, 3), Triangle(1, 2, 4), Triangle(1, 3, 4),
                                      Triangle(2, 3, 4)};
  return Triangulation::from_triangles(4, faces);
}

/// Double wheel: apexes 1 and 2 over the path 3-4-...-n, closed by faces
/// (1,2,3) and (1,2,n). Degrees d1 = d2 = n-1, d3 = dn = 3, others 4.
inline Triangulation make_christmas_tree(std::uint32_t n) {
  if (n < 4) throw std::domain_error("christmas tree needs n >= 4, got " + std::to_string(n));
  std::vector<Triangle> faces{Triangle(1, 2, 3), Triangle(1, 2, n)};
  for (NodeId i = 3; i + 1 <= n; ++i) {
    faces.emplace_back(1, i, i + 1);
    faces.emplace_back(2, i, i + 1);
  }
  return Triangulation::from_triangles(n, faces);
}

inline std::vector<std::pair<NodeId, std::uint32_t>> degree_sequence(const Triangulation& t) {
  std::vector<std::pair<NodeId, std::uint32_t>> out;
  out.reserve(t.node_count());
  for (NodeId v = 1; v <= t.node_count(); ++v) out.emplace_back(v, t.degree(v));
  return out;
}

/// `tri n=<n> f=<2n-4>` followed by one sorted face per line, faces sorted.
inline std::string serialize(const Triangulation& t) {
  std::string out = "tri n=" + std::to_string(t.node_count()) +
                    " f=" + std::to_string(2 * std::size_t{t.node_count()} - 4) + "\n";
  for (const auto& f : t.triangles()) {
    out += std::to_string(f.v[0]) + " " + std::to_string(f.v[1]) + " " + std::to_string(f.v[2]) + "\n";
  }
  return out;
}

namespace detail {

inline bool parse_uint(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

inline Triangulation deserialize(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) throw parse_error(1, "empty input");

  const auto head = detail::split_ws(lines[0]);
  std::uint64_t n = 0, f = 0;
  if (head.size() != 3 || head[0] != "tri" || !head[1].starts_with("n=") || !head[2].starts_with("f=") ||
      !detail::parse_uint(head[1].substr(2), n) || !detail::parse_uint(head[2].substr(2), f)) {
    throw parse_error(1, "expected header 'tri n=<n> f=<faces>'");
  }
  if (n < 4 || n > 0xffffffffULL) throw parse_error(1, "node count must be >= 4");
  if (f != 2 * n - 4) throw parse_error(1, "face count must be 2n-4 = " + std::to_string(2 * n - 4));

  std::vector<Triangle> faces;
  std::map<NodePair, int> link_uses;
  std::set<Triangle> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = detail::split_ws(lines[i]);
    if (fields.empty()) continue;
    std::array<std::uint64_t, 3> v{};
    if (fields.size() != 3 || !detail::parse_uint(fields[0], v[0]) || !detail::parse_uint(fields[1], v[1]) ||
        !detail::parse_uint(fields[2], v[2])) {
      throw parse_error(i + 1, "expected three node ids");
    }
    for (auto x : v) {
      if (x < 1 || x > n) throw parse_error(i + 1, "node id " + std::to_string(x) + " out of range");
    }
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) throw parse_error(i + 1, "repeated node in face");
    Triangle tri(static_cast<NodeId>(v[0]), static_cast<NodeId>(v[1]), static_cast<NodeId>(v[2]));
    if (!seen.insert(tri).second) throw parse_error(i + 1, "duplicate face");
    for (auto [x, y] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
      if (++link_uses[{tri.v[x], tri.v[y]}] > 2) {
        throw parse_error(i + 1, "link {" + std::to_string(tri.v[x]) + "," + std::to_string(tri.v[y]) +
                                     "} lies in more than two faces");
      }
    }
    faces.push_back(tri);
  }
  if (faces.size() != f) {
    throw parse_error(lines.size(), "read " + std::to_string(faces.size()) + " faces, header says " +
                                        std::to_string(f));
  }
  try {
    return Triangulation::from_triangles(static_cast<std::uint32_t>(n), faces);
  } catch (const usage_error& e) {
    throw parse_error(lines.size(), std::string("not a sphere triangulation: ") + e.what());
  }
}

}  // namespace flipchain
