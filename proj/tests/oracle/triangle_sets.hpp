#pragma once

// Brute-force generator of labelled sphere triangulations as sets of
// triangles. Shares nothing with the flip engine: it grows a closed surface
// face by face from an open edge and filters the results afterwards.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

using Face = std::array<int, 3>;

class TriangleSets {
 public:
  explicit TriangleSets(int n) : n_(n), edge_(n + 1, std::vector<int>(n + 1, 0)) {}

  /// All labelled triangulations of the sphere on 1..n, each as a sorted
  /// face list.
  std::set<std::vector<Face>> all() {
    found_.clear();
    // Every triangulation has a face through node 1; try each as the seed.
    for (int a = 2; a <= n_; ++a) {
      for (int b = a + 1; b <= n_; ++b) {
        add({1, a, b});
        grow();
        remove({1, a, b});
      }
    }
    return found_;
  }

 private:
  void add(const Face& f) {
    faces_.push_back(f);
    ++edge_[f[0]][f[1]];
    ++edge_[f[0]][f[2]];
    ++edge_[f[1]][f[2]];
  }

  void remove(const Face& f) {
    faces_.pop_back();
    --edge_[f[0]][f[1]];
    --edge_[f[0]][f[2]];
    --edge_[f[1]][f[2]];
  }

  int count(int x, int y) const { return x < y ? edge_[x][y] : edge_[y][x]; }

  // A node is closed when it has links and every one of them is in two faces.
  bool closed(int v) const {
    bool any = false;
    for (int u = 1; u <= n_; ++u) {
      if (u == v) continue;
      const int c = count(u, v);
      if (c == 1) return false;
      any = any || c == 2;
    }
    return any;
  }

  bool has_face(const Face& f) const { return std::find(faces_.begin(), faces_.end(), f) != faces_.end(); }

  void grow() {
    if (static_cast<int>(faces_.size()) > 2 * n_ - 4) return;
    int x = 0, y = 0;
    for (int i = 1; i <= n_ && x == 0; ++i) {
      for (int j = i + 1; j <= n_; ++j) {
        if (edge_[i][j] == 1) {
          x = i;
          y = j;
          break;
        }
      }
    }
    if (x == 0) {
      accept();
      return;
    }
    for (int w = 1; w <= n_; ++w) {
      if (w == x || w == y) continue;
      if (count(x, w) >= 2 || count(y, w) >= 2) continue;
      if (count(x, w) == 0 && count(y, w) == 0 && closed(w)) continue;
      Face f{x, y, w};
      std::sort(f.begin(), f.end());
      if (has_face(f)) continue;
      add(f);
      grow();
      remove(f);
    }
  }

  void accept() {
    if (static_cast<int>(faces_.size()) != 2 * n_ - 4) return;
    for (int v = 1; v <= n_; ++v) {
      if (!single_cycle(v)) return;
    }
    if (!connected()) return;
    auto sorted = faces_;
    std::sort(sorted.begin(), sorted.end());
    found_.insert(sorted);
  }

  // The faces around v must chain into one cycle through all its neighbours.
  bool single_cycle(int v) const {
    std::vector<std::vector<int>> around(n_ + 1);
    std::size_t deg = 0;
    for (const auto& f : faces_) {
      if (f[0] != v && f[1] != v && f[2] != v) continue;
      int p = 0, q = 0;
      for (int u : f) {
        if (u == v) continue;
        (p == 0 ? p : q) = u;
      }
      around[p].push_back(q);
      around[q].push_back(p);
    }
    int start = 0;
    for (int u = 1; u <= n_; ++u) {
      if (around[u].empty()) continue;
      if (around[u].size() != 2) return false;
      ++deg;
      if (start == 0) start = u;
    }
    if (deg < 3) return false;
    int prev = 0, cur = start;
    std::size_t steps = 0;
    do {
      const int next = around[cur][0] != prev ? around[cur][0] : around[cur][1];
      prev = cur;
      cur = next;
      ++steps;
    } while (cur != start && steps <= deg);
    return steps == deg;
  }

  bool connected() const {
    std::vector<int> seen(n_ + 1, 0);
    std::vector<int> stack{1};
    seen[1] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 1; u <= n_; ++u) {
        if (u != v && count(u, v) > 0 && !seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    return std::count(seen.begin() + 1, seen.end(), 1) == n_;
  }

  int n_;
  std::vector<std::vector<int>> edge_;
  std::vector<Face> faces_;
  std::set<std::vector<Face>> found_;
};

inline std::set<std::vector<Face>> labelled_triangulations(int n) { return TriangleSets(n).all(); }

}  // namespace oracle
