#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "flipchain/canonical.hpp"
#include "flipchain/dynamics.hpp"
#include "flipchain/rational.hpp"
#include "flipchain/triangulation.hpp"

namespace flipchain {

// ---------------------------------------------------------------------------
// State space

/// Labeled state identity: the sorted face list, one byte per node id.
inline std::string state_key(const Triangulation& t) {
  if (t.node_count() > 255) throw usage_error("state keys support n <= 255");
  std::string key;
  for (const auto& f : t.triangles()) {
    for (auto v : f.v) key.push_back(static_cast<char>(v));
  }
  return key;
}

inline Triangulation triangulation_from_key(std::uint32_t n, std::string_view key) {
  std::vector<Triangle> faces;
  faces.reserve(key.size() / 3);
  for (std::size_t i = 0; i + 2 < key.size(); i += 3) {
    faces.emplace_back(static_cast<unsigned char>(key[i]), static_cast<unsigned char>(key[i + 1]),
                       static_cast<unsigned char>(key[i + 2]));
  }
  return Triangulation::from_triangles(n, faces);
}

/// Every labeled triangulation reachable from a seed, indexed 0..size()-1 in
/// sorted key order. States are stored compactly and rebuilt on demand.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(std::uint32_t n, std::vector<std::string> keys) : n_(n), keys_(std::move(keys)) {
    std::sort(keys_.begin(), keys_.end());
    index_.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
  }

  std::uint32_t node_count() const { return n_; }
  std::size_t size() const { return keys_.size(); }
  const std::string& key(std::size_t i) const { return keys_.at(i); }
  Triangulation at(std::size_t i) const { return triangulation_from_key(n_, keys_.at(i)); }

  std::optional<std::size_t> find(std::string_view key) const {
    auto it = index_.find(absl::string_view(key.data(), key.size()));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find(const Triangulation& t) const { return find(state_key(t)); }

 private:
  std::uint32_t n_ = 0;
  std::vector<std::string> keys_;
  absl::flat_hash_map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t default_enumeration_limit = 8;
inline constexpr std::uint32_t default_matrix_limit = 7;

/// Breadth-first search of the flip graph from `seed`.
inline StateSpace enumerate_labeled(const Triangulation& seed, std::uint32_t n_max = default_enumeration_limit) {
  const std::uint32_t n = seed.node_count();
  if (n > n_max) {
    throw std::length_error("enumeration for n=" + std::to_string(n) + " exceeds the limit n_max=" +
                            std::to_string(n_max));
  }
  absl::flat_hash_map<std::string, bool> seen;
  std::deque<std::string> queue;
  std::vector<std::string> keys;
  auto start = state_key(seed);
  seen.emplace(start, true);
  queue.push_back(std::move(start));
  while (!queue.empty()) {
    std::string key = std::move(queue.front());
    queue.pop_front();
    Triangulation t = triangulation_from_key(n, key);
    for (std::uint32_t s = 0; s < t.link_count(); ++s) {
      const auto outcome = t.flip_slot(s);
      if (!outcome.flipped()) continue;
      auto next = state_key(t);
      t.flip_slot(s);  // slot s now holds the added link; flipping it restores t
      if (seen.emplace(next, true).second) queue.push_back(std::move(next));
    }
    keys.push_back(std::move(key));
  }
  return StateSpace(n, std::move(keys));
}

inline StateSpace enumerate_labeled(std::uint32_t n, std::uint32_t n_max = default_enumeration_limit) {
  if (n > n_max) {
    throw std::length_error("enumeration for n=" + std::to_string(n) + " exceeds the limit n_max=" +
                            std::to_string(n_max));
  }
  return enumerate_labeled(make_christmas_tree(n), n_max);
}

/// Isomorphism class of each state, numbered by sorted canonical code.
struct ClassPartition {
  std::vector<std::size_t> class_of;
  std::vector<std::size_t> class_size;
  std::vector<std::string> codes;

  std::size_t count() const { return codes.size(); }
};

inline ClassPartition isomorphism_classes(const StateSpace& space) {
  std::vector<std::string> per_state(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) per_state[i] = canonical_code(space.at(i));
  ClassPartition out;
  out.codes = per_state;
  std::sort(out.codes.begin(), out.codes.end());
  out.codes.erase(std::unique(out.codes.begin(), out.codes.end()), out.codes.end());
  out.class_size.assign(out.codes.size(), 0);
  out.class_of.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto pos = std::lower_bound(out.codes.begin(), out.codes.end(), per_state[i]) - out.codes.begin();
    out.class_of[i] = static_cast<std::size_t>(pos);
    ++out.class_size[out.class_of[i]];
  }
  return out;
}

inline std::size_t count_isomorphism_classes(const StateSpace& space) {
  std::set<std::string> codes;
  for (std::size_t i = 0; i < space.size(); ++i) codes.insert(canonical_code(space.at(i)));
  return codes.size();
}

// ---------------------------------------------------------------------------
// Transition matrix

/// Sparse row-stochastic matrix of exact rationals; rows are source states.
struct TransitionMatrix {
  struct Entry {
    std::size_t col;
    Rational p;
  };
  std::vector<std::vector<Entry>> rows;  // each row sorted by column

  std::size_t size() const { return rows.size(); }

  Rational at(std::size_t i, std::size_t j) const {
    const auto& row = rows.at(i);
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const Entry& e, std::size_t c) { return e.col < c; });
    if (it == row.end() || it->col != j) return Rational(0);
    return it->p;
  }
};

inline TransitionMatrix transition_matrix(const StateSpace& space, SelectionRule rule) {
  TransitionMatrix m;
  m.rows.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    Triangulation t = space.at(i);
    Rational stay = 0;
    auto& row = m.rows[i];
    for (std::uint32_t s = 0; s < t.link_count(); ++s) {
      const auto link = t.link_at(s);
      const Rational p = link_probability(t, rule, link);
      if (!t.is_flippable(link)) {
        stay += p;
        continue;
      }
      t.flip_slot(s);
      const auto j = space.find(t);
      t.flip_slot(s);
      if (!j) {
        throw std::runtime_error("state space is not closed: a flip from state " + std::to_string(i) +
                                 " leaves the enumeration");
      }
      row.push_back({*j, p});
    }
    if (stay != 0) row.push_back({i, stay});
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.col < y.col; });
    Rational total = 0;
    for (const auto& e : row) total += e.p;
    if (total != 1) throw std::runtime_error("row " + std::to_string(i) + " sums to " + to_string(total));
  }
  return m;
}

inline bool is_symmetric(const TransitionMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (const auto& e : m.rows[i]) {
      if (m.at(e.col, i) != e.p) return false;
    }
  }
  return true;
}

/// Strong connectivity of the off-diagonal support.
inline bool is_irreducible(const TransitionMatrix& m) {
  const std::size_t size = m.size();
  if (size == 0) return false;
  std::vector<std::vector<std::size_t>> reverse(size);
  for (std::size_t i = 0; i < size; ++i) {
    for (const auto& e : m.rows[i]) {
      if (e.col != i && e.p != 0) reverse[e.col].push_back(i);
    }
  }
  auto reach_all = [size](auto&& neighbours) {
    std::vector<char> seen(size, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto w : neighbours(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == size;
  };
  auto forward = [&m](std::size_t v) {
    std::vector<std::size_t> out;
    for (const auto& e : m.rows[v]) {
      if (e.col != v && e.p != 0) out.push_back(e.col);
    }
    return out;
  };
  auto backward = [&reverse](std::size_t v) { return reverse[v]; };
  return reach_all(forward) && reach_all(backward);
}

// ---------------------------------------------------------------------------
// Stationary distribution

struct StationaryDistribution {
  std::vector<Rational> pi;
  /// Max |exact - power iteration| over states; NaN until cross-checked.
  double cross_check_gap = std::numeric_limits<double>::quiet_NaN();
};

/// Exact check of pi P = pi and sum(pi) = 1.
inline bool is_stationary(const TransitionMatrix& m, std::span<const Rational> pi) {
  if (pi.size() != m.size()) return false;
  std::vector<Rational> image(m.size(), Rational(0));
  Rational total = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (pi[i] < 0) return false;
    total += pi[i];
    if (pi[i] == 0) continue;
    for (const auto& e : m.rows[i]) image[e.col] += pi[i] * e.p;
  }
  if (total != 1) return false;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (image[i] != pi[i]) return false;
  }
  return true;
}

namespace detail {

/// Solves x Q = x, sum x = 1 for an irreducible row-stochastic Q given as
/// sparse rows. Fixes x_0 = 1, eliminates the balance equations of states
/// 1..m-1 (sparse rows, exact), back-substitutes and normalizes.
inline std::vector<Rational> solve_stationary(const std::vector<std::vector<std::pair<std::size_t, Rational>>>& q) {
  const std::size_t m = q.size();
  if (m == 1) return {Rational(1)};
  // Unknowns x_1..x_{m-1} (column c <-> state c+1). Equation for state j:
  //   sum_{i != j} x_i Q[i][j] + x_j (Q[j][j] - 1) = 0, with x_0 = 1 moved right.
  using Row = std::map<std::size_t, Rational>;
  std::vector<Row> eq(m - 1);
  std::vector<Rational> rhs(m - 1, Rational(0));
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, p] : q[i]) {
      if (j == 0) continue;
      if (i == 0) {
        rhs[j - 1] -= p;
      } else {
        eq[j - 1][i - 1] += p;
      }
    }
  }
  for (std::size_t j = 1; j < m; ++j) eq[j - 1][j - 1] -= 1;
  for (auto& row : eq) std::erase_if(row, [](const auto& kv) { return kv.second == 0; });

  const std::size_t size = m - 1;
  // Column -> rows with a nonzero there, kept in sync during elimination.
  std::vector<std::set<std::size_t>> rows_with(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (const auto& [c, v] : eq[r]) rows_with[c].insert(r);
  }
  std::vector<char> used(size, 0);
  std::vector<std::size_t> pivot_row(size);
  for (std::size_t col = 0; col < size; ++col) {
    std::size_t best = size;
    for (auto r : rows_with[col]) {
      if (!used[r] && (best == size || eq[r].size() < eq[best].size())) best = r;
    }
    if (best == size) throw std::runtime_error("singular system: stationary distribution is not unique");
    used[best] = 1;
    pivot_row[col] = best;
    const Row pivot = eq[best];
    const Rational pivot_value = pivot.at(col);
    const Rational pivot_rhs = rhs[best];
    const std::vector<std::size_t> targets(rows_with[col].begin(), rows_with[col].end());
    for (auto r : targets) {
      if (used[r]) continue;
      const Rational factor = eq[r].at(col) / pivot_value;
      for (const auto& [c, v] : pivot) {
        auto& cell = eq[r][c];
        const bool was_zero = cell == 0;
        cell -= factor * v;
        if (cell == 0) {
          eq[r].erase(c);
          rows_with[c].erase(r);
        } else if (was_zero) {
          rows_with[c].insert(r);
        }
      }
      rhs[r] -= factor * pivot_rhs;
    }
  }
  std::vector<Rational> x(m);
  x[0] = 1;
  for (std::size_t col = size; col-- > 0;) {
    const auto& row = eq[pivot_row[col]];
    Rational acc = rhs[pivot_row[col]];
    for (const auto& [c, v] : row) {
      if (c != col) acc -= v * x[c + 1];
    }
    x[col + 1] = acc / row.at(col);
  }
  Rational total = 0;
  for (const auto& v : x) total += v;
  for (auto& v : x) v /= total;
  return x;
}

}  // namespace detail

/// Power iteration in double precision, from the uniform vector.
inline std::vector<double> power_iteration(const TransitionMatrix& m, std::size_t max_iterations = 200000,
                                           double tolerance = 1e-15) {
  const std::size_t size = m.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(size);
  for (std::size_t i = 0; i < size; ++i) {
    for (const auto& e : m.rows[i]) rows[i].emplace_back(e.col, e.p.convert_to<double>());
  }
  std::vector<double> x(size, 1.0 / static_cast<double>(size)), y(size);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      for (const auto& [j, p] : rows[i]) y[j] += x[i] * p;
    }
    double change = 0;
    for (std::size_t i = 0; i < size; ++i) change += std::abs(y[i] - x[i]);
    x.swap(y);
    if (change < tolerance) break;
  }
  return x;
}

inline double max_gap(std::span<const Rational> exact, std::span<const double> approx) {
  double gap = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    gap = std::max(gap, std::abs(exact[i].convert_to<double>() - approx[i]));
  }
  return gap;
}

/// Exact sparse elimination on the full matrix. Fill-in makes the cost grow
/// quickly; practical up to a few hundred states.
inline StationaryDistribution stationary_distribution(const TransitionMatrix& m) {
  if (!is_irreducible(m)) throw std::runtime_error("transition matrix is reducible");
  std::vector<std::vector<std::pair<std::size_t, Rational>>> rows(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (const auto& e : m.rows[i]) rows[i].emplace_back(e.col, e.p);
  }
  StationaryDistribution out;
  out.pi = detail::solve_stationary(rows);
  if (!is_stationary(m, out.pi)) throw std::runtime_error("exact solve failed the pi P = pi check");
  out.cross_check_gap = max_gap(out.pi, power_iteration(m));
  return out;
}

/// Exact solve through a block partition of the states (for example the
/// isomorphism classes, under which the flip dynamics is equivariant).
/// Requires strong lumpability, solves the quotient chain, spreads each
/// block's mass evenly and then verifies pi P = pi on the full matrix, so a
/// wrong partition is reported instead of producing a wrong answer.
inline StationaryDistribution stationary_distribution(const TransitionMatrix& m, std::span<const std::size_t> block_of) {
  if (block_of.size() != m.size()) throw usage_error("partition size does not match the matrix");
  if (!is_irreducible(m)) throw std::runtime_error("transition matrix is reducible");
  const std::size_t blocks = *std::max_element(block_of.begin(), block_of.end()) + 1;
  std::vector<std::size_t> block_size(blocks, 0);
  for (auto b : block_of) ++block_size[b];

  std::vector<std::vector<Rational>> quotient(blocks);
  std::vector<Rational> sums(blocks);
  std::vector<std::vector<std::pair<std::size_t, Rational>>> quotient_rows(blocks);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::fill(sums.begin(), sums.end(), Rational(0));
    for (const auto& e : m.rows[i]) sums[block_of[e.col]] += e.p;
    auto& row = quotient[block_of[i]];
    if (row.empty()) {
      row = sums;
    } else if (row != sums) {
      throw std::runtime_error("partition is not lumpable at state " + std::to_string(i));
    }
  }
  for (std::size_t a = 0; a < blocks; ++a) {
    for (std::size_t b = 0; b < blocks; ++b) {
      if (quotient[a][b] != 0) quotient_rows[a].emplace_back(b, quotient[a][b]);
    }
  }
  const auto mass = detail::solve_stationary(quotient_rows);
  StationaryDistribution out;
  out.pi.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.pi[i] = mass[block_of[i]] / Rational(block_size[block_of[i]]);
  if (!is_stationary(m, out.pi)) throw std::runtime_error("lifted block solution fails the pi P = pi check");
  out.cross_check_gap = max_gap(out.pi, power_iteration(m));
  return out;
}

// ---------------------------------------------------------------------------
// Reversibility

struct ReversibilityReport {
  bool reversible = true;
  std::optional<std::pair<std::size_t, std::size_t>> violating_pair;
  /// States c0..c(k-1) of a flip cycle closing back to c0, k <= 4.
  std::vector<std::size_t> witness_cycle;
  /// prod_j P(c_j | c_{j+1}) / P(c_{j+1} | c_j) around witness_cycle.
  Rational witness_ratio = 1;
};

inline Rational state_cycle_ratio(const TransitionMatrix& m, std::span<const std::size_t> cycle) {
  Rational ratio = 1;
  for (std::size_t j = 0; j < cycle.size(); ++j) {
    const auto from = cycle[j], to = cycle[(j + 1) % cycle.size()];
    ratio *= m.at(to, from) / m.at(from, to);
  }
  return ratio;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> off_diagonal_neighbours(const TransitionMatrix& m) {
  std::vector<std::vector<std::size_t>> adj(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (const auto& e : m.rows[i]) {
      if (e.col != i && e.p != 0) adj[i].push_back(e.col);
    }
  }
  return adj;
}

/// First 3- or 4-cycle through link i-j whose balance ratio is not 1.
inline std::optional<std::vector<std::size_t>> unbalanced_cycle_through(
    const TransitionMatrix& m, const std::vector<std::vector<std::size_t>>& adj, std::size_t i, std::size_t j) {
  auto has = [&](std::size_t x, std::size_t y) { return std::binary_search(adj[x].begin(), adj[x].end(), y); };
  for (auto k : adj[j]) {
    if (k == i) continue;
    if (has(k, i)) {
      std::vector<std::size_t> c{i, j, k};
      if (state_cycle_ratio(m, c) != 1) return c;
    }
    for (auto l : adj[k]) {
      if (l == i || l == j || !has(l, i)) continue;
      std::vector<std::size_t> c{i, j, k, l};
      if (state_cycle_ratio(m, c) != 1) return c;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Detailed balance pi_i P_ij = pi_j P_ji, checked exactly over all pairs.
/// On failure, also searches for a cycle of length <= 4 with ratio != 1:
/// first through the violating pair, then anywhere.
inline ReversibilityReport reversibility_test(const TransitionMatrix& m, const StationaryDistribution& stationary) {
  ReversibilityReport report;
  const auto& pi = stationary.pi;
  for (std::size_t i = 0; i < m.size() && report.reversible; ++i) {
    for (const auto& e : m.rows[i]) {
      if (e.col == i) continue;
      if (pi[i] * e.p != pi[e.col] * m.at(e.col, i)) {
        report.reversible = false;
        report.violating_pair = std::pair{i, e.col};
        break;
      }
    }
  }
  if (report.reversible) return report;

  const auto adj = detail::off_diagonal_neighbours(m);
  auto [vi, vj] = *report.violating_pair;
  auto cycle = detail::unbalanced_cycle_through(m, adj, vi, vj);
  for (std::size_t i = 0; !cycle && i < m.size(); ++i) {
    for (auto j : adj[i]) {
      if ((cycle = detail::unbalanced_cycle_through(m, adj, i, j))) break;
    }
  }
  if (cycle) {
    report.witness_cycle = *cycle;
    report.witness_ratio = state_cycle_ratio(m, *cycle);
  }
  return report;
}

/// The link removed when moving from state `from` to adjacent state `to`.
inline NodePair flip_between(const StateSpace& space, std::size_t from, std::size_t to) {
  const auto a = space.at(from).link_pairs();
  const auto b = space.at(to).link_pairs();
  std::vector<NodePair> gone;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(gone));
  if (gone.size() != 1) throw usage_error("states are not one flip apart");
  return gone.front();
}

/// Link sequence that replays a state cycle with cycle_balance_ratio.
inline std::vector<NodePair> cycle_as_flips(const StateSpace& space, std::span<const std::size_t> cycle) {
  std::vector<NodePair> flips;
  for (std::size_t j = 0; j < cycle.size(); ++j) flips.push_back(flip_between(space, cycle[j], cycle[(j + 1) % cycle.size()]));
  return flips;
}

// ---------------------------------------------------------------------------
// Tutte asymptotics

using BigFloat = boost::multiprecision::cpp_bin_float_50;

struct TutteValue {
  BigFloat log_z;  // natural log
  BigFloat z;
};

/// Z_n = 3 / (16 sqrt(6 pi n^5)) * (256/27)^(n-2), asymptotic count of
/// rooted sphere triangulations with n vertices.
inline TutteValue tutte_asymptotic(std::uint32_t n) {
  if (n < 3) throw std::domain_error("tutte_asymptotic needs n >= 3");
  using boost::multiprecision::log;
  using boost::multiprecision::exp;
  const BigFloat nn = n;
  const BigFloat pi = boost::math::constants::pi<BigFloat>();
  const BigFloat log_z = log(BigFloat(3)) - log(BigFloat(16)) - log(6 * pi * nn * nn * nn * nn * nn) / 2 +
                         (nn - 2) * log(BigFloat(256) / 27);
  return {log_z, exp(log_z)};
}

// ---------------------------------------------------------------------------
// Text emitters

inline void write_manifest(std::ostream& os, const StateSpace& space) {
  for (std::size_t i = 0; i < space.size(); ++i) os << "# state " << i << "\n" << serialize(space.at(i));
}

inline void write_matrix(std::ostream& os, const TransitionMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (const auto& e : m.rows[i]) os << i << " " << e.col << " " << to_string(e.p) << "\n";
  }
}

inline void write_distribution(std::ostream& os, std::span<const Rational> pi) {
  for (std::size_t i = 0; i < pi.size(); ++i) os << i << " " << to_string(pi[i]) << "\n";
}

}  // namespace flipchain
