#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flipchain/canonical.hpp"
#include "flipchain/random.hpp"
#include "flipchain/rational.hpp"
#include "flipchain/triangulation.hpp"

namespace flipchain {

/// Distribution on links used to propose a flip.
///   uniform_link:   P_T(l) = 1 / (3n - 6)
///   node_then_link: P_T(l) = (1/n) (1/d_a + 1/d_b) for l = {a, b}
enum class SelectionRule { uniform_link, node_then_link };

inline std::string_view to_string(SelectionRule rule) {
  return rule == SelectionRule::uniform_link ? "uniform-link" : "node-then-link";
}

inline std::optional<SelectionRule> parse_rule(std::string_view name) {
  if (name == "uniform-link" || name == "uniform") return SelectionRule::uniform_link;
  if (name == "node-then-link" || name == "node") return SelectionRule::node_then_link;
  return std::nullopt;
}

inline Rational link_probability(const Triangulation& t, SelectionRule rule, LinkId link) {
  const auto ends = t.endpoints(link);
  if (rule == SelectionRule::uniform_link) return make_rational(1, static_cast<long long>(t.link_count()));
  const Rational sum = make_rational(1, t.degree(ends.a)) + make_rational(1, t.degree(ends.b));
  return sum / Rational(t.node_count());
}

/// Sum of the selection probabilities over all links. Equals 1.
inline Rational check_normalization(const Triangulation& t, SelectionRule rule) {
  Rational total = 0;
  for (std::uint32_t s = 0; s < t.link_count(); ++s) total += link_probability(t, rule, t.link_at(s));
  return total;
}

/// Node-then-link total on an arbitrary simple graph on nodes 1..n whose
/// nodes all have degree >= 1. The identity does not need a triangulation.
inline Rational node_rule_total(std::uint32_t n, std::span<const NodePair> edges) {
  std::vector<long long> degree(n + 1, 0);
  for (const auto& e : edges) {
    if (e.a < 1 || e.b > n || e.a == e.b) throw usage_error("edge outside 1..n or loop");
    ++degree[e.a];
    ++degree[e.b];
  }
  for (NodeId v = 1; v <= n; ++v) {
    if (degree[v] == 0) throw usage_error("node " + std::to_string(v) + " is isolated");
  }
  Rational total = 0;
  for (const auto& e : edges) total += make_rational(1, degree[e.a]) + make_rational(1, degree[e.b]);
  return total / Rational(n);
}

struct StepOutcome {
  LinkId chosen;
  FlipOutcome outcome;
};

/// A running chain. Evolution is a pure function of (seed, initial state,
/// rule); one step is one attempted flip, rejections included.
class ChainState {
 public:
  ChainState(Triangulation t, SelectionRule rule, std::uint64_t seed)
      : t_(std::move(t)), rule_(rule), rng_(seed) {}

  const Triangulation& triangulation() const { return t_; }
  SelectionRule rule() const { return rule_; }
  std::uint64_t attempts() const { return attempts_; }
  std::uint64_t accepted() const { return accepted_; }
  std::uint64_t rejected() const { return rejected_; }

  /// Draws a link slot. The node rule samples a node, then one of its links;
  /// that two-stage draw has exactly the node-then-link distribution.
  std::uint32_t sample_slot() {
    if (rule_ == SelectionRule::uniform_link) {
      return static_cast<std::uint32_t>(rng_.below(t_.link_count()));
    }
    const auto v = static_cast<NodeId>(1 + rng_.below(t_.node_count()));
    const auto incident = t_.incident_slots(v);
    return incident[rng_.below(incident.size())];
  }

  LinkId sample_link() { return t_.link_at(sample_slot()); }

  StepOutcome step() {
    const auto slot = sample_slot();
    const LinkId chosen = t_.link_at(slot);
    return {chosen, apply(slot)};
  }

  /// Attempts a flip of a caller-chosen link, counting it as one step.
  StepOutcome step_with(LinkId link) {
    t_.endpoints(link);
    return {link, apply(link.slot)};
  }

  /// Tight loop without outcome reporting.
  void advance(std::uint64_t count) {
    for (std::uint64_t i = 0; i < count; ++i) apply(sample_slot());
  }

 private:
  FlipOutcome apply(std::uint32_t slot) {
    const auto outcome = t_.flip_slot(slot);
    ++attempts_;
    if (outcome.flipped()) {
      ++accepted_;
    } else {
      ++rejected_;
    }
    return outcome;
  }

  Triangulation t_;
  SelectionRule rule_;
  Rng rng_;
  std::uint64_t attempts_ = 0;
  std::uint64_t accepted_ = 0;
  std::uint64_t rejected_ = 0;
};

inline LinkId sample_link(ChainState& chain) { return chain.sample_link(); }
inline StepOutcome step(ChainState& chain) { return chain.step(); }

/// Statistics sink driven by `run`. `observe` fires whenever the chain's
/// attempt counter reaches a positive multiple of `cadence()`; `finish`
/// fires once when the budget is exhausted.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual std::uint64_t cadence() const = 0;
  virtual void observe(const ChainState& chain) = 0;
  virtual void finish(const ChainState&) {}
};

inline void run(ChainState& chain, std::uint64_t budget, std::span<Observer* const> observers = {}) {
  const std::uint64_t stop = chain.attempts() + budget;
  auto notify = [&chain](Observer& obs, bool final) {
    try {
      if (final) {
        obs.finish(chain);
      } else {
        obs.observe(chain);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("observer failed at attempt " + std::to_string(chain.attempts()) + ": " +
                               e.what());
    }
  };
  while (chain.attempts() < stop) {
    std::uint64_t next = stop;
    for (auto* obs : observers) {
      const auto every = obs->cadence();
      if (every == 0) throw usage_error("observer cadence must be positive");
      next = std::min(next, (chain.attempts() / every + 1) * every);
    }
    chain.advance(next - chain.attempts());
    for (auto* obs : observers) {
      if (chain.attempts() % obs->cadence() == 0) notify(*obs, false);
    }
  }
  for (auto* obs : observers) notify(*obs, true);
}

/// P(T'|T) for the successor reached by flipping `link`. Flips from a fixed
/// state lead to distinct successors, so this is just P_T(link).
inline Rational flip_transition_probability(const Triangulation& t, LinkId link, SelectionRule rule) {
  if (!t.is_flippable(link)) {
    const auto e = t.endpoints(link);
    throw std::domain_error("link {" + std::to_string(e.a) + "," + std::to_string(e.b) +
                            "} is not flippable");
  }
  return link_probability(t, rule, link);
}

/// Probability of staying put: total selection mass of unflippable links.
inline Rational self_loop_probability(const Triangulation& t, SelectionRule rule) {
  Rational total = 0;
  for (std::uint32_t s = 0; s < t.link_count(); ++s) {
    const auto id = t.link_at(s);
    if (!t.is_flippable(id)) total += link_probability(t, rule, id);
  }
  return total;
}

/// Product over the cycle T_0 -> T_1 -> ... -> T_k of
/// P(T_j | T_{j+1}) / P(T_{j+1} | T_j). The chain is reversible iff this is
/// 1 for every cycle. Flips are named by the node pair of the link removed.
///
/// T_k must equal T_0 as a link set or be a relabeling of it. Both rules are
/// invariant under relabeling, so the stationary measure is too, and a
/// ratio other than 1 on a path from T_0 to a relabeled copy already rules
/// out detailed balance.
inline Rational cycle_balance_ratio(const Triangulation& start, std::span<const NodePair> flips,
                                    SelectionRule rule) {
  Triangulation t = start;
  Rational ratio = 1;
  for (std::size_t j = 0; j < flips.size(); ++j) {
    const auto& f = flips[j];
    const auto name = "step " + std::to_string(j + 1) + " (" + std::to_string(f.a) + "-" + std::to_string(f.b) + ")";
    const auto link = t.find_link(f.a, f.b);
    if (!link) throw std::domain_error(name + ": link is not present");
    if (!t.is_flippable(*link)) throw std::domain_error(name + ": link is not flippable");
    const Rational forward = link_probability(t, rule, *link);
    const auto outcome = t.flip(*link);
    const Rational backward = link_probability(t, rule, *t.find_link(outcome.added.a, outcome.added.b));
    ratio *= backward / forward;
  }
  if (!t.same_links(start) && canonical_code(t) != canonical_code(start)) {
    throw std::domain_error("flip sequence does not return to the starting triangulation");
  }
  return ratio;
}

/// The four flips (1-4), (2-5), (3-4), (5-6) on the christmas tree, n >= 7.
/// They rebuild the tree with nodes 4 and 5 transposed.
inline std::vector<NodePair> christmas_tree_four_cycle() { return {{1, 4}, {2, 5}, {3, 4}, {5, 6}}; }

/// The three flips (1-4), (2-3), (4-5); they rebuild the christmas tree with
/// nodes 3 and 4 transposed.
inline std::vector<NodePair> christmas_tree_three_cycle() { return {{1, 4}, {2, 3}, {4, 5}}; }

struct CheckResult {
  bool passed = false;
  std::string detail;
  explicit operator bool() const { return passed; }
};

namespace detail {

inline CheckResult apply_flips(Triangulation& t, std::span<const NodePair> flips, std::string& log) {
  for (std::size_t j = 0; j < flips.size(); ++j) {
    const auto link = t.find_link(flips[j].a, flips[j].b);
    const auto name = "(" + std::to_string(flips[j].a) + "-" + std::to_string(flips[j].b) + ")";
    if (!link) return {false, log + name + " absent"};
    const auto outcome = t.flip(*link);
    if (!outcome.flipped()) return {false, log + name + " rejected"};
    log += name + "->(" + std::to_string(outcome.added.a) + "-" + std::to_string(outcome.added.b) + ") ";
  }
  return {true, log};
}

}  // namespace detail

/// Flip (1-4) on the christmas tree and flip the new link back.
inline CheckResult two_cycle_check(std::uint32_t n) {
  if (n < 5) return {false, "two-cycle needs n >= 5"};
  const auto tree = make_christmas_tree(n);
  Triangulation t = tree;
  std::string log;
  auto forward = detail::apply_flips(t, std::vector<NodePair>{{1, 4}}, log);
  if (!forward) return forward;
  auto back = detail::apply_flips(t, std::vector<NodePair>{{3, 5}}, log);
  if (!back) return back;
  if (!t.same_links(tree)) return {false, log + "did not return to start"};
  return {true, log + "returned to start"};
}

inline CheckResult three_cycle_check(std::uint32_t n) {
  if (n < 7) return {false, "three-cycle needs n >= 7"};
  const auto tree = make_christmas_tree(n);
  Triangulation t = tree;
  std::string log;
  auto applied = detail::apply_flips(t, christmas_tree_three_cycle(), log);
  if (!applied) return applied;
  std::vector<NodeId> swap34(n + 1);
  for (NodeId v = 0; v <= n; ++v) swap34[v] = v;
  std::swap(swap34[3], swap34[4]);
  if (!t.same_links(tree.relabeled(swap34))) return {false, log + "result is not the tree with 3,4 transposed"};
  return {true, log + "tree with nodes 3,4 transposed"};
}

}  // namespace flipchain
