#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "flipchain/dynamics.hpp"
#include "flipchain/exact.hpp"
#include "flipchain/random.hpp"
#include "flipchain/statistics.hpp"
#include "flipchain/triangulation.hpp"

namespace flipchain::cli {

namespace fs = std::filesystem;

/// Parses "100000", "1e8" or "2.5e6"; rejects negatives and fractions.
inline std::optional<std::uint64_t> parse_count(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::uint64_t exact = 0;
  if (flipchain::detail::parse_uint(text, exact)) return exact;
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size() || !(x >= 0) || x > 1.8e19 || std::floor(x) != x) return std::nullopt;
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct RunConfig {
  std::uint32_t n = 1000;
  SelectionRule rule = SelectionRule::node_then_link;
  std::uint64_t seed = 1;
  std::uint64_t budget = 0;                   // measured attempts after burn-in
  std::optional<std::uint64_t> burn_in;       // default 1000 n
  std::optional<std::uint64_t> sample_every;  // default n
  std::optional<std::uint64_t> series_every;  // default sample_every
  std::uint64_t rejection_window = 1000000;
  std::string initial = "christmas-tree";     // or a path to a .tri file
  std::string output = "out";
  std::uint32_t chains = 1;
  std::optional<FitWindow> fit_window;        // default [6, floor((50n)^(1/4))]

  std::uint64_t effective_burn_in() const { return burn_in.value_or(1000 * std::uint64_t{n}); }
  std::uint64_t effective_sample_every() const { return sample_every.value_or(n); }
  std::uint64_t effective_series_every() const { return series_every.value_or(effective_sample_every()); }
  FitWindow effective_fit_window() const { return fit_window.value_or(default_fit_window(n)); }

  /// Effective configuration as key=value lines, readable back by --config.
  std::string describe() const {
    std::ostringstream os;
    os << "n=" << n << "\nrule=" << to_string(rule) << "\nseed=" << seed << "\nbudget=" << budget
       << "\nburn-in=" << effective_burn_in() << "\nsample-every=" << effective_sample_every()
       << "\nseries-every=" << effective_series_every() << "\nrejection-window=" << rejection_window
       << "\ninitial=" << initial << "\nchains=" << chains << "\nfit-lo=" << effective_fit_window().lo
       << "\nfit-hi=" << effective_fit_window().hi << "\n";
    return os.str();
  }
};

inline void check_config(const RunConfig& c) {
  if (c.n < 4) throw usage_error("n must be >= 4");
  if (c.chains == 0) throw usage_error("chains must be >= 1");
  if (c.effective_sample_every() == 0 || c.effective_series_every() == 0 || c.rejection_window == 0) {
    throw usage_error("cadences must be >= 1");
  }
}

inline Triangulation initial_state(const RunConfig& c) {
  if (c.initial == "christmas-tree") return make_christmas_tree(c.n);
  std::ifstream in(c.initial);
  if (!in) throw std::runtime_error("cannot open initial triangulation '" + c.initial + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto t = deserialize(buf.str());
  if (t.node_count() != c.n) {
    throw usage_error("initial triangulation has n=" + std::to_string(t.node_count()) + ", config says n=" +
                      std::to_string(c.n));
  }
  return t;
}

struct ChainResult {
  std::uint64_t seed = 0;
  DegreeAccumulator degrees;  // measurement phase only
  std::vector<TimeSeriesRecord> series;  // whole run, burn-in included
  std::vector<RejectionWindow> rejection;  // measurement phase only
  std::int64_t initial_curvature = 0;
  std::uint64_t attempts = 0, accepted = 0, rejected = 0;
  double final_window_rejection = 0;  // over the last min(budget, 10^7) attempts
  Triangulation final_state;
};

/// Burn-in, then `budget` measured attempts with degree sampling.
inline ChainResult run_chain(const RunConfig& c, std::uint64_t seed) {
  ChainState chain(initial_state(c), c.rule, seed);
  ChainResult r;
  r.seed = seed;
  r.initial_curvature = forman_curvature_sum(chain.triangulation());

  TimeSeriesRecorder series(c.effective_series_every(), chain);
  {
    Observer* observers[] = {&series};
    run(chain, c.effective_burn_in(), observers);
  }
  DegreeSampler sampler(c.effective_sample_every());
  RejectionTracker rejection(c.rejection_window, chain);
  {
    Observer* observers[] = {&series, &sampler, &rejection};
    run(chain, c.budget, observers);
  }
  r.degrees = sampler.accumulator();
  r.series = series.records();
  r.rejection = rejection.windows();
  r.final_window_rejection = rejection.trailing_rate(std::min<std::uint64_t>(c.budget, 10000000));
  r.attempts = chain.attempts();
  r.accepted = chain.accepted();
  r.rejected = chain.rejected();
  r.final_state = chain.triangulation();
  return r;
}

struct FitOutcome {
  std::vector<FitResult> fits;
  std::vector<std::string> failures;
};

inline FitOutcome fit_both(const DegreeAccumulator& acc, FitWindow window) {
  FitOutcome out;
  const auto cum = cumulative(acc.mean_counts());
  for (auto model : {FitResult::Model::log_log, FitResult::Model::log_linear}) {
    try {
      out.fits.push_back(model == FitResult::Model::log_log ? fit_loglog(cum, window) : fit_loglinear(cum, window));
    } catch (const fit_error& e) {
      out.failures.push_back(std::string(to_string(model)) + ": " + e.what());
    }
  }
  return out;
}

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_chain_outputs(const fs::path& dir, const RunConfig& c, const ChainResult& r, std::ostream& log) {
  fs::create_directories(dir);
  std::ostringstream hist, series, fits, summary;
  const auto mean = r.degrees.mean_counts();
  write_histogram_csv(hist, mean);
  write_timeseries_csv(series, r.series);
  const auto fit = fit_both(r.degrees, c.effective_fit_window());
  write_fits_csv(fits, fit.fits);
  for (const auto& f : fit.failures) log << "warning: " << dir.string() << ": fit skipped (" << f << ")\n";
  summary << "seed=" << r.seed << "\nattempts=" << r.attempts << "\naccepted=" << r.accepted
          << "\nrejected=" << r.rejected << "\ninitial_curvature=" << r.initial_curvature
          << "\nfinal_curvature=" << forman_curvature_sum(r.final_state)
          << "\nfinal_window_rejection=" << format_number(r.final_window_rejection)
          << "\ndegree_samples=" << r.degrees.samples() << "\n";
  write_file(dir / "histogram.csv", hist.str());
  write_file(dir / "timeseries.csv", series.str());
  write_file(dir / "fits.csv", fits.str());
  write_file(dir / "summary.txt", summary.str());
  write_file(dir / "final.tri", serialize(r.final_state));
}

}  // namespace detail

struct SimulationReport {
  std::vector<ChainResult> chains;
  DegreeAccumulator merged;
  FitOutcome fits;
};

/// Runs `chains` independently seeded chains (one thread each) and writes
/// per-chain outputs plus merged degree statistics under c.output.
/// Chain k uses derive_seed(seed, k); chain 0 of a single-chain run uses
/// the seed itself.
inline SimulationReport simulate(const RunConfig& c, std::ostream& log = std::cerr) {
  check_config(c);
  SimulationReport report;
  report.chains.resize(c.chains);
  auto seed_of = [&c](std::uint32_t k) { return c.chains == 1 ? c.seed : derive_seed(c.seed, k); };
  if (c.chains == 1) {
    report.chains[0] = run_chain(c, seed_of(0));
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(c.chains);
    for (std::uint32_t k = 0; k < c.chains; ++k) {
      workers.emplace_back([&, k] {
        try {
          report.chains[k] = run_chain(c, seed_of(k));
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const fs::path out(c.output);
  fs::create_directories(out);
  detail::write_file(out / "config.txt", c.describe());
  if (c.chains == 1) {
    detail::write_chain_outputs(out, c, report.chains[0], log);
    report.merged = report.chains[0].degrees;
    report.fits = fit_both(report.merged, c.effective_fit_window());
    return report;
  }
  for (std::uint32_t k = 0; k < c.chains; ++k) {
    detail::write_chain_outputs(out / ("chain_" + std::to_string(k)), c, report.chains[k], log);
    report.merged.merge(report.chains[k].degrees);
  }
  std::ostringstream hist, fits;
  write_histogram_csv(hist, report.merged.mean_counts());
  report.fits = fit_both(report.merged, c.effective_fit_window());
  write_fits_csv(fits, report.fits.fits);
  detail::write_file(out / "histogram.csv", hist.str());
  detail::write_file(out / "fits.csv", fits.str());
  return report;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyItem {
  std::uint32_t n = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::vector<VerifyItem> verify_items(std::uint32_t n, std::uint64_t seed = 1) {
  std::vector<VerifyItem> items;
  auto add = [&](std::string name, bool ok, std::string detail) {
    items.push_back({n, std::move(name), ok, std::move(detail)});
  };
  const auto tree = make_christmas_tree(n);
  const auto problems = validate(tree);
  add("euler-validate", problems.empty(),
      problems.empty() ? std::to_string(tree.link_count()) + " links, " + std::to_string(tree.triangles().size()) + " faces"
                       : problems.front());

  const auto two = two_cycle_check(n);
  add("two-cycle", two.passed, two.detail);
  if (n >= 7) {
    const auto three = three_cycle_check(n);
    add("three-cycle", three.passed, three.detail);

    const auto flips = christmas_tree_four_cycle();
    const Rational node = cycle_balance_ratio(tree, flips, SelectionRule::node_then_link);
    const Rational expected = make_rational(10, 9);
    add("four-cycle node-then-link ratio", node == expected, "ratio=" + to_string(node) + " expected=10/9");
    add("four-cycle node-then-link not reversible", node != 1, "ratio=" + to_string(node) + " != 1/1");
    const Rational uniform = cycle_balance_ratio(tree, flips, SelectionRule::uniform_link);
    add("four-cycle uniform-link ratio", uniform == 1, "ratio=" + to_string(uniform) + " expected=1/1");
  }

  // Normalization on the tree and along a short random walk.
  bool normalized = true;
  std::string last = "1/1";
  ChainState walk(tree, SelectionRule::uniform_link, seed);
  for (int k = 0; k < 50 && normalized; ++k) {
    for (auto rule : {SelectionRule::uniform_link, SelectionRule::node_then_link}) {
      const Rational total = check_normalization(walk.triangulation(), rule);
      if (total != 1) {
        normalized = false;
        last = to_string(total);
      }
    }
    walk.advance(n);
  }
  add("normalization", normalized, "sum P_T(l) = " + last + " on 50 states, both rules");

  if (n <= default_matrix_limit) {
    const auto space = enumerate_labeled(n);
    const auto m = transition_matrix(space, SelectionRule::uniform_link);
    add("uniform-link matrix symmetric", is_symmetric(m), std::to_string(space.size()) + " states");
  }
  return items;
}

/// Prints one line per check; returns 0 iff every check passed.
inline int verify(std::uint32_t n_lo, std::uint32_t n_hi, std::ostream& os) {
  if (n_lo < 4 || n_hi < n_lo) throw usage_error("verify needs 4 <= n-lo <= n-hi");
  int failures = 0;
  for (std::uint32_t n = n_lo; n <= n_hi; ++n) {
    for (const auto& item : verify_items(n)) {
      os << "n=" << n << " " << item.name << ": " << (item.passed ? "PASS" : "FAIL") << " (" << item.detail << ")\n";
      if (!item.passed) ++failures;
    }
  }
  os << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << "\n";
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// enumerate

struct RuleAnalysis {
  SelectionRule rule;
  TransitionMatrix matrix;
  StationaryDistribution stationary;
  ReversibilityReport reversibility;
  bool uniform_stationary = false;
};

struct EnumerationReport {
  StateSpace space;
  ClassPartition classes;
  std::vector<RuleAnalysis> rules;  // empty when n exceeds the matrix limit
};

/// Direct sparse solve up to this many states; above it the class-lumped
/// solve (verified on the full matrix) is used.
inline constexpr std::size_t direct_solve_limit = 400;

inline RuleAnalysis analyze_rule(const StateSpace& space, const ClassPartition& classes, SelectionRule rule) {
  RuleAnalysis a{rule, transition_matrix(space, rule), {}, {}, false};
  a.stationary = space.size() <= direct_solve_limit ? stationary_distribution(a.matrix)
                                                   : stationary_distribution(a.matrix, classes.class_of);
  a.reversibility = reversibility_test(a.matrix, a.stationary);
  const Rational uniform(BigInt(1), BigInt(space.size()));
  a.uniform_stationary = std::all_of(a.stationary.pi.begin(), a.stationary.pi.end(),
                                     [&](const Rational& p) { return p == uniform; });
  return a;
}

inline EnumerationReport analyze(std::uint32_t n, std::uint32_t n_max = default_enumeration_limit,
                                 std::uint32_t matrix_max = default_matrix_limit) {
  EnumerationReport r;
  r.space = enumerate_labeled(n, n_max);
  r.classes = isomorphism_classes(r.space);
  if (n <= matrix_max) {
    for (auto rule : {SelectionRule::uniform_link, SelectionRule::node_then_link}) {
      r.rules.push_back(analyze_rule(r.space, r.classes, rule));
    }
  }
  return r;
}

inline std::string describe_reversibility(const StateSpace& space, const RuleAnalysis& a) {
  std::ostringstream os;
  os << "rule=" << to_string(a.rule) << "\nreversible=" << (a.reversibility.reversible ? "true" : "false") << "\n";
  if (a.reversibility.violating_pair) {
    os << "violating_pair=" << a.reversibility.violating_pair->first << " " << a.reversibility.violating_pair->second
       << "\n";
  }
  if (!a.reversibility.witness_cycle.empty()) {
    os << "witness_cycle=";
    for (auto s : a.reversibility.witness_cycle) os << s << " ";
    os << "\nwitness_flips=";
    for (const auto& f : cycle_as_flips(space, a.reversibility.witness_cycle)) os << f.a << "-" << f.b << " ";
    os << "\nwitness_ratio=" << to_string(a.reversibility.witness_ratio) << "\n";
  }
  os << "stationary_uniform=" << (a.uniform_stationary ? "true" : "false") << "\n";
  os << "power_iteration_gap=" << format_number(a.stationary.cross_check_gap) << "\n";
  return os.str();
}

inline int enumerate(std::uint32_t n, const std::string& output, std::uint32_t n_max, std::ostream& os) {
  const auto r = analyze(n, n_max);
  const fs::path out(output);
  fs::create_directories(out);
  {
    std::ofstream manifest(out / "states.txt");
    write_manifest(manifest, r.space);
  }
  os << "n=" << n << " labeled_states=" << r.space.size() << " isomorphism_classes=" << r.classes.count() << "\n";
  detail::write_file(out / "classes.txt", "labeled_states=" + std::to_string(r.space.size()) +
                                              "\nisomorphism_classes=" + std::to_string(r.classes.count()) + "\n");
  if (r.rules.empty()) {
    os << "matrix analysis skipped (n > " << default_matrix_limit << ")\n";
    return 0;
  }
  for (const auto& a : r.rules) {
    const std::string tag(to_string(a.rule));
    {
      std::ofstream m(out / ("matrix_" + tag + ".txt"));
      write_matrix(m, a.matrix);
      std::ofstream d(out / ("stationary_" + tag + ".txt"));
      write_distribution(d, a.stationary.pi);
    }
    const auto text = describe_reversibility(r.space, a);
    detail::write_file(out / ("reversibility_" + tag + ".txt"), text);
    os << text;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// tutte

/// Table `n,log_z,z,ratio_next` with ratio_next = Z_{n+1} / Z_n.
inline void tutte_table(std::span<const std::uint32_t> ns, std::ostream& os) {
  os << "n,log_z,z,ratio_next\n";
  for (auto n : ns) {
    const auto v = tutte_asymptotic(n);
    const auto next = tutte_asymptotic(n + 1);
    const BigFloat ratio = boost::multiprecision::exp(next.log_z - v.log_z);
    os << n << "," << v.log_z.str(20) << "," << v.z.str(20) << "," << ratio.str(20) << "\n";
  }
}

}  // namespace flipchain::cli
