#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flipchain/dynamics.hpp"
#include "flipchain/triangulation.hpp"

namespace flipchain {

/// Shortest decimal form that round-trips.
inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

// ---------------------------------------------------------------------------
// Degree histograms

/// counts[d] = number of nodes of degree d.
struct DegreeHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  std::uint32_t max_degree() const {
    for (std::size_t d = counts.size(); d-- > 0;) {
      if (counts[d] != 0) return static_cast<std::uint32_t>(d);
    }
    return 0;
  }
};

inline DegreeHistogram degree_histogram(const Triangulation& t) {
  DegreeHistogram h;
  h.n = t.node_count();
  for (NodeId v = 1; v <= t.node_count(); ++v) {
    const auto d = t.degree(v);
    if (d >= h.counts.size()) h.counts.resize(d + 1, 0);
    ++h.counts[d];
  }
  return h;
}

/// Sum of degree histograms over sampled states; the time average is
/// totals / samples. Merging accumulators is associative and commutative.
class DegreeAccumulator {
 public:
  void add(const Triangulation& t) {
    n_ = t.node_count();
    for (NodeId v = 1; v <= t.node_count(); ++v) {
      const auto d = t.degree(v);
      if (d >= totals_.size()) totals_.resize(d + 1, 0);
      ++totals_[d];
    }
    ++samples_;
  }

  void merge(const DegreeAccumulator& other) {
    if (samples_ != 0 && other.samples_ != 0 && n_ != other.n_) {
      throw usage_error("cannot merge degree statistics of different n");
    }
    if (other.totals_.size() > totals_.size()) totals_.resize(other.totals_.size(), 0);
    for (std::size_t d = 0; d < other.totals_.size(); ++d) totals_[d] += other.totals_[d];
    samples_ += other.samples_;
    if (other.samples_ != 0) n_ = other.n_;
  }

  std::uint64_t samples() const { return samples_; }
  std::uint32_t node_count() const { return n_; }
  const std::vector<std::uint64_t>& totals() const { return totals_; }

  /// Average number of nodes of each degree.
  std::vector<double> mean_counts() const {
    std::vector<double> out(totals_.size(), 0.0);
    if (samples_ == 0) return out;
    for (std::size_t d = 0; d < totals_.size(); ++d) {
      out[d] = static_cast<double>(totals_[d]) / static_cast<double>(samples_);
    }
    return out;
  }

  friend bool operator==(const DegreeAccumulator&, const DegreeAccumulator&) = default;

 private:
  std::vector<std::uint64_t> totals_;
  std::uint64_t samples_ = 0;
  std::uint32_t n_ = 0;
};

/// d(i) = number of nodes with degree >= i, for i = 3..max degree.
struct CumulativeDistribution {
  static constexpr std::uint32_t first_degree = 3;
  std::vector<double> ge;  // ge[k] = d(first_degree + k)

  std::uint32_t last_degree() const {
    return first_degree + static_cast<std::uint32_t>(ge.size()) - 1;
  }
  double at(std::uint32_t i) const {
    if (i < first_degree) return ge.empty() ? 0.0 : ge.front();
    const std::size_t k = i - first_degree;
    return k < ge.size() ? ge[k] : 0.0;
  }
};

/// Suffix sums of per-degree counts (index = degree).
inline CumulativeDistribution cumulative(std::span<const double> counts) {
  CumulativeDistribution c;
  std::size_t last = counts.size();
  while (last > 0 && counts[last - 1] == 0) --last;
  if (last <= CumulativeDistribution::first_degree) return c;
  c.ge.assign(last - CumulativeDistribution::first_degree, 0.0);
  double running = 0;
  for (std::size_t d = last; d-- > CumulativeDistribution::first_degree;) {
    running += counts[d];
    c.ge[d - CumulativeDistribution::first_degree] = running;
  }
  return c;
}

inline CumulativeDistribution cumulative(const DegreeHistogram& h) {
  std::vector<double> counts(h.counts.begin(), h.counts.end());
  return cumulative(counts);
}

struct LogBin {
  std::uint32_t lo = 0, hi = 0;  // degrees in [lo, hi)
  double count = 0;
  double density = 0;  // count / (hi - lo)
};

/// Geometric bins [3*base^k, 3*base^(k+1)). A view for sparse tails.
inline std::vector<LogBin> log_binned(std::span<const double> counts, double base = 2.0) {
  if (base <= 1.0) throw usage_error("log bin base must exceed 1");
  std::vector<LogBin> bins;
  double edge = CumulativeDistribution::first_degree;
  while (static_cast<std::size_t>(edge) < counts.size()) {
    LogBin bin;
    bin.lo = static_cast<std::uint32_t>(std::ceil(edge));
    edge *= base;
    bin.hi = std::max(bin.lo + 1, static_cast<std::uint32_t>(std::ceil(edge)));
    for (std::uint32_t d = bin.lo; d < bin.hi && d < counts.size(); ++d) bin.count += counts[d];
    bin.density = bin.count / static_cast<double>(bin.hi - bin.lo);
    bins.push_back(bin);
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Fits

class fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitWindow {
  std::uint32_t lo = 6;
  std::uint32_t hi = 6;
};

/// [6, floor((50 n)^(1/4))]. Above the upper end a pure d^-4 density with
/// n nodes predicts fewer than one node per degree.
inline FitWindow default_fit_window(std::uint64_t n) {
  const std::uint64_t target = 50 * n;
  std::uint32_t k = 0;
  while (std::uint64_t{k + 1} * (k + 1) * (k + 1) * (k + 1) <= target) ++k;
  return {6, k};
}

struct FitResult {
  enum class Model { log_log, log_linear };

  Model model = Model::log_log;
  FitWindow window;
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // sum of squared residuals in log d(i)
  std::size_t points = 0;
};

inline std::string_view to_string(FitResult::Model m) {
  return m == FitResult::Model::log_log ? "log-log" : "log-linear";
}

namespace detail {

inline FitResult least_squares(const CumulativeDistribution& c, FitWindow w, FitResult::Model model) {
  if (w.hi < w.lo) throw fit_error("empty fit window");
  std::vector<std::pair<double, double>> pts;
  for (std::uint32_t i = std::max(w.lo, CumulativeDistribution::first_degree); i <= w.hi; ++i) {
    const double y = c.at(i);
    if (y <= 0) continue;
    const double x = model == FitResult::Model::log_log ? std::log(static_cast<double>(i)) : static_cast<double>(i);
    pts.emplace_back(x, std::log(y));
  }
  if (pts.size() < 3) {
    throw fit_error("fit needs at least 3 nonzero points in [" + std::to_string(w.lo) + ", " +
                    std::to_string(w.hi) + "], found " + std::to_string(pts.size()));
  }
  const double count = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= count;
  my /= count;
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  FitResult r;
  r.model = model;
  r.window = w;
  r.points = pts.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  for (auto [x, y] : pts) {
    const double e = y - (r.intercept + r.slope * x);
    r.residual += e * e;
  }
  return r;
}

}  // namespace detail

/// Least squares of log d(i) on log i. Slope -3 means a d^-4 density.
inline FitResult fit_loglog(const CumulativeDistribution& c, FitWindow w) {
  return detail::least_squares(c, w, FitResult::Model::log_log);
}

/// Least squares of log d(i) on i; straight for exponential tails.
inline FitResult fit_loglinear(const CumulativeDistribution& c, FitWindow w) {
  return detail::least_squares(c, w, FitResult::Model::log_linear);
}

// ---------------------------------------------------------------------------
// Curvature and correlations

/// sum_i (d_i^2 - 5 d_i), read from the triangulation's running sum of
/// squared degrees. Since sum_i d_i = 6n - 12, only the squares move.
inline std::int64_t forman_curvature_sum(const Triangulation& t) {
  return static_cast<std::int64_t>(t.sum_squared_degrees()) - 5 * (6 * std::int64_t{t.node_count()} - 12);
}

inline std::int64_t forman_curvature_recompute(const Triangulation& t) {
  std::int64_t total = 0;
  for (NodeId v = 1; v <= t.node_count(); ++v) {
    const std::int64_t d = t.degree(v);
    total += d * d - 5 * d;
  }
  return total;
}

/// Change of the curvature sum when {a,b} flips to {c,d}; degrees pre-flip.
inline std::int64_t forman_flip_delta(std::int64_t da, std::int64_t db, std::int64_t dc, std::int64_t dd) {
  return 2 * (dc + dd - da - db + 2);
}

struct NeighborDegreeStats {
  /// joint[(x, y)] = number of (link, orientation) pairs whose tail has
  /// degree x and head degree y. Symmetric; totals 2 (3n - 6).
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> joint;
  /// Pearson correlation of endpoint degrees; empty when degenerate.
  std::optional<double> correlation;
};

inline NeighborDegreeStats neighbor_degree_stats(const Triangulation& t) {
  NeighborDegreeStats s;
  double sx = 0, sxx = 0, sxy = 0, count = 0;
  for (std::uint32_t slot = 0; slot < t.link_count(); ++slot) {
    const auto& r = t.record(slot);
    const double x = t.degree(r.a), y = t.degree(r.b);
    ++s.joint[{t.degree(r.a), t.degree(r.b)}];
    ++s.joint[{t.degree(r.b), t.degree(r.a)}];
    // The symmetric sample has identical marginals, so one mean serves both.
    sx += x + y;
    sxx += x * x + y * y;
    sxy += 2 * x * y;
    count += 2;
  }
  const double mean = sx / count;
  const double var = sxx / count - mean * mean;
  const double cov = sxy / count - mean * mean;
  if (var > 1e-12 * std::max(1.0, mean * mean)) s.correlation = cov / var;
  return s;
}

// ---------------------------------------------------------------------------
// Observers

/// Adds the degree histogram of the current state every `every` attempts.
class DegreeSampler : public Observer {
 public:
  explicit DegreeSampler(std::uint64_t every) : every_(every) {}
  std::uint64_t cadence() const override { return every_; }
  void observe(const ChainState& chain) override { acc_.add(chain.triangulation()); }
  const DegreeAccumulator& accumulator() const { return acc_; }

 private:
  std::uint64_t every_;
  DegreeAccumulator acc_;
};

struct RejectionWindow {
  std::uint64_t end_attempt = 0;  // chain attempt count at window close
  std::uint64_t attempts = 0;
  std::uint64_t rejected = 0;

  double rate() const { return attempts == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(attempts); }
};

/// Rejected fraction per window of attempts, counted from the chain's
/// state at construction. A trailing partial window is closed by `finish`,
/// so window attempts always add up to the attempts observed.
class RejectionTracker : public Observer {
 public:
  RejectionTracker(std::uint64_t window, const ChainState& chain)
      : window_(window), last_attempts_(chain.attempts()), last_rejected_(chain.rejected()) {
    if (window == 0) throw usage_error("rejection window must be >= 1");
  }
  std::uint64_t cadence() const override { return window_; }
  void observe(const ChainState& chain) override { close(chain); }
  void finish(const ChainState& chain) override { close(chain); }
  const std::vector<RejectionWindow>& windows() const { return windows_; }

  /// Rejected fraction over the windows ending in the last `attempts`.
  double trailing_rate(std::uint64_t attempts) const {
    std::uint64_t seen = 0, rejected = 0;
    for (auto it = windows_.rbegin(); it != windows_.rend() && seen < attempts; ++it) {
      seen += it->attempts;
      rejected += it->rejected;
    }
    return seen == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(seen);
  }

 private:
  void close(const ChainState& chain) {
    if (chain.attempts() == last_attempts_) return;
    windows_.push_back({chain.attempts(), chain.attempts() - last_attempts_, chain.rejected() - last_rejected_});
    last_attempts_ = chain.attempts();
    last_rejected_ = chain.rejected();
  }

  std::uint64_t window_;
  std::uint64_t last_attempts_;
  std::uint64_t last_rejected_;
  std::vector<RejectionWindow> windows_;
};

struct TimeSeriesRecord {
  std::uint64_t attempts = 0;
  std::int64_t curvature = 0;
  double rejection_rate = 0;  // over the attempts since the previous record
  std::uint32_t max_degree = 0;
};

class TimeSeriesRecorder : public Observer {
 public:
  TimeSeriesRecorder(std::uint64_t every, const ChainState& chain)
      : every_(every), last_attempts_(chain.attempts()), last_rejected_(chain.rejected()) {
    if (every == 0) throw usage_error("time series cadence must be >= 1");
  }
  std::uint64_t cadence() const override { return every_; }
  void observe(const ChainState& chain) override { record(chain); }
  void finish(const ChainState& chain) override { record(chain); }
  const std::vector<TimeSeriesRecord>& records() const { return records_; }

 private:
  void record(const ChainState& chain) {
    if (chain.attempts() == last_attempts_) return;
    const auto& t = chain.triangulation();
    std::uint32_t max_degree = 0;
    for (NodeId v = 1; v <= t.node_count(); ++v) max_degree = std::max(max_degree, t.degree(v));
    const auto attempts = chain.attempts() - last_attempts_;
    const auto rejected = chain.rejected() - last_rejected_;
    records_.push_back({chain.attempts(), forman_curvature_sum(t),
                        static_cast<double>(rejected) / static_cast<double>(attempts), max_degree});
    last_attempts_ = chain.attempts();
    last_rejected_ = chain.rejected();
  }

  std::uint64_t every_;
  std::uint64_t last_attempts_;
  std::uint64_t last_rejected_;
  std::vector<TimeSeriesRecord> records_;
};

// ---------------------------------------------------------------------------
// CSV

/// `degree,count,cumulative_ge`, one row per degree from 3 to the maximum.
inline void write_histogram_csv(std::ostream& os, std::span<const double> counts) {
  const auto cum = cumulative(counts);
  os << "degree,count,cumulative_ge\n";
  for (std::uint32_t d = CumulativeDistribution::first_degree; !cum.ge.empty() && d <= cum.last_degree(); ++d) {
    os << d << "," << format_number(d < counts.size() ? counts[d] : 0.0) << "," << format_number(cum.at(d)) << "\n";
  }
}

inline void write_timeseries_csv(std::ostream& os, std::span<const TimeSeriesRecord> records) {
  os << "attempts,curvature,rejection_rate,max_degree\n";
  for (const auto& r : records) {
    os << r.attempts << "," << r.curvature << "," << format_number(r.rejection_rate) << "," << r.max_degree << "\n";
  }
}

inline void write_fits_csv(std::ostream& os, std::span<const FitResult> fits) {
  os << "model,d_lo,d_hi,slope,intercept,residual\n";
  for (const auto& f : fits) {
    os << to_string(f.model) << "," << f.window.lo << "," << f.window.hi << "," << format_number(f.slope) << ","
       << format_number(f.intercept) << "," << format_number(f.residual) << "\n";
  }
}

}  // namespace flipchain
