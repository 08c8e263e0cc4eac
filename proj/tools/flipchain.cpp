// Command-line front end: simulate, verify, enumerate, tutte.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flipchain/cli.hpp"

namespace {

using namespace flipchain;

/// Splices `key=value` lines of every `--config FILE` in front of the
/// remaining flags, so explicit flags (parsed later) take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> head, from_files, tail;
  head.emplace_back(argv[0]);
  int i = 1;
  if (i < argc && argv[i][0] != '-') head.emplace_back(argv[i++]);  // subcommand
  for (; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) {
      path = argv[++i];
    } else if (arg.starts_with("--config=")) {
      path = arg.substr(9);
    } else {
      tail.push_back(arg);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      from_files.push_back("--" + trim(line.substr(0, eq)));
      from_files.push_back(trim(line.substr(eq + 1)));
    }
  }
  head.insert(head.end(), from_files.begin(), from_files.end());
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

std::uint64_t count_or_throw(const std::string& flag, const std::string& text) {
  const auto v = cli::parse_count(text);
  if (!v) throw CLI::ValidationError(flag, "expected a non-negative integer such as 100000 or 1e8, got '" + text + "'");
  return *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-flip Markov chains on sphere triangulations"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  cli::RunConfig config;
  std::string rule_name = "node-then-link", budget = "0", burn_in, sample_every, series_every, window = "1e6";
  std::uint32_t fit_lo = 0, fit_hi = 0;
  std::string ignored_config;
  auto* sim = app.add_subcommand("simulate", "Run flip chains and write degree, curvature and rejection statistics");
  sim->add_option("--config", ignored_config, "key=value file; explicit flags override it");
  sim->add_option("--n", config.n, "Number of nodes (>= 4)")->capture_default_str();
  sim->add_option("--rule", rule_name, "uniform-link | node-then-link")->capture_default_str();
  sim->add_option("--seed", config.seed, "PRNG seed")->capture_default_str();
  sim->add_option("--budget", budget, "Measured attempts after burn-in (accepts 1e8)")->capture_default_str();
  sim->add_option("--burn-in", burn_in, "Attempts before measuring [default 1000 n]");
  sim->add_option("--sample-every", sample_every, "Degree-sampling cadence in attempts [default n]");
  sim->add_option("--series-every", series_every, "Time-series cadence in attempts [default sample-every]");
  sim->add_option("--rejection-window", window, "Window for rejection tracking")->capture_default_str();
  sim->add_option("--initial", config.initial, "christmas-tree or path to a .tri file")->capture_default_str();
  sim->add_option("--out", config.output, "Output directory")->capture_default_str();
  sim->add_option("--chains", config.chains, "Independent chains run in parallel")->capture_default_str();
  sim->add_option("--fit-lo", fit_lo, "Fit window lower degree [default 6]");
  sim->add_option("--fit-hi", fit_hi, "Fit window upper degree [default floor((50n)^(1/4))]");

  std::uint32_t n_lo = 7, n_hi = 10;
  auto* ver = app.add_subcommand("verify", "Check flip-chain identities at small n; exit 1 on any failure");
  ver->add_option("--config", ignored_config, "key=value file; explicit flags override it");
  ver->add_option("--n-lo", n_lo, "Smallest n")->capture_default_str();
  ver->add_option("--n-hi", n_hi, "Largest n")->capture_default_str();

  std::uint32_t enum_n = 6, n_max = default_enumeration_limit;
  std::string enum_out = "enumeration";
  auto* enu = app.add_subcommand("enumerate", "Enumerate labeled triangulations, transition matrices and stationary laws");
  enu->add_option("--config", ignored_config, "key=value file; explicit flags override it");
  enu->add_option("--n", enum_n, "Number of nodes")->capture_default_str();
  enu->add_option("--n-max", n_max, "Refuse enumeration above this n")->capture_default_str();
  enu->add_option("--out", enum_out, "Output directory")->capture_default_str();

  std::vector<std::uint32_t> tutte_ns{10, 100, 1000};
  auto* tut = app.add_subcommand("tutte", "Tabulate the asymptotic triangulation count Z_n");
  tut->add_option("--config", ignored_config, "key=value file; explicit flags override it");
  tut->add_option("--n", tutte_ns, "Values of n (>= 3)")->expected(1, -1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->capture_default_str();

  try {
    auto args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      const auto rule = parse_rule(rule_name);
      if (!rule) throw CLI::ValidationError("--rule", "expected uniform-link or node-then-link");
      config.rule = *rule;
      config.budget = count_or_throw("--budget", budget);
      if (!burn_in.empty()) config.burn_in = count_or_throw("--burn-in", burn_in);
      if (!sample_every.empty()) config.sample_every = count_or_throw("--sample-every", sample_every);
      if (!series_every.empty()) config.series_every = count_or_throw("--series-every", series_every);
      config.rejection_window = count_or_throw("--rejection-window", window);
      if (fit_lo != 0 || fit_hi != 0) {
        const auto def = default_fit_window(config.n);
        config.fit_window = FitWindow{fit_lo != 0 ? fit_lo : def.lo, fit_hi != 0 ? fit_hi : def.hi};
      }
      const auto report = cli::simulate(config);
      for (std::size_t k = 0; k < report.chains.size(); ++k) {
        const auto& c = report.chains[k];
        std::cout << "chain " << k << ": attempts=" << c.attempts << " rejected=" << c.rejected
                  << " final_window_rejection=" << format_number(c.final_window_rejection) << "\n";
      }
      for (const auto& f : report.fits.fits) {
        std::cout << to_string(f.model) << " fit over [" << f.window.lo << "," << f.window.hi
                  << "]: slope=" << format_number(f.slope) << " residual=" << format_number(f.residual) << "\n";
      }
      std::cout << "outputs written to " << config.output << "\n";
      return 0;
    }
    if (ver->parsed()) return cli::verify(n_lo, n_hi, std::cout);
    if (enu->parsed()) return cli::enumerate(enum_n, enum_out, n_max, std::cout);
    if (tut->parsed()) {
      cli::tutte_table(tutte_ns, std::cout);
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
