#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "credlab/credibility.hpp"
#include "credlab/equilibrium.hpp"

namespace credlab {

// A fully specified experiment: grids, bidder count, protocol, search bounds,
// and optional bid-space candidates for the equilibrium optimizer.  Loaded
// from a JSON file; numeric fields accept integers, short decimals, or
// "a/b" fraction strings, all converted exactly.
struct Scenario {
  std::string name;
  Distribution values = Distribution::uniform(2);
  Distribution costs = Distribution::uniform(2);
  unsigned n_bidders = 2;
  Protocol protocol;
  SearchBounds bounds;
  std::uint64_t seed = 1;
  std::vector<BidSpace> bid_spaces;
  std::string hash;  // content hash of the source file
};

Scenario load_scenario(const std::string& path);

enum class Format { Csv, Jsonlines, Pretty };
Format parse_format(const std::string& text);

struct ReportRow {
  std::string quantity;  // what was computed
  std::string params;    // with which parameters
  std::string value;
};

struct Report {
  std::string command;
  std::string scenario_hash;
  std::string bounds_desc;
  std::vector<ReportRow> rows;
  double runtime_seconds = 0.0;
  int exit_code = 0;  // 0 ok, 1 failed expectation, 2 inconclusive
};

void write_report(const Report& r, Format f, std::ostream& os);

// Generic commands: simulate, myerson, credibility, strong-credibility,
// optimize-bidspace.  Throws std::invalid_argument for unknown commands.
Report run_command(const Scenario& s, const std::string& command,
                   unsigned workers);

// Named reproductions, each backed by a config file <name>.json living in
// config_dir.  Unknown names throw with the list of valid ones.
std::vector<std::string> list_reproductions();
Report run_reproduction(const std::string& name, const std::string& config_dir,
                        unsigned workers);

// Threshold-equilibrium solve memoized in CREDLAB_CACHE_DIR when that
// environment variable is set; otherwise computes directly.
ThresholdEquilibrium cached_solve_threshold_fpa(const BidSpace& space,
                                                const Distribution& values,
                                                const Distribution& costs,
                                                unsigned n_bidders);

// Protocol constructions shared by configs and tests: envelope menus, clock
// schedules, and all-pay bid schedules derived from the optimal reserves.
std::vector<std::vector<Rat>> optimal_menus(const Distribution& values,
                                            const Distribution& costs,
                                            unsigned n_bidders);
std::vector<std::vector<Rat>> optimal_ascending_clocks(
    const Distribution& values, const Distribution& costs);
std::vector<std::vector<Rat>> optimal_dutch_clocks(const Distribution& values,
                                                   const Distribution& costs,
                                                   unsigned n_bidders);
std::vector<std::vector<Rat>> optimal_allpay_menus(const Distribution& values,
                                                   const Distribution& costs,
                                                   unsigned n_bidders);

}  // namespace credlab
