// credlab: command line front end for the auction credibility laboratory.
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "credlab/scenario.hpp"

namespace {

std::string config_dir() {
  if (const char* env = std::getenv("CREDLAB_CONFIG_DIR"); env && *env) {
    return env;
  }
#ifdef CREDLAB_DEFAULT_CONFIG_DIR
  return CREDLAB_DEFAULT_CONFIG_DIR;
#else
  return "configs";
#endif
}

// --bounds "contacts=2,states=500000": tweak the search caps from the shell.
void apply_bounds(credlab::SearchBounds& b, const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(pos, end - pos);
    std::size_t eq = part.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--bounds", "expected key=value, got " + part);
    }
    std::string key = part.substr(0, eq);
    std::string val = part.substr(eq + 1);
    if (key == "contacts") {
      b.contacts_per_bidder = static_cast<unsigned>(std::stoul(val));
    } else if (key == "states") {
      b.state_cap = std::stoull(val);
    } else if (key == "side") {
      b.side_bids.push_back(credlab::Rat::parse(val));
    } else {
      throw CLI::ValidationError("--bounds", "unknown key " + key);
    }
    pos = end + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale laboratory for credible auction design"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string bounds_text;
  std::string format_text = "pretty";
  unsigned seed = 0;
  bool seed_set = false;
  unsigned workers = 1;
  std::string repro_name;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario) {
      cmd->add_option("--scenario", scenario_path, "scenario JSON file")
          ->required();
    }
    cmd->add_option("--bounds", bounds_text,
                    "search bounds, e.g. contacts=2,states=500000,side=3/2");
    cmd->add_option("--seed", seed, "random seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--workers", workers, "worker threads");
    cmd->add_option("--format", format_text, "csv, jsonlines, or pretty");
  };

  const char* commands[] = {"simulate", "myerson", "credibility",
                            "strong-credibility", "optimize-bidspace"};
  for (const char* name : commands) {
    add_common(app.add_subcommand(name, ""), true);
  }
  auto* repro = app.add_subcommand("reproduce", "run a named reproduction");
  repro->add_option("name", repro_name, "reproduction name")->required();
  add_common(repro, false);
  app.add_subcommand("list", "list available reproductions");

  CLI11_PARSE(app, argc, argv);
  auto* sub = app.get_subcommands().front();

  try {
    if (sub->get_name() == "list") {
      for (const auto& n : credlab::list_reproductions()) {
        std::cout << n << "\n";
      }
      return 0;
    }
    credlab::Format format = credlab::parse_format(format_text);
    credlab::Report rep;
    if (sub->get_name() == "reproduce") {
      rep = credlab::run_reproduction(repro_name, config_dir(), workers);
    } else {
      credlab::Scenario s = credlab::load_scenario(scenario_path);
      if (!bounds_text.empty()) apply_bounds(s.bounds, bounds_text);
      if (seed_set) s.seed = seed;
      rep = credlab::run_command(s, sub->get_name(), workers);
    }
    credlab::write_report(rep, format, std::cout);
    return rep.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
