// Command-line front end: analyze / optimize / simulate / sweep / validate.
//
// Settings precedence, lowest to highest: built-in preset, config file,
// individual command-line flags. The subcommand always decides the mode.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdscache/experiment.hpp"

namespace {

struct CliOptions {
  std::string preset_name;
  std::string config_path;
  std::vector<std::string> overrides;  // raw key=value lines
  std::string values;
  std::string sources;
  std::uint64_t seed = 0;  // 0 = keep spec value
  bool seed_given = false;
  std::string out_path;
  bool out_given = false;
  int parallel = 0;
  bool parallel_given = false;
  bool deterministic = false;
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--preset", opt.preset_name, "Start from a built-in figure preset (fig3..fig7)");
  cmd->add_option("--config", opt.config_path, "Config file in key=value format");
  cmd->add_option("--set", opt.overrides, "Override a single key (key=value); repeatable");
  cmd->add_option("--values", opt.values, "Sweep values, comma separated");
  cmd->add_option("--sources", opt.sources,
                  "Allocation sources, comma separated "
                  "(optimal_lp|milp|round|popular|strict:<d>|none|file:<path>)");
  cmd->add_option("--seed", opt.seed, "Random seed (nonzero)")->each([&](const std::string&) {
    opt.seed_given = true;
  });
  cmd->add_option("--out", opt.out_path, "Output path (default stdout)")
      ->each([&](const std::string&) { opt.out_given = true; });
  cmd->add_option("--parallel", opt.parallel, "Worker threads for sweep rows")
      ->each([&](const std::string&) { opt.parallel_given = true; });
  cmd->add_flag("--deterministic", opt.deterministic,
                "Force single-threaded execution (output is deterministic either way "
                "given a seed; this also serializes the work)");
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

mdscache::ExperimentSpec build_spec(const CliOptions& opt, mdscache::RunMode mode) {
  using namespace mdscache;
  ExperimentSpec spec;
  if (!opt.preset_name.empty()) spec = preset(opt.preset_name);

  // One combined parse so validation only ever sees the final spec. The config
  // file goes first (its line numbers stay exact in diagnostics), then the
  // individual overrides, and the subcommand's mode last so it always wins.
  std::ostringstream text;
  if (!opt.config_path.empty()) text << read_file(opt.config_path) << '\n';
  for (const std::string& line : opt.overrides) text << line << '\n';
  if (!opt.values.empty()) text << "values = " << opt.values << '\n';
  if (!opt.sources.empty()) text << "sources = " << opt.sources << '\n';
  text << "mode = " << to_string(mode) << '\n';
  spec = parse_config(text.str(), spec);

  if (opt.seed_given) spec.seed = opt.seed;
  if (opt.out_given) spec.output_path = opt.out_path;
  if (opt.parallel_given) spec.parallel = opt.parallel;
  if (opt.deterministic) spec.parallel = 1;

  if (spec.sources.empty() && mode != RunMode::Validate) {
    const char* fallback = mode == RunMode::Optimize ? "milp" : "optimal_lp, round, popular";
    spec = parse_config(std::string("sources = ") + fallback + '\n', spec);
  }
  spec.validate();
  return spec;
}

int emit(const mdscache::RunResult& result, mdscache::RunMode mode) {
  using namespace mdscache;
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!result.spec.output_path.empty()) {
    file.open(result.spec.output_path);
    if (!file) {
      std::cerr << "error: cannot write '" << result.spec.output_path << "'\n";
      return 3;
    }
    os = &file;
  }

  if (mode == RunMode::Optimize) {
    // Emit the first successful allocation in the loadable text format.
    for (const ResultRow& row : result.rows) {
      if (!row.ok) continue;
      *os << "# source " << row.source << '\n';
      *os << "# h " << row.weighted << '\n';
      if (row.source == "milp") *os << "# bound " << row.milp_bound << '\n';
      write_allocation(*os, row.alloc, row.config.code_length);
      break;
    }
  } else {
    write_csv(*os, result);
  }

  int failed = 0;
  for (const ResultRow& row : result.rows) {
    if (!row.ok) {
      ++failed;
      std::cerr << "row (" << row.source << ", value " << row.sweep_value
                << ") failed: " << row.error << '\n';
    }
  }
  if (failed == static_cast<int>(result.rows.size()) && failed > 0) {
    std::cerr << "error: every row failed\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDS-coded cache placement optimizer and mobility-driven simulator"};
  app.require_subcommand(1);

  CliOptions opt;
  using mdscache::RunMode;
  std::vector<std::pair<CLI::App*, RunMode>> commands = {
      {app.add_subcommand("analyze", "Evaluate allocations analytically at one operating point"),
       RunMode::Analyze},
      {app.add_subcommand("optimize", "Solve for an allocation and write it out"),
       RunMode::Optimize},
      {app.add_subcommand("simulate", "Analytical table plus Monte-Carlo simulation columns"),
       RunMode::Simulate},
      {app.add_subcommand("sweep", "Produce a figure table over a parameter sweep"),
       RunMode::Sweep},
      {app.add_subcommand("validate", "Measure the contact process and compare to the model"),
       RunMode::Validate},
  };
  for (auto& [cmd, mode] : commands) add_common_options(cmd, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  RunMode mode = RunMode::Analyze;
  for (auto& [cmd, m] : commands) {
    if (cmd->parsed()) mode = m;
  }

  try {
    const mdscache::ExperimentSpec spec = build_spec(opt, mode);
    const mdscache::RunResult result = mdscache::run(spec);
    return emit(result, mode);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  }
}
