#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdscache/cache_model.hpp"
#include "mdscache/optimizer.hpp"
#include "mdscache/sim.hpp"

namespace mdscache {

enum class RunMode { Analyze, Optimize, Simulate, Sweep, Validate };
enum class SweepAxis { NOverM, Density, Theta, BetaD, Sigma };

std::string to_string(RunMode mode);
std::string to_string(SweepAxis axis);
RunMode parse_run_mode(const std::string& text);      // throws std::invalid_argument
SweepAxis parse_sweep_axis(const std::string& text);  // throws std::invalid_argument

// Where a result row's allocation comes from.
struct AllocationSource {
  enum class Kind { OptimalLp, Milp, Round, Popular, Strict, None, File };

  Kind kind = Kind::OptimalLp;
  double delta = 0.0;  // strict:<delta>
  std::string path;    // file:<path>

  static AllocationSource parse(const std::string& text);
  std::string label() const;
};

// A full experiment description: the system, what to sweep, which
// allocations to evaluate, and how to simulate. run() resolves one system
// config per sweep value and one result row per (value, source) pair.
struct ExperimentSpec {
  SystemConfig config;
  RunMode mode = RunMode::Analyze;
  SweepAxis axis = SweepAxis::NOverM;
  std::vector<double> values;  // density axis: device counts; others: parameter values
  std::vector<AllocationSource> sources;
  std::uint64_t seed = 20230817;
  std::string output_path;  // empty = stdout
  double sim_duration = 4000.0;
  double sim_warmup = 400.0;
  int parallel = 1;
  double milp_gap = 1e-6;
  long long milp_nodes = 20000;  // capped rows report the gap actually reached

  void validate() const;  // throws std::invalid_argument
};

// Flat key=value config format ('#' comments, lists comma-separated).
// Settings are applied on top of `base`; unknown keys are errors with the
// offending line in the message.
ExperimentSpec parse_config(const std::string& text, ExperimentSpec base = {});
std::string serialize(const ExperimentSpec& spec);  // parse(serialize(s)) == s

// Built-in experiment descriptions reproducing the reference figure tables.
ExperimentSpec preset(const std::string& name);  // throws on unknown name
std::vector<std::string> preset_names();

// One output row. `ok == false` rows carry the failure in `error` and leave
// the numeric fields at zero; a bad row never aborts the whole run.
struct ResultRow {
  double sweep_value = 0.0;
  std::string source;
  SystemConfig config;  // resolved for this row
  bool ok = true;
  std::string error;

  Allocation alloc;       // the allocation this row evaluated
  double downlink = 0.0;  // f
  double d2d = 0.0;       // g
  double weighted = 0.0;  // h
  double milp_bound = 0.0;
  double milp_gap = 0.0;
  long long strict_retries = -1;  // >= 0 only for strict rows

  bool simulated = false;
  SimReport sim;

  bool has_contact = false;  // validate-mode contact measurement
  ContactStats contact;
  double model_contact_time = 0.0;
  double model_interarrival = 0.0;
};

struct RunResult {
  ExperimentSpec spec;
  std::vector<ResultRow> rows;
};

RunResult run(const ExperimentSpec& spec);

// CSV with a '#' header block echoing the full spec, so the table is
// self-describing.
void write_csv(std::ostream& os, const RunResult& result);

// Allocation text format:
//   # allocation <files> <code_length>
//   <file> <k> <alpha>     (k == 0 with alpha > 0 marks a continuous entry)
void write_allocation(std::ostream& os, const Allocation& alloc, int code_length);
Allocation read_allocation(std::istream& is);

// Best popular allocation over code lengths n for which beta is a positive
// integer (exhaustive search). Returns the winning config (with its n) and
// allocation.
struct PopularChoice {
  SystemConfig config;
  Allocation alloc;
  double weighted = 0.0;
};
PopularChoice best_popular_allocation(const SystemConfig& base);

}  // namespace mdscache
