#include "mdscache/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mdscache/placement.hpp"

namespace mdscache {

namespace {

// Shortest decimal form that parses back to the same double; keeps the
// serialize -> parse round trip an identity.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": not a number: '" + s + "'");
  }
}

long long parse_int(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) throw std::invalid_argument(what + ": not an integer: '" + s + "'");
  return static_cast<long long>(r);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t row_seed(std::uint64_t base, std::size_t row) {
  return mix64(base + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(row) + 1));
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Analyze: return "analyze";
    case RunMode::Optimize: return "optimize";
    case RunMode::Simulate: return "simulate";
    case RunMode::Sweep: return "sweep";
    case RunMode::Validate: return "validate";
  }
  return "?";
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::NOverM: return "n_over_M";
    case SweepAxis::Density: return "density";
    case SweepAxis::Theta: return "theta";
    case SweepAxis::BetaD: return "beta_d";
    case SweepAxis::Sigma: return "sigma";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "analyze") return RunMode::Analyze;
  if (text == "optimize") return RunMode::Optimize;
  if (text == "simulate") return RunMode::Simulate;
  if (text == "sweep") return RunMode::Sweep;
  if (text == "validate") return RunMode::Validate;
  throw std::invalid_argument("unknown mode '" + text +
                              "' (expected analyze|optimize|simulate|sweep|validate)");
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "n_over_M") return SweepAxis::NOverM;
  if (text == "density") return SweepAxis::Density;
  if (text == "theta") return SweepAxis::Theta;
  if (text == "beta_d") return SweepAxis::BetaD;
  if (text == "sigma") return SweepAxis::Sigma;
  throw std::invalid_argument("unknown axis '" + text +
                              "' (expected n_over_M|density|theta|beta_d|sigma)");
}

AllocationSource AllocationSource::parse(const std::string& text) {
  AllocationSource src;
  if (text == "optimal_lp" || text == "lp") {
    src.kind = Kind::OptimalLp;
  } else if (text == "milp") {
    src.kind = Kind::Milp;
  } else if (text == "round") {
    src.kind = Kind::Round;
  } else if (text == "popular") {
    src.kind = Kind::Popular;
  } else if (text == "none") {
    src.kind = Kind::None;
  } else if (text.rfind("strict:", 0) == 0) {
    src.kind = Kind::Strict;
    src.delta = parse_double(text.substr(7), "strict delta");
    if (src.delta < 0.0) throw std::invalid_argument("strict delta must be >= 0");
  } else if (text.rfind("file:", 0) == 0) {
    src.kind = Kind::File;
    src.path = text.substr(5);
    if (src.path.empty()) throw std::invalid_argument("file source needs a path");
  } else {
    throw std::invalid_argument(
        "unknown allocation source '" + text +
        "' (expected optimal_lp|milp|round|popular|strict:<delta>|none|file:<path>)");
  }
  return src;
}

std::string AllocationSource::label() const {
  switch (kind) {
    case Kind::OptimalLp: return "optimal_lp";
    case Kind::Milp: return "milp";
    case Kind::Round: return "round";
    case Kind::Popular: return "popular";
    case Kind::Strict: return "strict:" + fmt_double(delta);
    case Kind::None: return "none";
    case Kind::File: return "file:" + path;
  }
  return "?";
}

void ExperimentSpec::validate() const {
  config.validate();
  if (seed == 0) throw std::invalid_argument("seed must be nonzero");
  if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");
  if (sim_duration <= 0.0) throw std::invalid_argument("sim_duration must be > 0");
  if (sim_warmup < 0.0) throw std::invalid_argument("sim_warmup must be >= 0");
  if (milp_gap < 0.0) throw std::invalid_argument("milp_gap must be >= 0");
  if (milp_nodes < 1) throw std::invalid_argument("milp_nodes must be >= 1");
  if (mode == RunMode::Sweep && values.empty()) {
    throw std::invalid_argument("sweep mode needs a non-empty values list");
  }
  for (double v : values) {
    switch (axis) {
      case SweepAxis::NOverM:
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("n_over_M values must be in (0, 1]");
        break;
      case SweepAxis::Density: {
        if (!(v >= 2.0) || std::abs(v - std::round(v)) > 1e-9) {
          throw std::invalid_argument("density values are device counts: integers >= 2");
        }
        break;
      }
      case SweepAxis::Theta:
        if (!(v >= 0.5 && v <= 1.0)) throw std::invalid_argument("theta values must be in [0.5, 1]");
        break;
      case SweepAxis::BetaD:
        if (!(v > 0.0)) throw std::invalid_argument("beta_d values must be > 0");
        break;
      case SweepAxis::Sigma:
        if (!(v >= 0.0 && v <= 1.5)) throw std::invalid_argument("sigma values must be in [0, 1.5]");
        break;
    }
  }
}

namespace {

// One handler per config key, shared by parse and the defaulting logic.
void apply_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  SystemConfig& c = spec.config;
  if (key == "mode") {
    spec.mode = parse_run_mode(value);
  } else if (key == "axis") {
    spec.axis = parse_sweep_axis(value);
  } else if (key == "values") {
    spec.values.clear();
    for (const std::string& item : split(value, ',')) {
      if (!item.empty()) spec.values.push_back(parse_double(item, "values"));
    }
  } else if (key == "sources") {
    spec.sources.clear();
    for (const std::string& item : split(value, ',')) {
      if (!item.empty()) spec.sources.push_back(AllocationSource::parse(item));
    }
  } else if (key == "seed") {
    spec.seed = static_cast<std::uint64_t>(parse_int(value, "seed"));
  } else if (key == "out") {
    spec.output_path = value;
  } else if (key == "parallel") {
    spec.parallel = static_cast<int>(parse_int(value, "parallel"));
  } else if (key == "sim_duration") {
    spec.sim_duration = parse_double(value, "sim_duration");
  } else if (key == "sim_warmup") {
    spec.sim_warmup = parse_double(value, "sim_warmup");
  } else if (key == "milp_gap") {
    spec.milp_gap = parse_double(value, "milp_gap");
  } else if (key == "milp_nodes") {
    spec.milp_nodes = parse_int(value, "milp_nodes");
  } else if (key == "rho") {
    c.rho = parse_double(value, "rho");
  } else if (key == "r") {
    c.r = parse_double(value, "r");
  } else if (key == "devices") {
    c.num_devices = static_cast<int>(parse_int(value, "devices"));
  } else if (key == "library") {
    c.library_size = static_cast<int>(parse_int(value, "library"));
  } else if (key == "sigma") {
    c.sigma = parse_double(value, "sigma");
  } else if (key == "s_min") {
    c.s_min = parse_double(value, "s_min");
  } else if (key == "s_max") {
    c.s_max = parse_double(value, "s_max");
  } else if (key == "omega") {
    c.omega = parse_double(value, "omega");
  } else if (key == "theta") {
    c.theta = parse_double(value, "theta");
  } else if (key == "beta_d") {
    c.beta_d = parse_double(value, "beta_d");
  } else if (key == "code_length") {
    c.code_length = static_cast<int>(parse_int(value, "code_length"));
  } else if (key == "file_size") {
    c.file_size_bits = parse_double(value, "file_size");
  } else if (key == "trunc_eps") {
    c.trunc_eps = parse_double(value, "trunc_eps");
  } else {
    throw std::invalid_argument("unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentSpec parse_config(const std::string& text, ExperimentSpec base) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    }
    try {
      apply_key(base, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                  "): " + e.what());
    }
  }
  base.validate();
  return base;
}

std::string serialize(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "mode = " << to_string(spec.mode) << '\n';
  os << "axis = " << to_string(spec.axis) << '\n';
  os << "values = ";
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    os << (i ? ", " : "") << fmt_double(spec.values[i]);
  }
  os << '\n';
  os << "sources = ";
  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    os << (i ? ", " : "") << spec.sources[i].label();
  }
  os << '\n';
  os << "seed = " << spec.seed << '\n';
  os << "out = " << spec.output_path << '\n';
  os << "parallel = " << spec.parallel << '\n';
  os << "sim_duration = " << fmt_double(spec.sim_duration) << '\n';
  os << "sim_warmup = " << fmt_double(spec.sim_warmup) << '\n';
  os << "milp_gap = " << fmt_double(spec.milp_gap) << '\n';
  os << "milp_nodes = " << spec.milp_nodes << '\n';
  const SystemConfig& c = spec.config;
  os << "rho = " << fmt_double(c.rho) << '\n';
  os << "r = " << fmt_double(c.r) << '\n';
  os << "devices = " << c.num_devices << '\n';
  os << "library = " << c.library_size << '\n';
  os << "sigma = " << fmt_double(c.sigma) << '\n';
  os << "s_min = " << fmt_double(c.s_min) << '\n';
  os << "s_max = " << fmt_double(c.s_max) << '\n';
  os << "omega = " << fmt_double(c.omega) << '\n';
  os << "theta = " << fmt_double(c.theta) << '\n';
  os << "beta_d = " << fmt_double(c.beta_d) << '\n';
  os << "code_length = " << c.code_length << '\n';
  os << "file_size = " << fmt_double(c.file_size_bits) << '\n';
  os << "trunc_eps = " << fmt_double(c.trunc_eps) << '\n';
  return os.str();
}

namespace {

std::vector<double> steps(double lo, double hi, double step) {
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(std::round(v * 1e6) / 1e6);
  return out;
}

std::vector<AllocationSource> parse_sources(const std::string& csv) {
  std::vector<AllocationSource> out;
  for (const std::string& item : split(csv, ',')) out.push_back(AllocationSource::parse(item));
  return out;
}

}  // namespace

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec spec;
  SystemConfig& c = spec.config;
  if (name == "fig3") {
    // Downlink rate vs n/M, small system.
    c.num_devices = 500;
    c.theta = 1.0;
    spec.mode = RunMode::Sweep;
    spec.axis = SweepAxis::NOverM;
    spec.values = steps(0.01, 0.09, 0.01);
    for (double v : steps(0.1, 1.0, 0.1)) spec.values.push_back(v);
    spec.sources = parse_sources("milp, optimal_lp, round, popular, strict:0");
  } else if (name == "fig4") {
    // Weighted rate vs n/M, dense system.
    c.num_devices = 2000;
    c.theta = 0.75;
    spec.mode = RunMode::Sweep;
    spec.axis = SweepAxis::NOverM;
    spec.values = {0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09};
    for (double v : steps(0.1, 1.0, 0.1)) spec.values.push_back(v);
    spec.sources = parse_sources("optimal_lp, round, popular");
  } else if (name == "fig5") {
    // Weighted rate vs device density (device counts at fixed area).
    c.theta = 0.75;
    spec.mode = RunMode::Sweep;
    spec.axis = SweepAxis::Density;
    spec.values = {100,  500,  1000, 2000,  3000,  4000, 5000,
                   6000, 7000, 8000, 9000, 10000, 15000, 20000};
    spec.sources = parse_sources("optimal_lp, round, popular, none");
  } else if (name == "fig6") {
    // Weighted rate vs downlink weight theta.
    c.num_devices = 2000;
    c.code_length = 2000;
    spec.mode = RunMode::Sweep;
    spec.axis = SweepAxis::Theta;
    spec.values = steps(0.5, 1.0, 0.05);
    spec.sources = parse_sources("optimal_lp, round, popular, none");
  } else if (name == "fig7") {
    // Weighted rate vs per-device cache size beta_d.
    c.num_devices = 2000;
    c.code_length = 2000;
    c.theta = 0.75;
    spec.mode = RunMode::Sweep;
    spec.axis = SweepAxis::BetaD;
    spec.values = {1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
    spec.sources = parse_sources("optimal_lp, round, popular");
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (have fig3, fig4, fig5, fig6, fig7)");
  }
  spec.validate();
  return spec;
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "fig6", "fig7"}; }

PopularChoice best_popular_allocation(const SystemConfig& base) {
  PopularChoice best;
  bool found = false;
  // Candidate code lengths are exactly those with an integer budget
  // beta = beta_d * M / n in [1, N]; the cache is then fully used.
  for (int budget = 1; budget <= base.library_size; ++budget) {
    const double n_exact = base.beta_d * base.num_devices / budget;
    const double n_rounded = std::round(n_exact);
    if (std::abs(n_exact - n_rounded) > 1e-9) continue;
    if (n_rounded < 1.0 || n_rounded > base.num_devices) continue;
    SystemConfig cfg = base;
    cfg.code_length = static_cast<int>(n_rounded);
    const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
    const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);
    const Allocation alloc = popular_allocation(cfg.library_size, cfg.beta());
    const double h = weighted_rate(cfg, pop, contact, alloc).weighted;
    if (!found || h < best.weighted) {
      best = {cfg, alloc, h};
      found = true;
    }
  }
  if (!found) {
    throw std::runtime_error("no code length gives an integer cache budget in [1, N]");
  }
  return best;
}

namespace {

SystemConfig apply_axis(const SystemConfig& base, SweepAxis axis, double value) {
  SystemConfig cfg = base;
  switch (axis) {
    case SweepAxis::NOverM: {
      const int n = static_cast<int>(
          std::clamp(std::round(value * base.num_devices), 1.0,
                     static_cast<double>(base.num_devices)));
      cfg.code_length = n;
      break;
    }
    case SweepAxis::Density: {
      const int m = static_cast<int>(std::round(value));
      cfg.num_devices = m;
      cfg.code_length = m;  // maximal spreading at every density
      break;
    }
    case SweepAxis::Theta:
      cfg.theta = value;
      break;
    case SweepAxis::BetaD:
      cfg.beta_d = value;
      break;
    case SweepAxis::Sigma:
      cfg.sigma = value;
      break;
  }
  return cfg;
}

Allocation load_allocation_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open allocation file '" + path + "'");
  return read_allocation(is);
}

ResultRow compute_row(const ExperimentSpec& spec, double value, const AllocationSource& src,
                      std::uint64_t seed) {
  ResultRow row;
  row.sweep_value = value;
  row.source = src.label();
  try {
    SystemConfig cfg = apply_axis(spec.config, spec.axis, value);
    cfg.validate();
    row.config = cfg;
    Rng rng(seed);

    // The popular source may pick its own code length on non-n/M axes.
    Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
    ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);

    Allocation alloc;
    const PlacementMatrix* strict_placement = nullptr;
    StrictPlacement strict;
    switch (src.kind) {
      case AllocationSource::Kind::OptimalLp:
        alloc = solve_relaxed(cfg, pop, contact).alloc;
        break;
      case AllocationSource::Kind::Milp: {
        const MilpResult res = solve_milp(cfg, pop, contact, spec.milp_gap, spec.milp_nodes);
        alloc = res.alloc;
        row.milp_bound = res.bound;
        row.milp_gap = res.gap;
        break;
      }
      case AllocationSource::Kind::Round:
        alloc = round_to_integer(solve_relaxed(cfg, pop, contact).alloc, cfg.code_length);
        break;
      case AllocationSource::Kind::Popular:
        if (spec.axis == SweepAxis::NOverM) {
          alloc = popular_allocation(cfg.library_size, cfg.beta());
        } else {
          PopularChoice choice = best_popular_allocation(cfg);
          cfg = choice.config;  // code length chosen by the search
          row.config = cfg;
          contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);
          alloc = choice.alloc;
        }
        break;
      case AllocationSource::Kind::Strict: {
        const Allocation base =
            round_to_integer(solve_relaxed(cfg, pop, contact).alloc, cfg.code_length);
        strict = greedy_strict_placement(base, cfg, src.delta, rng);
        alloc = strict.alloc;
        strict_placement = &strict.placement;
        row.strict_retries = strict.retries;
        break;
      }
      case AllocationSource::Kind::None:
        alloc = Allocation::from_k(std::vector<int>(cfg.library_size, 0), cfg.code_length);
        break;
      case AllocationSource::Kind::File:
        alloc = load_allocation_file(src.path);
        if (alloc.size() != static_cast<std::size_t>(cfg.library_size)) {
          throw std::runtime_error("allocation file size does not match library");
        }
        break;
    }

    row.alloc = alloc;
    row.downlink = downlink_rate(cfg, pop, contact, alloc);
    row.d2d = d2d_rate(cfg, pop, contact, alloc);
    if (alloc.grid_valid) {
      row.weighted = weighted_rate(cfg, pop, contact, alloc).weighted;
    } else {
      // Continuous allocations report the convex objective the LP optimizes.
      row.weighted = weighted_rate_maxform(cfg, pop, contact, alloc);
    }

    if (spec.mode == RunMode::Simulate) {
      if (!alloc.grid_valid) {
        throw std::runtime_error("cannot simulate a continuous allocation; use round");
      }
      PlacementMatrix uniform;
      const PlacementMatrix* placement = strict_placement;
      if (placement == nullptr) {
        uniform = uniform_random_placement(alloc, cfg.num_devices, cfg.code_length, rng);
        placement = &uniform;
      }
      row.sim = simulate(cfg, *placement, alloc, spec.sim_duration, spec.sim_warmup, rng);
      row.simulated = true;
    }
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

ResultRow contact_row(const ExperimentSpec& spec, std::uint64_t seed) {
  ResultRow row;
  row.source = "contact";
  try {
    const SystemConfig& cfg = spec.config;
    cfg.validate();
    row.config = cfg;
    const ContactRates rates = contact_rates(cfg.mobility());
    row.model_contact_time = rates.expected_contact_time;
    // Per-pair contact start rate: the per-device arrival rate spread over
    // the other M-1 devices.
    row.model_interarrival = rates.arrival_rate / (cfg.num_devices - 1);
    Rng rng(seed);
    row.contact = empirical_contact_stats(cfg.mobility(), spec.sim_duration, spec.sim_warmup, rng);
    row.has_contact = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

ResultRow count_check_row(const ExperimentSpec& spec, std::uint64_t seed) {
  ResultRow row;
  row.source = "count_check";
  try {
    const SystemConfig& cfg = spec.config;
    cfg.validate();
    row.config = cfg;
    Rng rng(seed);
    const Popularity pop = zipf_popularity(cfg.library_size, cfg.sigma);
    const ContactModel contact = contact_count_distribution(cfg.mobility(), cfg.trunc_eps);
    const Allocation alloc =
        round_to_integer(solve_relaxed(cfg, pop, contact).alloc, cfg.code_length);
    row.alloc = alloc;
    row.downlink = downlink_rate(cfg, pop, contact, alloc);
    row.d2d = d2d_rate(cfg, pop, contact, alloc);
    row.weighted = weighted_rate(cfg, pop, contact, alloc).weighted;
    const PlacementMatrix placement =
        uniform_random_placement(alloc, cfg.num_devices, cfg.code_length, rng);
    row.sim = simulate(cfg, placement, alloc, spec.sim_duration, spec.sim_warmup, rng);
    row.simulated = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

RunResult run(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  if (spec.mode != RunMode::Validate && spec.sources.empty()) {
    throw std::invalid_argument("at least one allocation source is required");
  }
  if (spec.values.empty() && spec.mode != RunMode::Validate && spec.mode != RunMode::Sweep) {
    // Single-point modes default to the config's own operating point.
    switch (spec.axis) {
      case SweepAxis::NOverM:
        spec.values = {static_cast<double>(spec.config.code_length) / spec.config.num_devices};
        break;
      case SweepAxis::Density: spec.values = {double(spec.config.num_devices)}; break;
      case SweepAxis::Theta: spec.values = {spec.config.theta}; break;
      case SweepAxis::BetaD: spec.values = {spec.config.beta_d}; break;
      case SweepAxis::Sigma: spec.values = {spec.config.sigma}; break;
    }
  }
  spec.validate();

  RunResult result;
  result.spec = spec;

  if (spec.mode == RunMode::Validate) {
    result.rows.push_back(contact_row(spec, row_seed(spec.seed, 0)));
    result.rows.push_back(count_check_row(spec, row_seed(spec.seed, 1)));
    return result;
  }

  struct Job {
    double value;
    AllocationSource source;
  };
  std::vector<Job> jobs;
  for (double v : spec.values) {
    for (const AllocationSource& src : spec.sources) jobs.push_back({v, src});
  }
  result.rows.resize(jobs.size());

  const int workers = std::min<int>(std::max(1, spec.parallel), static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      result.rows[i] = compute_row(spec, jobs[i].value, jobs[i].source, row_seed(spec.seed, i));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          result.rows[i] =
              compute_row(spec, jobs[i].value, jobs[i].source, row_seed(spec.seed, i));
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }
  return result;
}

namespace {

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

void put(std::ostream& os, double v, bool present) {
  if (present) os << v;
}

}  // namespace

void write_csv(std::ostream& os, const RunResult& result) {
  os << "# mdscache table v1\n";
  std::istringstream spec_lines(serialize(result.spec));
  std::string line;
  while (std::getline(spec_lines, line)) os << "# " << line << '\n';
  os << "axis,value,source,devices,code_length,library,sigma,theta,beta_d,"
        "f,g,h,milp_bound,milp_gap,strict_retries,requests,f_hat,f_ci,g_hat,g_ci,h_hat,"
        "self_hat,kl,contact_time,contact_time_model,contact_ci,interarrival,"
        "interarrival_model,intercontact,error\n";
  os.precision(10);
  const std::string axis = to_string(result.spec.axis);
  for (const ResultRow& row : result.rows) {
    os << axis << ',' << row.sweep_value << ',' << row.source << ',';
    os << row.config.num_devices << ',' << row.config.code_length << ','
       << row.config.library_size << ',' << row.config.sigma << ',' << row.config.theta << ','
       << row.config.beta_d << ',';
    const bool rates = row.ok && !row.has_contact;
    put(os, row.downlink, rates);
    os << ',';
    put(os, row.d2d, rates);
    os << ',';
    put(os, row.weighted, rates);
    os << ',';
    put(os, row.milp_bound, rates && row.source == "milp");
    os << ',';
    put(os, row.milp_gap, rates && row.source == "milp");
    os << ',';
    if (row.strict_retries >= 0) os << row.strict_retries;
    os << ',';
    if (row.simulated) os << row.sim.requests;
    os << ',';
    put(os, row.sim.downlink_rate, row.simulated);
    os << ',';
    put(os, row.sim.downlink_halfwidth, row.simulated);
    os << ',';
    put(os, row.sim.d2d_rate, row.simulated);
    os << ',';
    put(os, row.sim.d2d_halfwidth, row.simulated);
    os << ',';
    put(os, row.sim.weighted_rate, row.simulated);
    os << ',';
    put(os, row.sim.self_rate, row.simulated);
    os << ',';
    put(os, row.sim.kl_divergence, row.simulated);
    os << ',';
    put(os, row.contact.mean_contact_time, row.has_contact);
    os << ',';
    put(os, row.model_contact_time, row.has_contact);
    os << ',';
    put(os, row.contact.contact_halfwidth, row.has_contact);
    os << ',';
    put(os, row.contact.interarrival_rate, row.has_contact);
    os << ',';
    put(os, row.model_interarrival, row.has_contact);
    os << ',';
    put(os, row.contact.mean_intercontact_time, row.has_contact);
    os << ',';
    os << csv_safe(row.error) << '\n';
  }
}

void write_allocation(std::ostream& os, const Allocation& alloc, int code_length) {
  os << "# allocation " << alloc.size() << ' ' << code_length << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    const int k = alloc.grid_valid ? alloc.k[i] : 0;
    os << i << ' ' << k << ' ' << alloc.alpha[i] << '\n';
  }
}

Allocation read_allocation(std::istream& is) {
  // Leading comment lines (e.g. the provenance block `optimize` writes) are
  // skipped; the first '# allocation N n' line is the real header.
  std::size_t files = 0;
  int code_length = 0;
  bool have_header = false;
  std::string line;
  while (!have_header && std::getline(is, line)) {
    std::istringstream ls(line);
    std::string hash, tag;
    if (!(ls >> hash)) continue;  // blank line
    if (hash != "#") break;
    if (ls >> tag && tag == "allocation" && (ls >> files >> code_length)) have_header = true;
  }
  if (!have_header) {
    throw std::runtime_error("allocation file: bad header (expected '# allocation N n')");
  }
  std::vector<int> k(files, 0);
  std::vector<double> alpha(files, 0.0);
  bool all_grid = true;
  for (std::size_t row = 0; row < files; ++row) {
    std::size_t idx;
    int ki;
    double ai;
    if (!(is >> idx >> ki >> ai)) {
      throw std::runtime_error("allocation file: truncated at entry " + std::to_string(row));
    }
    if (idx >= files) throw std::runtime_error("allocation file: index out of range");
    k[idx] = ki;
    alpha[idx] = ai;
    if (ki == 0 && ai > 0.0) all_grid = false;
  }
  if (all_grid) {
    return Allocation::from_k(k, code_length);
  }
  return Allocation::continuous(alpha);
}

}  // namespace mdscache
