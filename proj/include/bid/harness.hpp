#pragma once

// Experiment orchestration: a diffable key-value config format, seeded
// condition/episode streams, the five experiment kinds (diagnostic chain
// table, bimodal coherence, drift reactivity, batch-size scaling, contrast
// ablation), line-delimited result records, and CSV summaries.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bid/core.hpp"

namespace bid::harness {

enum class ExperimentKind : std::uint8_t { diagnostic, bimodal, drift, scaling, ablation };

const char* to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::diagnostic;
  int episodes = 2000;
  std::uint64_t master_seed = 1;
  std::string out;        // result file (JSON lines); empty writes nowhere
  int workers = 1;        // parallel episode workers
  std::string only;       // restrict to one condition label (replay)

  // diagnostic chain
  std::vector<double> deltas{0.0, 0.4, 0.8};
  std::vector<int> horizons{1, 3, 5, 7, 10};
  int demo_episodes = 2000;
  int max_ticks = 200;
  int expert_window = 5;
  std::string demo_cache;  // optional directory of cached demonstrations

  // decoder hyperparameters
  int batch_size = 30;  // N
  int mode_size = 10;   // K
  double rho = 0.9;
  double lambda = 0.75;
  int chunk_length = 16;  // l
  std::vector<int> batch_sizes{1, 5, 15, 30};

  // synthetic environments
  std::string geometry = "constant";  // constant | parabolic (bimodal kind)
  double sigma = 0.05;
  double separation = 0.5;  // inter-mode step separation (constant geometry)
  double mode_prob = 0.5;
  int episode_ticks = 60;  // T
  double blur = 0.5;        // weak-sampler mode collapse
  double extra_sigma = 0.05;
  double amplitude = 0.45;  // lateral arc amplitude (pursuit / parabolic)
  double drift_speed = 0.01;
  double tolerance = 0.06;
  double max_step = 0.1;
  double target_distance = 1.0;

  bool operator==(const ExperimentConfig&) const = default;
};

// Key-value text format, one `key = value` per line, '#' comments, lists
// comma-separated. serialize emits every field in a fixed order so configs
// diff cleanly; parse(serialize(cfg)) == cfg.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Rejects out-of-range fields (K > N, rho outside [0,1], ...) up front.
void validate_config(const ExperimentConfig& cfg);

struct ResultRow {
  std::string experiment;
  std::uint64_t master_seed = 0;
  std::string condition;  // "key=value" labels, space separated
  std::string metric;
  double value = 0.0;
  int episodes = 0;       // episodes behind this row (1 for per-episode rows)
  double wall_seconds = 0.0;  // informational; excluded from result files

  bool operator==(const ResultRow&) const = default;
};

// One JSON object per row. wall_seconds is deliberately not serialized so
// identical (config, seed) runs produce byte-identical files.
std::string to_json_line(const ResultRow& row);
ResultRow row_from_json_line(const std::string& line);

// --- seed streams -----------------------------------------------------------
//
// Documented derivation, reproducible outside this codebase:
//   fnv1a64(label): FNV-1a over the label bytes (offset 14695981039346656037,
//     prime 1099511628211).
//   splitmix64(x): the standard SplitMix64 finalizer.
//   stream_seed(master, label)      = splitmix64(master ^ fnv1a64(label))
//   episode_seed(master, label, ep) = splitmix64(stream_seed(master, label)
//                                      ^ (0x9E3779B97F4A7C15 * (ep + 1)))
// Episode rngs are std::mt19937_64 seeded with episode_seed. Labels are the
// condition strings recorded in result rows, which makes any row replayable
// from (master_seed, condition).

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(const std::string& label);
std::uint64_t stream_seed(std::uint64_t master, const std::string& label);
std::uint64_t episode_seed(std::uint64_t master, const std::string& label,
                           std::uint64_t episode);

// --- execution ---------------------------------------------------------------

using RowSink = std::function<void(const ResultRow&)>;

// Runs every condition of the configured experiment, returning all rows in a
// deterministic order (and streaming them to `sink`, when given, as each
// condition completes). Deterministic for a fixed (config, master_seed).
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RowSink& sink = {});

// Condition labels for a config, in execution order (used for replay).
std::vector<std::string> list_conditions(const ExperimentConfig& cfg);

// Applies "key=value" condition labels onto a base config, yielding the
// sub-config that reruns exactly that condition.
ExperimentConfig apply_condition(ExperimentConfig base, const std::string& condition);

struct SummaryRow {
  std::string experiment;
  std::string condition;
  std::string metric;
  int count = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;  // sample standard error; 0 for a single row
};

// Groups rows by (experiment, condition, metric); stable output ordering.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

std::string to_csv(const std::vector<SummaryRow>& summary);

// Pre-generates demonstration caches for every delta of a diagnostic config
// into cfg.demo_cache. Returns the files written.
std::vector<std::string> build_demo_cache(const ExperimentConfig& cfg);

// Cache file name for one delta (relative to the cache directory).
std::string demo_cache_name(const ExperimentConfig& cfg, double delta);

}  // namespace bid::harness
