// Command-line front end: run experiments from a config file, summarize
// result files, pre-generate demonstration caches, and smoke-test the
// library invariants.

#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bid/chain.hpp"
#include "bid/criteria.hpp"
#include "bid/decoder.hpp"
#include "bid/harness.hpp"
#include "bid/synth.hpp"

namespace {

void print_error(const std::string& message) {
  nlohmann::json j;
  j["error"] = message;
  std::cerr << j.dump() << "\n";
}

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
};

bid::harness::ExperimentConfig load_config(const std::string& path, const CommonFlags& flags) {
  auto cfg = bid::harness::parse_config_file(path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.out) cfg.out = *flags.out;
  if (flags.workers) cfg.workers = *flags.workers;
  bid::harness::validate_config(cfg);
  return cfg;
}

int cmd_run(const std::string& config_path, const CommonFlags& flags) {
  const auto cfg = load_config(config_path, flags);

  std::unique_ptr<std::ofstream> file;
  if (!cfg.out.empty()) {
    file = std::make_unique<std::ofstream>(cfg.out, std::ios::trunc);
    if (!*file) {
      print_error("cannot open output file: " + cfg.out);
      return 2;
    }
  }

  bool io_failed = false;
  bid::harness::RowSink sink = [&](const bid::harness::ResultRow& row) {
    const std::string line = bid::harness::to_json_line(row);
    if (file) {
      (*file) << line << '\n';
      if (!*file) io_failed = true;
    } else {
      std::cout << line << '\n';
    }
  };

  std::vector<bid::harness::ResultRow> rows;
  try {
    rows = bid::harness::run_experiment(cfg, sink);
  } catch (const std::exception& e) {
    if (file) (*file) << R"({"partial":true})" << '\n';
    print_error(e.what());
    return 1;
  }
  if (io_failed) {
    print_error("write failure on output file: " + cfg.out);
    return 2;
  }
  if (file) {
    file->flush();
    if (!*file) {
      print_error("write failure on output file: " + cfg.out);
      return 2;
    }
  }

  const auto summary = bid::harness::summarize(rows);
  std::cerr << "# " << rows.size() << " rows, " << summary.size() << " conditions\n";
  std::cerr << bid::harness::to_csv(summary);
  return 0;
}

int cmd_summarize(const std::string& results_path, const CommonFlags& flags) {
  std::ifstream in(results_path);
  if (!in) {
    print_error("cannot open results file: " + results_path);
    return 2;
  }
  std::vector<bid::harness::ResultRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.find("\"partial\"") != std::string::npos) {
      print_error("results file is marked partial: " + results_path);
      return 1;
    }
    rows.push_back(bid::harness::row_from_json_line(line));
  }
  if (rows.empty()) {
    print_error("results file holds no rows: " + results_path);
    return 1;
  }
  const std::string csv = bid::harness::to_csv(bid::harness::summarize(rows));
  if (flags.out && !flags.out->empty()) {
    std::ofstream out(*flags.out, std::ios::trunc);
    out << csv;
    if (!out) {
      print_error("cannot write summary: " + *flags.out);
      return 2;
    }
  } else {
    std::cout << csv;
  }
  return 0;
}

int cmd_demo_cache(const std::string& config_path, const CommonFlags& flags) {
  const auto cfg = load_config(config_path, flags);
  const auto files = bid::harness::build_demo_cache(cfg);
  for (const std::string& f : files) std::cout << f << '\n';
  return 0;
}

// Fast invariant smoke checks; the full suites live under ctest.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << '\n';
    if (!ok) ++failures;
  };

  {
    bid::Action a{0.0, 0.0};
    bid::Action b{3.0, 4.0};
    check(std::abs(bid::step_distance(a, b) - 5.0) < 1e-12, "step_distance 3-4-5");
  }
  {
    bid::chain::IdleHistogram exact = bid::chain::expert_idle_exact(0.0);
    check(exact.probs.size() == 1 && exact.probs.count(4) == 1,
          "noiseless expert idles exactly four times");
  }
  {
    bid::Rng rng(7);
    auto demos = bid::chain::generate_demos(0.0, 3, rng);
    check(demos.size() == 3 && demos[0].actions.size() == 14,
          "noiseless demonstrations have length 14");
    auto policy = bid::chain::train_tabular(demos, 10);
    bid::Rng eval(9);
    auto hist = bid::chain::rollout_learner(policy, 0.0, 50, 200, eval);
    auto oracle = bid::chain::expert_idle_exact(0.0);
    check(bid::chain::total_variation(hist, oracle) == 0.0,
          "horizon-10 learner matches the expert exactly at delta=0");
  }
  {
    auto [a, b] = bid::synth::constant_modes({0.0, 0.5}, {0.0, -0.5});
    bid::synth::BimodalChunkSampler sampler(a, b, 0.5, 0.05, 16);
    bid::Rng rng(11);
    auto [chunks, tags] = bid::synth::sample_bimodal(sampler, 0, 64, rng);
    bool tags_match = true;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      bid::ObservationHistory h = bid::ObservationHistory::single(bid::State{}, 0);
      if (sampler.classify(chunks[i], h) != tags[i]) tags_match = false;
    }
    check(tags_match, "mode classification agrees with generating tags");
  }
  {
    bid::harness::ExperimentConfig cfg;
    std::istringstream round(bid::harness::serialize_config(cfg));
    check(bid::harness::parse_config(round) == cfg, "config round-trip");
  }
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional chunk decoding experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed_value = 0;
  std::string out_value;
  int workers_value = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_value, "master seed override");
    cmd->add_option("--out", out_value, "output path override");
    cmd->add_option("--workers", workers_value, "parallel episode workers");
  };

  std::string config_path;
  std::string results_path;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config file")->required();
  add_common(run);

  CLI::App* summ = app.add_subcommand("summarize", "aggregate a result file to CSV");
  summ->add_option("results", results_path, "result file (JSON lines)")->required();
  add_common(summ);

  CLI::App* cache = app.add_subcommand("demo-cache", "pre-generate demonstration caches");
  cache->add_option("config", config_path, "experiment config file")->required();
  add_common(cache);

  app.add_subcommand("selftest", "run quick invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (CLI::App* cmd : {run, summ, cache}) {
    if (!app.got_subcommand(cmd)) continue;
    if (cmd->count("--seed") > 0) flags.seed = seed_value;
    if (cmd->count("--out") > 0) flags.out = out_value;
    if (cmd->count("--workers") > 0) flags.workers = workers_value;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(config_path, flags);
    if (app.got_subcommand("summarize")) return cmd_summarize(results_path, flags);
    if (app.got_subcommand("demo-cache")) return cmd_demo_cache(config_path, flags);
    if (app.got_subcommand("selftest")) return cmd_selftest();
  } catch (const std::exception& e) {
    print_error(e.what());
    return 1;
  }
  return 0;
}
