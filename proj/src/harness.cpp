#include "bid/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "bid/chain.hpp"
#include "bid/criteria.hpp"
#include "bid/decoder.hpp"
#include "bid/synth.hpp"

namespace bid::harness {

using nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::diagnostic: return "diagnostic";
    case ExperimentKind::bimodal: return "bimodal";
    case ExperimentKind::drift: return "drift";
    case ExperimentKind::scaling: return "scaling";
    case ExperimentKind::ablation: return "ablation";
  }
  return "unknown";
}

ExperimentKind kind_from_string(const std::string& name) {
  if (name == "diagnostic") return ExperimentKind::diagnostic;
  if (name == "bimodal") return ExperimentKind::bimodal;
  if (name == "drift") return ExperimentKind::drift;
  if (name == "scaling") return ExperimentKind::scaling;
  if (name == "ablation") return ExperimentKind::ablation;
  throw ConfigError("unknown experiment kind: " + name);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt_double(xs[i]);
  }
  return out;
}

std::string fmt_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& s) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ConfigError("not a number: '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError("not an integer: '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError("not an unsigned integer: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream in(s);
  while (std::getline(in, token, sep)) parts.push_back(trim(token));
  return parts;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& part : split(s, ',')) {
    if (!part.empty()) out.push_back(parse_double(part));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& part : split(s, ',')) {
    if (!part.empty()) out.push_back(static_cast<int>(parse_int(part)));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key == "kind") cfg.kind = kind_from_string(value);
    else if (key == "episodes") cfg.episodes = static_cast<int>(parse_int(value));
    else if (key == "master_seed") cfg.master_seed = parse_uint(value);
    else if (key == "out") cfg.out = value;
    else if (key == "workers") cfg.workers = static_cast<int>(parse_int(value));
    else if (key == "only") cfg.only = value;
    else if (key == "deltas") cfg.deltas = parse_double_list(value);
    else if (key == "horizons") cfg.horizons = parse_int_list(value);
    else if (key == "demo_episodes") cfg.demo_episodes = static_cast<int>(parse_int(value));
    else if (key == "max_ticks") cfg.max_ticks = static_cast<int>(parse_int(value));
    else if (key == "expert_window") cfg.expert_window = static_cast<int>(parse_int(value));
    else if (key == "demo_cache") cfg.demo_cache = value;
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(value));
    else if (key == "mode_size") cfg.mode_size = static_cast<int>(parse_int(value));
    else if (key == "rho") cfg.rho = parse_double(value);
    else if (key == "lambda") cfg.lambda = parse_double(value);
    else if (key == "chunk_length") cfg.chunk_length = static_cast<int>(parse_int(value));
    else if (key == "batch_sizes") cfg.batch_sizes = parse_int_list(value);
    else if (key == "geometry") cfg.geometry = value;
    else if (key == "sigma") cfg.sigma = parse_double(value);
    else if (key == "separation") cfg.separation = parse_double(value);
    else if (key == "mode_prob") cfg.mode_prob = parse_double(value);
    else if (key == "episode_ticks") cfg.episode_ticks = static_cast<int>(parse_int(value));
    else if (key == "blur") cfg.blur = parse_double(value);
    else if (key == "extra_sigma") cfg.extra_sigma = parse_double(value);
    else if (key == "amplitude") cfg.amplitude = parse_double(value);
    else if (key == "drift_speed") cfg.drift_speed = parse_double(value);
    else if (key == "tolerance") cfg.tolerance = parse_double(value);
    else if (key == "max_step") cfg.max_step = parse_double(value);
    else if (key == "target_distance") cfg.target_distance = parse_double(value);
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "kind = " << to_string(cfg.kind) << '\n';
  out << "episodes = " << cfg.episodes << '\n';
  out << "master_seed = " << cfg.master_seed << '\n';
  out << "out = " << cfg.out << '\n';
  out << "workers = " << cfg.workers << '\n';
  out << "only = " << cfg.only << '\n';
  out << "deltas = " << fmt_list(cfg.deltas) << '\n';
  out << "horizons = " << fmt_list(cfg.horizons) << '\n';
  out << "demo_episodes = " << cfg.demo_episodes << '\n';
  out << "max_ticks = " << cfg.max_ticks << '\n';
  out << "expert_window = " << cfg.expert_window << '\n';
  out << "demo_cache = " << cfg.demo_cache << '\n';
  out << "batch_size = " << cfg.batch_size << '\n';
  out << "mode_size = " << cfg.mode_size << '\n';
  out << "rho = " << fmt_double(cfg.rho) << '\n';
  out << "lambda = " << fmt_double(cfg.lambda) << '\n';
  out << "chunk_length = " << cfg.chunk_length << '\n';
  out << "batch_sizes = " << fmt_list(cfg.batch_sizes) << '\n';
  out << "geometry = " << cfg.geometry << '\n';
  out << "sigma = " << fmt_double(cfg.sigma) << '\n';
  out << "separation = " << fmt_double(cfg.separation) << '\n';
  out << "mode_prob = " << fmt_double(cfg.mode_prob) << '\n';
  out << "episode_ticks = " << cfg.episode_ticks << '\n';
  out << "blur = " << fmt_double(cfg.blur) << '\n';
  out << "extra_sigma = " << fmt_double(cfg.extra_sigma) << '\n';
  out << "amplitude = " << fmt_double(cfg.amplitude) << '\n';
  out << "drift_speed = " << fmt_double(cfg.drift_speed) << '\n';
  out << "tolerance = " << fmt_double(cfg.tolerance) << '\n';
  out << "max_step = " << fmt_double(cfg.max_step) << '\n';
  out << "target_distance = " << fmt_double(cfg.target_distance) << '\n';
  return out.str();
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.demo_episodes < 1) throw ConfigError("demo_episodes must be >= 1");
  if (cfg.max_ticks < 1) throw ConfigError("max_ticks must be >= 1");
  if (cfg.expert_window < 1) throw ConfigError("expert_window must be >= 1");
  if (cfg.chunk_length < 1) throw ConfigError("chunk_length must be >= 1");
  if (cfg.deltas.empty()) throw ConfigError("deltas must be nonempty");
  for (double d : cfg.deltas) {
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("delta must lie in [0, 1)");
  }
  if (cfg.horizons.empty()) throw ConfigError("horizons must be nonempty");
  for (int h : cfg.horizons) {
    if (h < 1) throw ConfigError("horizons must be >= 1");
  }
  validate(BackwardConfig{cfg.rho});
  validate(ForwardConfig{cfg.mode_size, cfg.batch_size});
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
  for (int n : cfg.batch_sizes) {
    if (n < 1) throw ConfigError("batch_sizes entries must be >= 1");
  }
  if (cfg.geometry != "constant" && cfg.geometry != "parabolic") {
    throw ConfigError("geometry must be 'constant' or 'parabolic'");
  }
  if (cfg.sigma < 0.0) throw ConfigError("sigma must be nonnegative");
  if (cfg.extra_sigma < 0.0) throw ConfigError("extra_sigma must be nonnegative");
  if (!(cfg.blur >= 0.0 && cfg.blur <= 1.0)) throw ConfigError("blur must lie in [0, 1]");
  if (!(cfg.mode_prob >= 0.0 && cfg.mode_prob <= 1.0)) {
    throw ConfigError("mode_prob must lie in [0, 1]");
  }
  if (cfg.episode_ticks < 1) throw ConfigError("episode_ticks must be >= 1");
  if (cfg.separation < 0.0) throw ConfigError("separation must be nonnegative");
  if (cfg.drift_speed < 0.0) throw ConfigError("drift_speed must be nonnegative");
  if (cfg.tolerance <= 0.0) throw ConfigError("tolerance must be positive");
  if (cfg.max_step <= 0.0) throw ConfigError("max_step must be positive");
  if (cfg.target_distance <= 0.0) throw ConfigError("target_distance must be positive");
}

std::string to_json_line(const ResultRow& row) {
  json j;
  j["condition"] = row.condition;
  j["episodes"] = row.episodes;
  j["experiment"] = row.experiment;
  j["metric"] = row.metric;
  j["seed"] = row.master_seed;
  j["value"] = row.value;
  return j.dump();
}

ResultRow row_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  ResultRow row;
  row.experiment = j.at("experiment").get<std::string>();
  row.master_seed = j.at("seed").get<std::uint64_t>();
  row.condition = j.at("condition").get<std::string>();
  row.metric = j.at("metric").get<std::string>();
  row.value = j.at("value").get<double>();
  row.episodes = j.at("episodes").get<int>();
  return row;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const std::string& label) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t master, const std::string& label) {
  return splitmix64(master ^ fnv1a64(label));
}

std::uint64_t episode_seed(std::uint64_t master, const std::string& label,
                           std::uint64_t episode) {
  return splitmix64(stream_seed(master, label) ^ (0x9E3779B97F4A7C15ull * (episode + 1)));
}

namespace {

// Runs fn(0..count-1) across up to `workers` threads; episode seeds make the
// work order-independent.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int n_threads = std::min(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < count; i += n_threads) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

double wall_seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- diagnostic chain table -------------------------------------------------

std::string demo_stream_label(double delta) { return "demos delta=" + fmt_double(delta); }

std::vector<chain::Demonstration> load_or_generate_demos(const ExperimentConfig& cfg,
                                                         double delta) {
  if (!cfg.demo_cache.empty()) {
    const std::filesystem::path path =
        std::filesystem::path(cfg.demo_cache) / demo_cache_name(cfg, delta);
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot read demo cache: " + path.string());
      auto demos = chain::read_demos(in);
      if (static_cast<int>(demos.size()) != cfg.demo_episodes) {
        throw ConfigError("demo cache episode count mismatch: " + path.string());
      }
      return demos;
    }
  }
  Rng rng(stream_seed(cfg.master_seed, demo_stream_label(delta)));
  return chain::generate_demos(delta, cfg.demo_episodes, rng, cfg.expert_window);
}

std::vector<ResultRow> run_diagnostic(const ExperimentConfig& cfg, const RowSink& sink) {
  std::vector<ResultRow> rows;
  for (double delta : cfg.deltas) {
    std::vector<chain::Demonstration> demos;
    chain::IdleHistogram oracle;
    bool prepared = false;
    for (int horizon : cfg.horizons) {
      const std::string condition =
          "delta=" + fmt_double(delta) + " horizon=" + std::to_string(horizon);
      if (!cfg.only.empty() && cfg.only != condition) continue;
      if (!prepared) {
        demos = load_or_generate_demos(cfg, delta);
        Rng oracle_rng(
            stream_seed(cfg.master_seed, "oracle delta=" + fmt_double(delta)));
        oracle = chain::expert_idle_oracle(delta, cfg.episodes, oracle_rng, cfg.max_ticks,
                                           cfg.expert_window);
        prepared = true;
      }
      const auto start = std::chrono::steady_clock::now();
      const chain::TabularChunkPolicy policy = chain::train_tabular(demos, horizon);
      Rng eval_rng(stream_seed(cfg.master_seed, condition));
      const chain::IdleHistogram learner = chain::rollout_learner(
          policy, delta, cfg.episodes, cfg.max_ticks, eval_rng, cfg.expert_window);
      ResultRow row;
      row.experiment = to_string(cfg.kind);
      row.master_seed = cfg.master_seed;
      row.condition = condition;
      row.metric = "tvd";
      row.value = chain::total_variation(learner, oracle);
      row.episodes = cfg.episodes;
      row.wall_seconds = wall_seconds_since(start);
      if (sink) sink(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// --- synthetic episodes -------------------------------------------------------

enum class DecoderSpec : std::uint8_t { bid_closed, vanilla_closed, vanilla_open, ema_closed };

struct SyntheticCondition {
  std::string label;
  DecoderSpec decoder = DecoderSpec::bid_closed;
  ContrastVariant contrast = ContrastVariant::full;
  int batch_size = 30;
};

struct EpisodeOutcome {
  double switch_rate = 0.0;
  bool has_switch_rate = false;
  bool success = false;
  double final_error = 0.0;
};

synth::BimodalChunkSampler make_strong_sampler(const ExperimentConfig& cfg, bool pursuit) {
  if (pursuit) {
    auto [a, b] = synth::pursuit_arc_modes(cfg.amplitude, cfg.max_step);
    return synth::BimodalChunkSampler(std::move(a), std::move(b), cfg.mode_prob, cfg.sigma,
                                      cfg.chunk_length);
  }
  if (cfg.geometry == "parabolic") {
    auto [a, b] = synth::parabolic_arc_modes({0.0, 0.0}, {cfg.target_distance, 0.0},
                                             cfg.amplitude, cfg.episode_ticks);
    return synth::BimodalChunkSampler(std::move(a), std::move(b), cfg.mode_prob, cfg.sigma,
                                      cfg.chunk_length);
  }
  // Constant geometry: two lateral routes with exact step separation.
  auto [a, b] = synth::constant_modes(Action{0.0, +0.5 * cfg.separation},
                                      Action{0.0, -0.5 * cfg.separation});
  return synth::BimodalChunkSampler(std::move(a), std::move(b), cfg.mode_prob, cfg.sigma,
                                    cfg.chunk_length);
}

synth::DriftEnv make_drift_env(const ExperimentConfig& cfg, bool with_drift) {
  synth::DriftEnv::Params params;
  params.agent_start = {0.0, 0.0};
  params.target_start = {cfg.target_distance, 0.0};
  params.drift_speed = with_drift ? cfg.drift_speed : 0.0;
  params.tolerance = cfg.tolerance;
  params.max_step = cfg.max_step;
  return synth::DriftEnv(params);
}

EpisodeOutcome run_synthetic_episode(const ExperimentConfig& cfg,
                                     const SyntheticCondition& cond, bool pursuit,
                                     bool with_drift, Rng& env_rng, Rng& dec_rng) {
  const synth::BimodalChunkSampler strong = make_strong_sampler(cfg, pursuit);
  auto strong_ptr = std::make_shared<synth::BimodalChunkSampler>(strong);
  synth::DriftEnv env = make_drift_env(cfg, with_drift);

  RolloutRecord record;
  switch (cond.decoder) {
    case DecoderSpec::bid_closed: {
      auto weak_ptr = std::make_shared<synth::WeakenedSampler>(
          synth::weaken(strong, cfg.blur, cfg.extra_sigma));
      const int n = cond.batch_size;
      const int k = std::min(cfg.mode_size, n);
      BidDecoder decoder(strong_ptr, weak_ptr, BackwardConfig{cfg.rho}, ForwardConfig{k, n},
                         cond.contrast);
      record = closed_loop_rollout(env, make_bid_select_fn(decoder), cfg.episode_ticks,
                                   env_rng, dec_rng);
      break;
    }
    case DecoderSpec::vanilla_closed: {
      record = closed_loop_rollout(env, make_vanilla_select_fn(strong_ptr),
                                   cfg.episode_ticks, env_rng, dec_rng);
      break;
    }
    case DecoderSpec::vanilla_open: {
      record = open_loop_rollout(env, *strong_ptr, cfg.chunk_length, cfg.episode_ticks,
                                 env_rng, dec_rng);
      break;
    }
    case DecoderSpec::ema_closed: {
      EmaDecoder decoder(strong_ptr, cfg.lambda);
      record = closed_loop_rollout(env, make_ema_select_fn(decoder), cfg.episode_ticks,
                                   env_rng, dec_rng);
      break;
    }
  }

  EpisodeOutcome outcome;
  outcome.success = env.reached();
  outcome.final_error = env.error();
  if (record.selected_chunks.size() >= 2) {
    outcome.switch_rate = synth::mode_switch_rate(record, *strong_ptr);
    outcome.has_switch_rate = true;
  }
  return outcome;
}

std::vector<ResultRow> run_synthetic(const ExperimentConfig& cfg,
                                     const std::vector<SyntheticCondition>& conditions,
                                     bool pursuit, bool with_drift, bool emit_switch_rate,
                                     bool emit_success, const RowSink& sink) {
  std::vector<ResultRow> rows;
  for (const SyntheticCondition& cond : conditions) {
    if (!cfg.only.empty() && cfg.only != cond.label) continue;
    const auto start = std::chrono::steady_clock::now();
    std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(cfg.episodes));
    parallel_for(cfg.episodes, cfg.workers, [&](int ep) {
      // The environment stream is shared across conditions so that decoder
      // comparisons are paired episode by episode.
      Rng env_rng(episode_seed(cfg.master_seed, "env", static_cast<std::uint64_t>(ep)));
      Rng dec_rng(episode_seed(cfg.master_seed, cond.label, static_cast<std::uint64_t>(ep)));
      outcomes[static_cast<std::size_t>(ep)] =
          run_synthetic_episode(cfg, cond, pursuit, with_drift, env_rng, dec_rng);
    });
    const double wall = wall_seconds_since(start);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      const EpisodeOutcome& o = outcomes[static_cast<std::size_t>(ep)];
      auto push = [&](const std::string& metric, double value) {
        ResultRow row;
        row.experiment = to_string(cfg.kind);
        row.master_seed = cfg.master_seed;
        row.condition = cond.label;
        row.metric = metric;
        row.value = value;
        row.episodes = 1;
        row.wall_seconds = wall;
        if (sink) sink(row);
        rows.push_back(std::move(row));
      };
      if (emit_switch_rate && o.has_switch_rate) push("switch_rate", o.switch_rate);
      if (emit_success) {
        push("success", o.success ? 1.0 : 0.0);
        push("final_error", o.final_error);
      }
    }
  }
  return rows;
}

std::vector<SyntheticCondition> conditions_for(const ExperimentConfig& cfg) {
  std::vector<SyntheticCondition> conditions;
  switch (cfg.kind) {
    case ExperimentKind::bimodal:
      conditions.push_back({"decoder=bid", DecoderSpec::bid_closed, ContrastVariant::full,
                            cfg.batch_size});
      conditions.push_back({"decoder=vanilla", DecoderSpec::vanilla_closed,
                            ContrastVariant::full, cfg.batch_size});
      conditions.push_back({"decoder=ema", DecoderSpec::ema_closed, ContrastVariant::full,
                            cfg.batch_size});
      break;
    case ExperimentKind::drift:
      conditions.push_back({"decoder=bid-closed", DecoderSpec::bid_closed,
                            ContrastVariant::full, cfg.batch_size});
      conditions.push_back({"decoder=vanilla-closed", DecoderSpec::vanilla_closed,
                            ContrastVariant::full, cfg.batch_size});
      conditions.push_back({"decoder=vanilla-open", DecoderSpec::vanilla_open,
                            ContrastVariant::full, cfg.batch_size});
      break;
    case ExperimentKind::scaling:
      for (int n : cfg.batch_sizes) {
        conditions.push_back({"batch_size=" + std::to_string(n), DecoderSpec::bid_closed,
                              ContrastVariant::full, n});
      }
      break;
    case ExperimentKind::ablation:
      for (ContrastVariant v :
           {ContrastVariant::full, ContrastVariant::positives_only,
            ContrastVariant::negatives_only, ContrastVariant::off}) {
        conditions.push_back({std::string("contrast=") + bid::to_string(v),
                              DecoderSpec::bid_closed, v, cfg.batch_size});
      }
      break;
    case ExperimentKind::diagnostic:
      break;
  }
  return conditions;
}

}  // namespace

std::vector<std::string> list_conditions(const ExperimentConfig& cfg) {
  std::vector<std::string> labels;
  if (cfg.kind == ExperimentKind::diagnostic) {
    for (double delta : cfg.deltas) {
      for (int horizon : cfg.horizons) {
        labels.push_back("delta=" + fmt_double(delta) +
                         " horizon=" + std::to_string(horizon));
      }
    }
  } else {
    for (const SyntheticCondition& c : conditions_for(cfg)) labels.push_back(c.label);
  }
  return labels;
}

ExperimentConfig apply_condition(ExperimentConfig base, const std::string& condition) {
  for (const std::string& part : split(condition, ' ')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed condition label: " + part);
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "delta") base.deltas = {parse_double(value)};
    else if (key == "horizon") base.horizons = {static_cast<int>(parse_int(value))};
    else if (key == "batch_size") base.batch_sizes = {static_cast<int>(parse_int(value))};
    else if (key == "decoder" || key == "contrast") base.only = condition;
    else throw ConfigError("condition label has no config mapping: " + part);
  }
  if (base.only.empty()) base.only = condition;
  return base;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
  validate_config(cfg);
  switch (cfg.kind) {
    case ExperimentKind::diagnostic:
      return run_diagnostic(cfg, sink);
    case ExperimentKind::bimodal:
      return run_synthetic(cfg, conditions_for(cfg), /*pursuit=*/false, /*with_drift=*/false,
                           /*emit_switch_rate=*/true, /*emit_success=*/false, sink);
    case ExperimentKind::drift:
      return run_synthetic(cfg, conditions_for(cfg), /*pursuit=*/true, /*with_drift=*/true,
                           /*emit_switch_rate=*/false, /*emit_success=*/true, sink);
    case ExperimentKind::scaling:
    case ExperimentKind::ablation:
      return run_synthetic(cfg, conditions_for(cfg), /*pursuit=*/true, /*with_drift=*/true,
                           /*emit_switch_rate=*/false, /*emit_success=*/true, sink);
  }
  throw ConfigError("unhandled experiment kind");
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw ConfigError("cannot summarize an empty row set");
  struct Acc {
    int count = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Acc> groups;
  for (const ResultRow& row : rows) {
    Acc& acc = groups[{row.experiment, row.condition, row.metric}];
    ++acc.count;
    const double d = row.value - acc.mean;
    acc.mean += d / acc.count;
    acc.m2 += d * (row.value - acc.mean);
  }
  std::vector<SummaryRow> summary;
  summary.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    SummaryRow s;
    s.experiment = std::get<0>(key);
    s.condition = std::get<1>(key);
    s.metric = std::get<2>(key);
    s.count = acc.count;
    s.mean = acc.mean;
    s.stderr_mean =
        acc.count > 1 ? std::sqrt(acc.m2 / (acc.count - 1) / acc.count) : 0.0;
    summary.push_back(std::move(s));
  }
  return summary;
}

std::string to_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  out << "experiment,condition,metric,count,mean,stderr\n";
  for (const SummaryRow& s : summary) {
    out << s.experiment << ',' << s.condition << ',' << s.metric << ',' << s.count << ','
        << fmt_double(s.mean) << ',' << fmt_double(s.stderr_mean) << '\n';
  }
  return out.str();
}

std::string demo_cache_name(const ExperimentConfig& cfg, double delta) {
  std::ostringstream name;
  name << "demos_delta=" << fmt_double(delta) << "_n=" << cfg.demo_episodes
       << "_w=" << cfg.expert_window << "_seed=" << std::hex
       << stream_seed(cfg.master_seed, demo_stream_label(delta)) << ".txt";
  return name.str();
}

std::vector<std::string> build_demo_cache(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.demo_cache.empty()) throw ConfigError("config sets no demo_cache directory");
  std::filesystem::create_directories(cfg.demo_cache);
  std::vector<std::string> written;
  for (double delta : cfg.deltas) {
    Rng rng(stream_seed(cfg.master_seed, demo_stream_label(delta)));
    const auto demos =
        chain::generate_demos(delta, cfg.demo_episodes, rng, cfg.expert_window);
    const std::filesystem::path path =
        std::filesystem::path(cfg.demo_cache) / demo_cache_name(cfg, delta);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write demo cache: " + path.string());
    chain::write_demos(out, demos);
    written.push_back(path.string());
  }
  return written;
}

}  // namespace bid::harness
