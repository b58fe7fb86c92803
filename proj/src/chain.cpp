#include "bid/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace bid::chain {

ChainEnv::ChainEnv(double delta_, int window_len) : delta(delta_) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("delta must lie in [0, 1)");
  if (window_len < 1) throw ConfigError("window length must be >= 1");
  window.assign(static_cast<std::size_t>(window_len), 0);
}

void ChainEnv::reset() {
  current = 0;
  std::fill(window.begin(), window.end(), 0);
}

ChainAction expert_action(const std::vector<int>& window) {
  if (window.empty()) throw ConfigError("expert window must be nonempty");
  const int current = window.back();
  if (current != kPauseState) return ChainAction::forward;
  const bool saturated =
      std::all_of(window.begin(), window.end(), [](int s) { return s == kPauseState; });
  return saturated ? ChainAction::forward : ChainAction::idle;
}

int env_step(ChainEnv& env, ChainAction action, Rng& rng) {
  if (env.done()) throw ConfigError("cannot step a finished chain episode");
  if (action == ChainAction::forward) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= env.delta) env.current += 1;
  }
  env.window.erase(env.window.begin());
  env.window.push_back(env.current);
  return env.current;
}

int Demonstration::idle_count() const {
  return static_cast<int>(
      std::count(actions.begin(), actions.end(), ChainAction::idle));
}

std::vector<Demonstration> generate_demos(double delta, int episodes, Rng& rng,
                                          int window_len) {
  if (episodes < 1) throw ConfigError("need at least one demonstration episode");
  std::vector<Demonstration> demos;
  demos.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    ChainEnv env(delta, window_len);
    Demonstration demo;
    while (!env.done()) {
      const ChainAction a = expert_action(env.window);
      demo.states.push_back(env.current);
      demo.actions.push_back(a);
      env_step(env, a, rng);
    }
    demos.push_back(std::move(demo));
  }
  return demos;
}

std::string serialize_demo(const Demonstration& demo) {
  std::ostringstream out;
  for (std::size_t i = 0; i < demo.actions.size(); ++i) {
    if (i > 0) out << ' ';
    out << demo.states[i] << ':' << (demo.actions[i] == ChainAction::forward ? 'f' : 'i');
  }
  return out.str();
}

Demonstration parse_demo(const std::string& line) {
  Demonstration demo;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos || colon + 2 != token.size()) {
      throw ConfigError("malformed demonstration token: " + token);
    }
    const int state = std::stoi(token.substr(0, colon));
    if (state < 0 || state >= kNumStates) {
      throw ConfigError("demonstration state out of range: " + token);
    }
    const char a = token[colon + 1];
    if (a != 'f' && a != 'i') throw ConfigError("unknown demonstration action: " + token);
    demo.states.push_back(state);
    demo.actions.push_back(a == 'f' ? ChainAction::forward : ChainAction::idle);
  }
  return demo;
}

void write_demos(std::ostream& out, const std::vector<Demonstration>& demos) {
  for (const Demonstration& d : demos) out << serialize_demo(d) << '\n';
}

std::vector<Demonstration> read_demos(std::istream& in) {
  std::vector<Demonstration> demos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    demos.push_back(parse_demo(line));
  }
  return demos;
}

bool TabularChunkPolicy::has_row(int state) const { return counts.count(state) > 0; }

std::map<ActionSeq, double> TabularChunkPolicy::distribution(int state) const {
  std::map<ActionSeq, double> dist;
  const auto row = counts.find(state);
  if (row == counts.end()) return dist;
  const double total = static_cast<double>(totals.at(state));
  for (const auto& [seq, count] : row->second) {
    dist[seq] = static_cast<double>(count) / total;
  }
  return dist;
}

const ActionSeq& TabularChunkPolicy::sample_row(int state, Rng& rng) const {
  const auto row = counts.find(state);
  if (row == counts.end()) {
    std::ostringstream msg;
    msg << "no action distribution for state s" << state;
    throw ConfigError(msg.str());
  }
  const std::uint64_t total = totals.at(state);
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  std::uint64_t r = pick(rng);
  for (const auto& [seq, count] : row->second) {
    if (r < count) return seq;
    r -= count;
  }
  return row->second.rbegin()->first;  // unreachable for a consistent table
}

bool operator==(const TabularChunkPolicy& a, const TabularChunkPolicy& b) {
  return a.horizon == b.horizon && a.counts == b.counts && a.totals == b.totals;
}

TabularChunkPolicy train_tabular(const std::vector<Demonstration>& demos, int horizon) {
  if (demos.empty()) throw ConfigError("cannot train on an empty demonstration set");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  TabularChunkPolicy policy;
  policy.horizon = horizon;
  for (const Demonstration& demo : demos) {
    const std::size_t n = demo.actions.size();
    for (std::size_t i = 0; i < n; ++i) {
      ActionSeq window;
      window.reserve(static_cast<std::size_t>(horizon));
      for (int j = 0; j < horizon; ++j) {
        const std::size_t idx = i + static_cast<std::size_t>(j);
        window.push_back(idx < n ? demo.actions[idx] : ChainAction::forward);
      }
      policy.counts[demo.states[i]][window] += 1;
      policy.totals[demo.states[i]] += 1;
    }
  }
  return policy;
}

double IdleHistogram::total_mass() const {
  double sum = overflow;
  for (const auto& [count, p] : probs) sum += p;
  return sum;
}

void validate_normalized(const IdleHistogram& h) {
  if (std::abs(h.total_mass() - 1.0) > 1e-9) {
    throw ConfigError("idle histogram is not normalized");
  }
  for (const auto& [count, p] : h.probs) {
    if (p < 0.0 || p > 1.0) throw ConfigError("idle histogram probability out of [0, 1]");
  }
}

namespace {

IdleHistogram normalize_counts(const std::map<int, std::int64_t>& counts,
                               std::int64_t overflow_episodes, int episodes) {
  IdleHistogram histogram;
  for (const auto& [idles, n] : counts) {
    histogram.probs[idles] = static_cast<double>(n) / static_cast<double>(episodes);
  }
  histogram.overflow =
      static_cast<double>(overflow_episodes) / static_cast<double>(episodes);
  return histogram;
}

}  // namespace

IdleHistogram rollout_learner(const TabularChunkPolicy& policy, double delta, int episodes,
                              int max_ticks, Rng& rng, int window_len) {
  if (episodes < 1) throw ConfigError("need at least one evaluation episode");
  if (max_ticks < 1) throw ConfigError("max_ticks must be >= 1");
  std::map<int, std::int64_t> counts;
  std::int64_t overflow = 0;
  for (int e = 0; e < episodes; ++e) {
    ChainEnv env(delta, window_len);
    int idles = 0;
    int ticks = 0;
    bool failed = false;
    while (!env.done()) {
      if (!policy.has_row(env.current)) {
        failed = true;  // the table has no plan for this state
        break;
      }
      const ActionSeq& seq = policy.sample_row(env.current, rng);
      for (const ChainAction a : seq) {
        if (env.done()) break;
        if (ticks == max_ticks) {
          failed = true;
          break;
        }
        if (a == ChainAction::idle) ++idles;
        env_step(env, a, rng);
        ++ticks;
      }
      if (failed) break;
    }
    if (failed) {
      ++overflow;
    } else {
      counts[idles] += 1;
    }
  }
  return normalize_counts(counts, overflow, episodes);
}

IdleHistogram expert_idle_oracle(double delta, int episodes, Rng& rng, int max_ticks,
                                 int window_len) {
  if (episodes < 1) throw ConfigError("need at least one evaluation episode");
  std::map<int, std::int64_t> counts;
  std::int64_t overflow = 0;
  for (int e = 0; e < episodes; ++e) {
    ChainEnv env(delta, window_len);
    int idles = 0;
    int ticks = 0;
    bool failed = false;
    while (!env.done()) {
      if (ticks == max_ticks) {
        failed = true;
        break;
      }
      const ChainAction a = expert_action(env.window);
      if (a == ChainAction::idle) ++idles;
      env_step(env, a, rng);
      ++ticks;
    }
    if (failed) {
      ++overflow;
    } else {
      counts[idles] += 1;
    }
  }
  return normalize_counts(counts, overflow, episodes);
}

IdleHistogram expert_idle_exact(double delta, int window_len) {
  // Nodes are (state, window, idles accumulated). Idles and failed forwards
  // both extend the window's trailing run of the current state, so every
  // transition except the saturated-forward self-loop strictly increases
  // (state, trailing run, idles); the self-loop is collapsed analytically
  // (the move eventually succeeds with probability one).
  struct Node {
    int state;
    int trailing;
    int idles;
    std::vector<int> window;
    auto key() const { return std::tie(state, trailing, idles, window); }
    bool operator<(const Node& other) const { return key() < other.key(); }
  };
  const auto trailing_run = [](const std::vector<int>& w) {
    int run = 0;
    for (auto it = w.rbegin(); it != w.rend() && *it == w.back(); ++it) ++run;
    return run;
  };
  const auto shifted = [](std::vector<int> w, int next) {
    w.erase(w.begin());
    w.push_back(next);
    return w;
  };

  ChainEnv init(delta, window_len);
  std::map<Node, double> pending;
  Node start{0, trailing_run(init.window), 0, init.window};
  pending[start] = 1.0;

  std::map<int, double> result;
  while (!pending.empty()) {
    const auto [node, mass] = *pending.begin();
    pending.erase(pending.begin());
    if (node.state == kGoalState) {
      result[node.idles] += mass;
      continue;
    }
    const ChainAction a = expert_action(node.window);
    if (a == ChainAction::idle) {
      auto w = shifted(node.window, node.state);
      pending[Node{node.state, trailing_run(w), node.idles + 1, w}] += mass;
      continue;
    }
    auto w_success = shifted(node.window, node.state + 1);
    Node success{node.state + 1, trailing_run(w_success), node.idles, w_success};
    auto w_fail = shifted(node.window, node.state);
    if (w_fail == node.window) {
      // Saturated window: failures repeat this exact node, so all mass
      // eventually exits through the successful move.
      pending[success] += mass;
    } else {
      pending[success] += mass * (1.0 - delta);
      pending[Node{node.state, trailing_run(w_fail), node.idles, w_fail}] += mass * delta;
    }
  }

  IdleHistogram histogram;
  histogram.probs = std::move(result);
  return histogram;
}

double total_variation(const IdleHistogram& p, const IdleHistogram& q) {
  validate_normalized(p);
  validate_normalized(q);
  double l1 = std::abs(p.overflow - q.overflow);
  auto it_p = p.probs.begin();
  auto it_q = q.probs.begin();
  while (it_p != p.probs.end() || it_q != q.probs.end()) {
    if (it_q == q.probs.end() || (it_p != p.probs.end() && it_p->first < it_q->first)) {
      l1 += std::abs(it_p->second);
      ++it_p;
    } else if (it_p == p.probs.end() || it_q->first < it_p->first) {
      l1 += std::abs(it_q->second);
      ++it_q;
    } else {
      l1 += std::abs(it_p->second - it_q->second);
      ++it_p;
      ++it_q;
    }
  }
  return 0.5 * l1;
}

ChainEnvironment::ChainEnvironment(double delta, int window_len) : env_(delta, window_len) {}

State ChainEnvironment::reset(Rng&) {
  env_.reset();
  return {static_cast<double>(env_.current)};
}

State ChainEnvironment::step(const Action& action, Rng& rng) {
  if (action.size() != 1) throw AlignmentError("chain actions are one-dimensional");
  const ChainAction a = action[0] >= 0.5 ? ChainAction::forward : ChainAction::idle;
  const int next = env_step(env_, a, rng);
  return {static_cast<double>(next)};
}

bool ChainEnvironment::done() const { return env_.done(); }

ExpertChunkSampler::ExpertChunkSampler(int window_len) : window_len_(window_len) {
  if (window_len < 1) throw ConfigError("window length must be >= 1");
}

std::vector<ActionChunk> ExpertChunkSampler::sample(const ObservationHistory& history, int n,
                                                    Rng&) const {
  if (n < 1) throw ConfigError("sample count must be positive");
  std::vector<int> window(static_cast<std::size_t>(window_len_), 0);
  const std::size_t have = std::min(history.states.size(), window.size());
  for (std::size_t i = 0; i < have; ++i) {
    const State& s = history.states[history.states.size() - have + i];
    window[window.size() - have + i] = static_cast<int>(std::lround(s.at(0)));
  }
  const ChainAction a = expert_action(window);
  ActionChunk chunk;
  chunk.start_time = history.current_tick;
  chunk.actions = {Action{a == ChainAction::forward ? 1.0 : 0.0}};
  std::vector<ActionChunk> out(static_cast<std::size_t>(n), chunk);
  return out;
}

}  // namespace bid::chain
