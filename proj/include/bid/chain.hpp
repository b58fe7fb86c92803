#pragma once

// One-dimensional diagnostic chain: an 11-state environment with noisy
// forward moves, an idling expert with a short state memory, demonstration
// generation, an exact tabular chunk learner, and total-variation evaluation
// of per-episode idle counts.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bid/core.hpp"
#include "bid/decoder.hpp"

namespace bid::chain {

enum class ChainAction : std::uint8_t { forward, idle };

inline constexpr int kNumStates = 11;  // s0 .. s10, goal absorbing at s10
inline constexpr int kGoalState = kNumStates - 1;
inline constexpr int kPauseState = 5;
inline constexpr int kDefaultWindow = 5;
inline constexpr int kDefaultMaxTicks = 200;

// Chain MDP: forward advances one state with probability 1 - delta, idle
// always stays put. Tracks the last `window` visited states (current state
// last, padded with s0 at episode start) for the expert's pause rule.
struct ChainEnv {
  double delta = 0.0;
  int current = 0;
  std::vector<int> window;  // oldest first, size fixed at construction

  explicit ChainEnv(double delta_, int window_len = kDefaultWindow);
  bool done() const { return current == kGoalState; }
  void reset();
};

// Forward everywhere except the pause state, where the expert idles until
// every window entry equals the pause state.
ChainAction expert_action(const std::vector<int>& window);

// Applies one action; returns the next state index and updates the window.
// Throws ConfigError when called on a finished episode.
int env_step(ChainEnv& env, ChainAction action, Rng& rng);

// One expert episode: the state before each action, and the action taken.
struct Demonstration {
  std::vector<int> states;
  std::vector<ChainAction> actions;

  int idle_count() const;
};

std::vector<Demonstration> generate_demos(double delta, int episodes, Rng& rng,
                                          int window_len = kDefaultWindow);

// Line format for caching demonstrations: one episode per line, state:action
// pairs ("0:f 1:f ... 5:i ...") separated by single spaces.
std::string serialize_demo(const Demonstration& demo);
Demonstration parse_demo(const std::string& line);
void write_demos(std::ostream& out, const std::vector<Demonstration>& demos);
std::vector<Demonstration> read_demos(std::istream& in);

using ActionSeq = std::vector<ChainAction>;

// Empirical distribution over length-h action sequences conditioned on the
// current state; the exact MLE over the demonstration windows. Counts are
// kept integral so retraining on the same data reproduces the table exactly.
struct TabularChunkPolicy {
  int horizon = 1;
  std::map<int, std::map<ActionSeq, std::uint64_t>> counts;
  std::map<int, std::uint64_t> totals;

  bool has_row(int state) const;
  // Probability of each sequence for one state; empty map when unobserved.
  std::map<ActionSeq, double> distribution(int state) const;
  // Draws one sequence; throws ConfigError for an unobserved state.
  const ActionSeq& sample_row(int state, Rng& rng) const;
};

bool operator==(const TabularChunkPolicy& a, const TabularChunkPolicy& b);

// Counts every length-h action window starting at each state occurrence in
// the demos; windows running past the episode end are padded with forward
// (behaviorally inert at the absorbing goal).
TabularChunkPolicy train_tabular(const std::vector<Demonstration>& demos, int horizon);

// Distribution over the number of idle actions executed per episode.
// Episodes that hit the tick cap or an unobserved state land in `overflow`.
struct IdleHistogram {
  std::map<int, double> probs;
  double overflow = 0.0;

  double total_mass() const;
};

void validate_normalized(const IdleHistogram& h);

// Open-loop rollouts of a tabular policy (replan every h ticks, conditioned
// on the current state only), counting executed idle actions per episode.
IdleHistogram rollout_learner(const TabularChunkPolicy& policy, double delta, int episodes,
                              int max_ticks, Rng& rng, int window_len = kDefaultWindow);

// Reference distribution from expert rollouts with identical counting rules.
IdleHistogram expert_idle_oracle(double delta, int episodes, Rng& rng,
                                 int max_ticks = kDefaultMaxTicks,
                                 int window_len = kDefaultWindow);

// Exact expert idle-count distribution by propagating probability mass over
// the finite (state, window) chain; independent of any rollout.
IdleHistogram expert_idle_exact(double delta, int window_len = kDefaultWindow);

// Half the L1 distance between two normalized histograms, over the union of
// their supports (overflow is one more outcome). Range [0, 1].
double total_variation(const IdleHistogram& p, const IdleHistogram& q);

// Adapters so the chunk-decoding rollout engines can drive the chain.
// States are 1-D {state index}; actions are 1-D, value >= 0.5 means forward.
class ChainEnvironment : public Environment {
public:
  explicit ChainEnvironment(double delta, int window_len = kDefaultWindow);
  State reset(Rng& rng) override;
  State step(const Action& action, Rng& rng) override;
  bool done() const override;
  const ChainEnv& env() const { return env_; }

private:
  ChainEnv env_;
};

// The expert wrapped as a single-step chunk sampler. Reads the last
// window-length states from the observation history (front-padded with s0).
class ExpertChunkSampler : public ChunkSampler {
public:
  explicit ExpertChunkSampler(int window_len = kDefaultWindow);
  std::vector<ActionChunk> sample(const ObservationHistory& history, int n,
                                  Rng& rng) const override;

private:
  int window_len_;
};

}  // namespace bid::chain
