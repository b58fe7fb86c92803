#pragma once

// Core domain types for chunked action decoding: actions, action chunks,
// observation histories, decision memory, and the sampler interface shared
// by all decoders and environments.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bid {

// One continuous action vector. Dimension is a runtime property so the 1-D
// chain and the 2-D drift environment share a single code path.
using Action = std::vector<double>;

using State = std::vector<double>;

using Rng = std::mt19937_64;

// Raised when two chunks (or two actions) cannot be aligned: non-adjacent
// start times, mismatched lengths, or mismatched dimensions.
class AlignmentError : public std::invalid_argument {
public:
  explicit AlignmentError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised for out-of-range hyperparameters (K > N, rho outside [0,1], ...).
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Which sampler population a chunk came from. Keeps positive/negative set
// construction auditable when two populations are mixed in one pipeline.
enum class SourceTag : std::uint8_t { strong, weak };

// A time-stamped sequence of actions produced by one sampler call. The chunk
// covers absolute ticks start_time .. start_time + actions.size() - 1.
struct ActionChunk {
  std::int64_t start_time = 0;
  std::vector<Action> actions;
  SourceTag source = SourceTag::strong;

  std::size_t length() const { return actions.size(); }
  std::size_t dim() const { return actions.empty() ? 0 : actions.front().size(); }
};

// Checks the ActionChunk invariants: nonempty, uniform dimension, finite
// entries, nonnegative start time. Throws AlignmentError on violation.
void validate_chunk(const ActionChunk& chunk);

// Recent states, most recent last, capped at the policy's context length.
// current_tick is the absolute time of the most recent state; chunks sampled
// from this history start at current_tick.
struct ObservationHistory {
  std::vector<State> states;
  std::int64_t current_tick = 0;

  static ObservationHistory single(State s, std::int64_t tick) {
    ObservationHistory h;
    h.states.push_back(std::move(s));
    h.current_tick = tick;
    return h;
  }

  const State& current() const { return states.back(); }

  // Appends a state, dropping the oldest when capacity is exceeded.
  void push(State s, std::size_t context_length) {
    states.push_back(std::move(s));
    if (states.size() > context_length) states.erase(states.begin());
    ++current_tick;
  }
};

// The chunk selected at the previous tick, if any. Reference point for
// backward coherence and moving-average blending.
struct DecisionMemory {
  std::optional<ActionChunk> previous;

  void remember(ActionChunk chunk) { previous = std::move(chunk); }
  void clear() { previous.reset(); }
};

// Anything that, given an observation history and a count, returns that many
// independently sampled chunks. Implementations must be deterministic for a
// fixed rng state and history, and all returned chunks must share start_time
// (= history.current_tick) and length.
class ChunkSampler {
public:
  virtual ~ChunkSampler() = default;
  virtual std::vector<ActionChunk> sample(const ObservationHistory& history, int n,
                                          Rng& rng) const = 0;
};

// Euclidean distance between two actions of equal dimension.
double step_distance(const Action& a, const Action& b);

// Pairs of (candidate action, previous action) at the same absolute time.
// prev covers t-1 .. t-1+l, cand covers t .. t+l; the overlap is the l pairs
// (cand[tau], prev[tau+1]) for tau = 0 .. l-1. Empty when l = 0.
std::vector<std::pair<Action, Action>> overlap_pairs(const ActionChunk& prev,
                                                     const ActionChunk& cand);

}  // namespace bid
