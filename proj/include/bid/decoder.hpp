#pragma once

// Decoding strategies over sampled action chunks (bidirectional selection,
// vanilla random choice, exponential moving average) and the closed- and
// open-loop rollout engines that drive them against an environment.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "bid/core.hpp"
#include "bid/criteria.hpp"

namespace bid {

// Which parts of the forward-contrast sum are active. The reduced variants
// exist for the ablation harness; they zero one side of the contrast by
// emptying the corresponding reference set.
enum class ContrastVariant : std::uint8_t { full, positives_only, negatives_only, off };

const char* to_string(ContrastVariant v);

// Bidirectional selector: draws N chunks from a strong and a weak sampler,
// trims both populations to the K most coherent samples, and picks the
// strong-set candidate minimizing backward coherence plus forward contrast.
struct BidDecoder {
  std::shared_ptr<const ChunkSampler> strong;
  std::shared_ptr<const ChunkSampler> weak;
  BackwardConfig backward;
  ForwardConfig forward;
  ContrastVariant contrast = ContrastVariant::full;
  DecisionMemory memory;

  BidDecoder(std::shared_ptr<const ChunkSampler> strong_sampler,
             std::shared_ptr<const ChunkSampler> weak_sampler, BackwardConfig cfg_b,
             ForwardConfig cfg_f, ContrastVariant variant = ContrastVariant::full);
};

// Moving-average smoother: blends each new chunk with the previous decision
// on overlapping steps, a_t = lambda * new + (1 - lambda) * previous.
struct EmaDecoder {
  std::shared_ptr<const ChunkSampler> sampler;
  double lambda = 0.75;  // weight of the new prediction, in (0, 1)
  DecisionMemory memory;

  EmaDecoder(std::shared_ptr<const ChunkSampler> s, double lambda_);
};

// Per-selection scoring detail, kept for the ablation harness and reports.
struct SelectionDiagnostics {
  std::vector<double> backward_losses;  // per strong candidate
  std::vector<double> forward_losses;   // per strong candidate
  std::vector<double> total_losses;     // per strong candidate
  std::size_t chosen_index = 0;         // into the strong sample list
  SourceTag chosen_source = SourceTag::strong;
};

struct Selection {
  ActionChunk chunk;
  SelectionDiagnostics diag;
};

// Algorithm: sample N chunks from each policy; compute backward losses; trim
// each population to its K most coherent samples; score every strong
// candidate against positives (trimmed strong minus itself) and negatives
// (trimmed weak); return the argmin of the total loss, ties broken by lowest
// sample index. Updates dec.memory to the chosen chunk.
Selection bid_select(const ObservationHistory& history, BidDecoder& dec, Rng& rng);

// One uniformly sampled chunk (a size-1 sampler call).
ActionChunk vanilla_select(const ObservationHistory& history, const ChunkSampler& sampler,
                           Rng& rng);

// Samples one chunk and blends it with the previous decision on overlapping
// steps; the non-overlapping tail is kept as sampled. Updates dec.memory to
// the blended chunk.
ActionChunk ema_select(const ObservationHistory& history, EmaDecoder& dec, Rng& rng);

// Minimal environment surface the rollout engines need. reset() returns the
// initial state; step() applies one action and returns the next state.
class Environment {
public:
  virtual ~Environment() = default;
  virtual State reset(Rng& rng) = 0;
  virtual State step(const Action& action, Rng& rng) = 0;
  virtual bool done() const = 0;
};

// Everything one episode produced: per-tick states and executed actions,
// plus the chunk (and its scoring detail) chosen at each replanning tick.
struct RolloutRecord {
  std::vector<State> states;                      // observed before each tick
  std::vector<Action> executed_actions;           // one per tick
  std::vector<ActionChunk> selected_chunks;       // one per replanning tick
  std::vector<std::int64_t> replanning_ticks;     // tick of each selection
  std::vector<SelectionDiagnostics> diagnostics;  // parallel to selected_chunks
  bool aborted = false;                           // env failed mid-episode
};

using SelectFn = std::function<Selection(const ObservationHistory&, Rng&)>;

// Wrappers binding a decoder (and its memory) into a SelectFn.
SelectFn make_bid_select_fn(BidDecoder& dec);
SelectFn make_vanilla_select_fn(std::shared_ptr<const ChunkSampler> sampler);
SelectFn make_ema_select_fn(EmaDecoder& dec);

// Per tick: observe, select a chunk, execute exactly its first action, step
// the environment. Stops after T ticks or when the environment reports done.
// The two-stream variant keeps environment randomness on its own rng so
// different decoders can be compared on identical episode realizations.
RolloutRecord closed_loop_rollout(Environment& env, const SelectFn& select, int episode_ticks,
                                  Rng& env_rng, Rng& select_rng,
                                  std::size_t context_length = 1);
RolloutRecord closed_loop_rollout(Environment& env, const SelectFn& select, int episode_ticks,
                                  Rng& rng, std::size_t context_length = 1);

// Replans every `action_horizon` ticks and executes that many consecutive
// actions of each sampled chunk; the final chunk is truncated when T is not
// a multiple of the horizon. Horizon 1 coincides with a closed-loop rollout
// under vanilla selection.
RolloutRecord open_loop_rollout(Environment& env, const ChunkSampler& sampler,
                                int action_horizon, int episode_ticks, Rng& env_rng,
                                Rng& select_rng, std::size_t context_length = 1);
RolloutRecord open_loop_rollout(Environment& env, const ChunkSampler& sampler,
                                int action_horizon, int episode_ticks, Rng& rng,
                                std::size_t context_length = 1);

}  // namespace bid
