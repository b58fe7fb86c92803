#include "bid/decoder.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <utility>

namespace bid {

const char* to_string(ContrastVariant v) {
  switch (v) {
    case ContrastVariant::full: return "full";
    case ContrastVariant::positives_only: return "positives-only";
    case ContrastVariant::negatives_only: return "negatives-only";
    case ContrastVariant::off: return "off";
  }
  return "unknown";
}

BidDecoder::BidDecoder(std::shared_ptr<const ChunkSampler> strong_sampler,
                       std::shared_ptr<const ChunkSampler> weak_sampler, BackwardConfig cfg_b,
                       ForwardConfig cfg_f, ContrastVariant variant)
    : strong(std::move(strong_sampler)),
      weak(std::move(weak_sampler)),
      backward(cfg_b),
      forward(cfg_f),
      contrast(variant) {
  if (!strong || !weak) throw ConfigError("BidDecoder requires both samplers");
  validate(backward);
  validate(forward);
}

EmaDecoder::EmaDecoder(std::shared_ptr<const ChunkSampler> s, double lambda_)
    : sampler(std::move(s)), lambda(lambda_) {
  if (!sampler) throw ConfigError("EmaDecoder requires a sampler");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("EMA decay must lie in (0, 1)");
}

namespace {

void check_population(const std::vector<ActionChunk>& chunks, const char* label) {
  if (chunks.empty()) {
    std::ostringstream msg;
    msg << label << " sampler returned no chunks";
    throw ConfigError(msg.str());
  }
  const std::int64_t t0 = chunks.front().start_time;
  const std::size_t len = chunks.front().length();
  for (const ActionChunk& c : chunks) {
    if (c.start_time != t0 || c.length() != len) {
      std::ostringstream msg;
      msg << label << " sampler violated the equal start/length contract";
      throw AlignmentError(msg.str());
    }
  }
}

void check_memory_adjacent(const DecisionMemory& memory, std::int64_t tick) {
  if (memory.previous && memory.previous->start_time != tick - 1) {
    std::ostringstream msg;
    msg << "decision memory is stale: previous chunk starts at "
        << memory.previous->start_time << " but the current tick is " << tick;
    throw AlignmentError(msg.str());
  }
}

}  // namespace

Selection bid_select(const ObservationHistory& history, BidDecoder& dec, Rng& rng) {
  check_memory_adjacent(dec.memory, history.current_tick);

  std::vector<ActionChunk> strong_set = dec.strong->sample(history, dec.forward.batch_size, rng);
  std::vector<ActionChunk> weak_set = dec.weak->sample(history, dec.forward.batch_size, rng);
  check_population(strong_set, "strong");
  check_population(weak_set, "weak");
  for (ActionChunk& c : strong_set) c.source = SourceTag::strong;
  for (ActionChunk& c : weak_set) c.source = SourceTag::weak;

  const std::optional<ActionChunk>& prev = dec.memory.previous;
  const int k = dec.forward.mode_size;
  const auto positive_idx = trim_to_mode_indices(strong_set, prev, k, dec.backward);
  const auto negative_idx = trim_to_mode_indices(weak_set, prev, k, dec.backward);

  const bool use_positives = dec.contrast == ContrastVariant::full ||
                             dec.contrast == ContrastVariant::positives_only;
  const bool use_negatives = dec.contrast == ContrastVariant::full ||
                             dec.contrast == ContrastVariant::negatives_only;

  std::vector<ActionChunk> negatives;
  if (use_negatives) {
    negatives.reserve(negative_idx.size());
    for (std::size_t i : negative_idx) negatives.push_back(weak_set[i]);
  }

  SelectionDiagnostics diag;
  diag.backward_losses.resize(strong_set.size(), 0.0);
  diag.forward_losses.resize(strong_set.size(), 0.0);
  diag.total_losses.resize(strong_set.size(), 0.0);

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < strong_set.size(); ++i) {
    const ActionChunk& cand = strong_set[i];

    std::vector<ActionChunk> positives;
    if (use_positives) {
      positives.reserve(positive_idx.size());
      for (std::size_t j : positive_idx) {
        if (j == i) continue;  // a candidate never references itself
        positives.push_back(strong_set[j]);
      }
    }

    const double lb = prev ? backward_coherence(cand, *prev, dec.backward) : 0.0;
    const double lf = forward_contrast(cand, positives, negatives, dec.forward);
    const double total = lb + lf;
    diag.backward_losses[i] = lb;
    diag.forward_losses[i] = lf;
    diag.total_losses[i] = total;
    if (total < best) {  // strict: ties keep the lowest index
      best = total;
      best_index = i;
    }
  }

  diag.chosen_index = best_index;
  diag.chosen_source = SourceTag::strong;
  Selection sel{strong_set[best_index], std::move(diag)};
  dec.memory.remember(sel.chunk);
  return sel;
}

ActionChunk vanilla_select(const ObservationHistory& history, const ChunkSampler& sampler,
                           Rng& rng) {
  auto chunks = sampler.sample(history, 1, rng);
  check_population(chunks, "vanilla");
  return std::move(chunks.front());
}

ActionChunk ema_select(const ObservationHistory& history, EmaDecoder& dec, Rng& rng) {
  check_memory_adjacent(dec.memory, history.current_tick);
  ActionChunk chunk = vanilla_select(history, *dec.sampler, rng);
  if (dec.memory.previous) {
    const ActionChunk& prev = *dec.memory.previous;
    if (chunk.start_time != prev.start_time + 1 || chunk.length() != prev.length() ||
        chunk.dim() != prev.dim()) {
      throw AlignmentError("EMA memory chunk cannot be aligned with the new sample");
    }
    // Overlap steps are chunk[tau] vs prev[tau + 1]; the last step has no
    // counterpart and stays as sampled.
    for (std::size_t tau = 0; tau + 1 < chunk.length(); ++tau) {
      Action& cur = chunk.actions[tau];
      const Action& old = prev.actions[tau + 1];
      for (std::size_t d = 0; d < cur.size(); ++d) {
        cur[d] = dec.lambda * cur[d] + (1.0 - dec.lambda) * old[d];
      }
    }
  }
  dec.memory.remember(chunk);
  return chunk;
}

SelectFn make_bid_select_fn(BidDecoder& dec) {
  return [&dec](const ObservationHistory& history, Rng& rng) {
    return bid_select(history, dec, rng);
  };
}

SelectFn make_vanilla_select_fn(std::shared_ptr<const ChunkSampler> sampler) {
  return [sampler = std::move(sampler)](const ObservationHistory& history, Rng& rng) {
    Selection sel;
    sel.chunk = vanilla_select(history, *sampler, rng);
    sel.diag.chosen_index = 0;
    sel.diag.chosen_source = sel.chunk.source;
    return sel;
  };
}

SelectFn make_ema_select_fn(EmaDecoder& dec) {
  return [&dec](const ObservationHistory& history, Rng& rng) {
    Selection sel;
    sel.chunk = ema_select(history, dec, rng);
    sel.diag.chosen_index = 0;
    sel.diag.chosen_source = sel.chunk.source;
    return sel;
  };
}

RolloutRecord closed_loop_rollout(Environment& env, const SelectFn& select, int episode_ticks,
                                  Rng& env_rng, Rng& select_rng, std::size_t context_length) {
  RolloutRecord record;
  if (episode_ticks < 0) throw ConfigError("episode length must be nonnegative");
  ObservationHistory history = ObservationHistory::single(env.reset(env_rng), 0);
  for (int tick = 0; tick < episode_ticks && !env.done(); ++tick) {
    record.states.push_back(history.current());
    Selection sel = select(history, select_rng);  // sampler failures propagate
    const Action action = sel.chunk.actions.front();
    record.selected_chunks.push_back(std::move(sel.chunk));
    record.replanning_ticks.push_back(tick);
    record.diagnostics.push_back(std::move(sel.diag));

    State next;
    try {
      next = env.step(action, env_rng);
    } catch (const std::exception&) {
      record.aborted = true;
      return record;
    }
    record.executed_actions.push_back(action);
    history.push(std::move(next), context_length);
  }
  return record;
}

RolloutRecord closed_loop_rollout(Environment& env, const SelectFn& select, int episode_ticks,
                                  Rng& rng, std::size_t context_length) {
  return closed_loop_rollout(env, select, episode_ticks, rng, rng, context_length);
}

RolloutRecord open_loop_rollout(Environment& env, const ChunkSampler& sampler,
                                int action_horizon, int episode_ticks, Rng& env_rng,
                                Rng& select_rng, std::size_t context_length) {
  if (action_horizon < 1) throw ConfigError("action horizon must be >= 1");
  if (episode_ticks < 0) throw ConfigError("episode length must be nonnegative");
  RolloutRecord record;
  ObservationHistory history = ObservationHistory::single(env.reset(env_rng), 0);
  int tick = 0;
  while (tick < episode_ticks && !env.done()) {
    std::vector<ActionChunk> chunks = sampler.sample(history, 1, select_rng);
    check_population(chunks, "open-loop");
    ActionChunk chunk = std::move(chunks.front());
    if (chunk.length() < static_cast<std::size_t>(action_horizon)) {
      throw ConfigError("action horizon exceeds the sampled chunk length");
    }
    record.selected_chunks.push_back(chunk);
    record.replanning_ticks.push_back(tick);
    record.diagnostics.emplace_back();

    for (int step = 0; step < action_horizon && tick < episode_ticks && !env.done();
         ++step, ++tick) {
      record.states.push_back(history.current());
      const Action& action = chunk.actions[static_cast<std::size_t>(step)];
      State next;
      try {
        next = env.step(action, env_rng);
      } catch (const std::exception&) {
        record.aborted = true;
        return record;
      }
      record.executed_actions.push_back(action);
      history.push(std::move(next), context_length);
    }
  }
  return record;
}

RolloutRecord open_loop_rollout(Environment& env, const ChunkSampler& sampler,
                                int action_horizon, int episode_ticks, Rng& rng,
                                std::size_t context_length) {
  return open_loop_rollout(env, sampler, action_horizon, episode_ticks, rng, rng,
                           context_length);
}

}  // namespace bid
