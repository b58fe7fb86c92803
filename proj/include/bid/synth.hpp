#pragma once

// Synthetic multimodal samplers and a stochastic tracking environment.
// These exercise mode coherence (left/right latent strategies) and
// reactivity without any trained policy: chunks come from two reference
// trajectories plus Gaussian noise, and an evaluation-only mode tag lets the
// harness measure strategy oscillation.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "bid/core.hpp"
#include "bid/decoder.hpp"

namespace bid::synth {

// A latent strategy: the action to emit at an absolute tick, possibly
// conditioned on the current observation (pursuit-style modes re-plan from
// the observed positions; static modes ignore the history).
using ModeTrajectory = std::function<Action(std::int64_t tick, const ObservationHistory&)>;

// Samples each chunk by picking a latent mode (A with probability
// mode_prob), emitting that mode's trajectory over the chunk horizon, and
// adding i.i.d. Gaussian noise per step. The latent tag of each chunk is
// available out-of-band for evaluation; decoders only ever see the chunks.
class BimodalChunkSampler : public ChunkSampler {
public:
  BimodalChunkSampler(ModeTrajectory mode_a, ModeTrajectory mode_b, double mode_prob,
                      double sigma, int horizon);

  std::vector<ActionChunk> sample(const ObservationHistory& history, int n,
                                  Rng& rng) const override;

  // Like sample(), but also returns each chunk's latent mode (0 = A, 1 = B).
  std::pair<std::vector<ActionChunk>, std::vector<int>> sample_tagged(
      const ObservationHistory& history, int n, Rng& rng) const;

  // Nearest-mode classification of an arbitrary chunk against the unblurred
  // reference trajectories. Ties resolve to mode A.
  int classify(const ActionChunk& chunk, const ObservationHistory& history) const;

  // Reference action of one mode after blurring toward the mode average.
  Action reference(int mode, double blur, std::int64_t tick,
                   const ObservationHistory& history) const;

  double mode_prob() const { return mode_prob_; }
  double sigma() const { return sigma_; }
  int horizon() const { return horizon_; }

private:
  friend class WeakenedSampler;
  std::pair<std::vector<ActionChunk>, std::vector<int>> emit(
      const ObservationHistory& history, int n, Rng& rng, double blur,
      double extra_sigma) const;

  ModeTrajectory mode_a_;
  ModeTrajectory mode_b_;
  double mode_prob_;
  double sigma_;
  int horizon_;
};

// A deliberately degraded variant of a bimodal sampler: every emitted
// trajectory is pulled toward the average of the two modes (blur in [0, 1])
// and carries extra sampling noise. Mimics an underfit policy that knows the
// rough plan but not the committed strategy.
class WeakenedSampler : public ChunkSampler {
public:
  WeakenedSampler(BimodalChunkSampler base, double blur, double extra_sigma);

  std::vector<ActionChunk> sample(const ObservationHistory& history, int n,
                                  Rng& rng) const override;
  std::pair<std::vector<ActionChunk>, std::vector<int>> sample_tagged(
      const ObservationHistory& history, int n, Rng& rng) const;

  const BimodalChunkSampler& base() const { return base_; }
  double blur() const { return blur_; }
  double extra_sigma() const { return extra_sigma_; }

private:
  BimodalChunkSampler base_;
  double blur_;
  double extra_sigma_;
};

WeakenedSampler weaken(const BimodalChunkSampler& base, double blur, double extra_sigma);

// Convenience sampling at a bare tick for static (history-free) mode pairs.
std::pair<std::vector<ActionChunk>, std::vector<int>> sample_bimodal(
    const BimodalChunkSampler& sampler, std::int64_t tick, int n, Rng& rng);

// --- mode trajectory factories -------------------------------------------

// Two constant-action modes (straight diverging routes). The per-step
// separation equals |a - b| at every tick.
std::pair<ModeTrajectory, ModeTrajectory> constant_modes(Action a, Action b);

// Two parabolic position arcs from start to goal, mirrored about the
// start-goal axis, emitted as per-tick displacement actions over
// `total_ticks` steps (zero once the arc is complete). 2-D only.
std::pair<ModeTrajectory, ModeTrajectory> parabolic_arc_modes(
    const std::vector<double>& start, const std::vector<double>& goal, double amplitude,
    int total_ticks);

// Pursuit arcs re-planned from the observed state [agent_x, agent_y,
// target_x, target_y]: each mode walks a parabolic arc from the agent to the
// target at constant per-step speed, bulging laterally to one side by
// amplitude * distance at the arc midpoint. The two modes' early steps point
// to opposite sides, and both collapse onto the target as the distance
// shrinks. Steps past arrival are zero.
std::pair<ModeTrajectory, ModeTrajectory> pursuit_arc_modes(double amplitude, double speed);

// Tick-indexed mode read from a numeric table (tick then one action value
// per dimension, whitespace separated, one row per tick; '#' comments).
// Ticks beyond the table clamp to the last row.
ModeTrajectory trajectory_from_table(std::istream& in);
ModeTrajectory trajectory_from_table_file(const std::string& path);

// --- drifting-target environment ------------------------------------------

// Point agent chasing a drifting target. Actions are 2-D displacements,
// clipped to max_step; the target moves drift_speed per tick along a random
// unit direction resampled every resample_period ticks. The episode is done
// once the agent has ever been within `tolerance` of the target.
class DriftEnv : public Environment {
public:
  struct Params {
    std::vector<double> agent_start{0.0, 0.0};
    std::vector<double> target_start{1.0, 0.0};
    double drift_speed = 0.0;
    double tolerance = 0.05;
    double max_step = 0.1;
    int resample_period = 20;
  };

  explicit DriftEnv(Params params);

  State reset(Rng& rng) override;
  State step(const Action& action, Rng& rng) override;
  bool done() const override { return reached_; }

  bool reached() const { return reached_; }
  double error() const;  // current agent-target distance
  const Params& params() const { return params_; }

private:
  State observation() const;

  Params params_;
  double agent_x_ = 0, agent_y_ = 0;
  double target_x_ = 0, target_y_ = 0;
  double drift_dx_ = 0, drift_dy_ = 0;
  int tick_ = 0;
  bool reached_ = false;
};

// --- evaluation -------------------------------------------------------------

struct ModeSwitchStats {
  double switch_rate = 0.0;  // fraction of consecutive selections changing mode
  bool success = false;
  double final_error = 0.0;
};

// Latent mode of each selected chunk in a record, recovered by nearest-mode
// classification against the sampler's references at each replanning tick.
std::vector<int> classify_selected_modes(const RolloutRecord& record,
                                         const BimodalChunkSampler& sampler);

// Fraction of consecutive selected-chunk pairs with different mode tags.
// Requires at least two replanning ticks.
double mode_switch_rate(const std::vector<int>& tags);
double mode_switch_rate(const RolloutRecord& record, const BimodalChunkSampler& sampler);

}  // namespace bid::synth
