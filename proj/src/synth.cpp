#include "bid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bid::synth {

BimodalChunkSampler::BimodalChunkSampler(ModeTrajectory mode_a, ModeTrajectory mode_b,
                                         double mode_prob, double sigma, int horizon)
    : mode_a_(std::move(mode_a)),
      mode_b_(std::move(mode_b)),
      mode_prob_(mode_prob),
      sigma_(sigma),
      horizon_(horizon) {
  if (!mode_a_ || !mode_b_) throw ConfigError("both mode trajectories are required");
  if (!(mode_prob_ >= 0.0 && mode_prob_ <= 1.0)) {
    throw ConfigError("mode probability must lie in [0, 1]");
  }
  if (sigma_ < 0.0) throw ConfigError("noise scale must be nonnegative");
  if (horizon_ < 1) throw ConfigError("chunk horizon must be >= 1");
}

Action BimodalChunkSampler::reference(int mode, double blur, std::int64_t tick,
                                      const ObservationHistory& history) const {
  const Action a = mode_a_(tick, history);
  const Action b = mode_b_(tick, history);
  if (a.size() != b.size()) throw AlignmentError("mode trajectories disagree on dimension");
  const Action& own = mode == 0 ? a : b;
  Action out(own.size());
  for (std::size_t d = 0; d < own.size(); ++d) {
    const double avg = 0.5 * (a[d] + b[d]);
    out[d] = (1.0 - blur) * own[d] + blur * avg;
  }
  return out;
}

std::pair<std::vector<ActionChunk>, std::vector<int>> BimodalChunkSampler::emit(
    const ObservationHistory& history, int n, Rng& rng, double blur,
    double extra_sigma) const {
  if (n < 1) throw ConfigError("sample count must be positive");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise = sigma_ + extra_sigma;
  const std::int64_t t0 = history.current_tick;

  std::vector<ActionChunk> chunks;
  std::vector<int> tags;
  chunks.reserve(static_cast<std::size_t>(n));
  tags.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int mode = unit(rng) < mode_prob_ ? 0 : 1;
    ActionChunk chunk;
    chunk.start_time = t0;
    chunk.actions.reserve(static_cast<std::size_t>(horizon_));
    for (int k = 0; k < horizon_; ++k) {
      Action a = reference(mode, blur, t0 + k, history);
      for (double& v : a) v += noise * gauss(rng);
      chunk.actions.push_back(std::move(a));
    }
    chunks.push_back(std::move(chunk));
    tags.push_back(mode);
  }
  return {std::move(chunks), std::move(tags)};
}

std::vector<ActionChunk> BimodalChunkSampler::sample(const ObservationHistory& history, int n,
                                                     Rng& rng) const {
  return emit(history, n, rng, 0.0, 0.0).first;
}

std::pair<std::vector<ActionChunk>, std::vector<int>> BimodalChunkSampler::sample_tagged(
    const ObservationHistory& history, int n, Rng& rng) const {
  return emit(history, n, rng, 0.0, 0.0);
}

int BimodalChunkSampler::classify(const ActionChunk& chunk,
                                  const ObservationHistory& history) const {
  double cost_a = 0.0;
  double cost_b = 0.0;
  for (std::size_t k = 0; k < chunk.length(); ++k) {
    const std::int64_t t = chunk.start_time + static_cast<std::int64_t>(k);
    cost_a += step_distance(chunk.actions[k], mode_a_(t, history));
    cost_b += step_distance(chunk.actions[k], mode_b_(t, history));
  }
  return cost_a <= cost_b ? 0 : 1;
}

WeakenedSampler::WeakenedSampler(BimodalChunkSampler base, double blur, double extra_sigma)
    : base_(std::move(base)), blur_(blur), extra_sigma_(extra_sigma) {
  if (!(blur_ >= 0.0 && blur_ <= 1.0)) throw ConfigError("blur must lie in [0, 1]");
  if (extra_sigma_ < 0.0) throw ConfigError("extra noise must be nonnegative");
}

std::vector<ActionChunk> WeakenedSampler::sample(const ObservationHistory& history, int n,
                                                 Rng& rng) const {
  return base_.emit(history, n, rng, blur_, extra_sigma_).first;
}

std::pair<std::vector<ActionChunk>, std::vector<int>> WeakenedSampler::sample_tagged(
    const ObservationHistory& history, int n, Rng& rng) const {
  return base_.emit(history, n, rng, blur_, extra_sigma_);
}

WeakenedSampler weaken(const BimodalChunkSampler& base, double blur, double extra_sigma) {
  return WeakenedSampler(base, blur, extra_sigma);
}

std::pair<std::vector<ActionChunk>, std::vector<int>> sample_bimodal(
    const BimodalChunkSampler& sampler, std::int64_t tick, int n, Rng& rng) {
  ObservationHistory history = ObservationHistory::single(State{}, tick);
  return sampler.sample_tagged(history, n, rng);
}

std::pair<ModeTrajectory, ModeTrajectory> constant_modes(Action a, Action b) {
  if (a.size() != b.size() || a.empty()) {
    throw ConfigError("constant modes need two actions of one nonzero dimension");
  }
  auto make = [](Action v) {
    return [v = std::move(v)](std::int64_t, const ObservationHistory&) { return v; };
  };
  return {make(std::move(a)), make(std::move(b))};
}

namespace {

// Position on a parabolic arc from start to goal, bulging sideways; s in
// [0, 1] along the arc.
std::pair<double, double> arc_position(double sx, double sy, double gx, double gy,
                                       double amplitude, double side, double s) {
  const double dx = gx - sx;
  const double dy = gy - sy;
  const double len = std::hypot(dx, dy);
  const double nx = len > 0 ? -dy / len : 0.0;
  const double ny = len > 0 ? dx / len : 1.0;
  const double bulge = amplitude * 4.0 * s * (1.0 - s) * side;
  return {sx + s * dx + bulge * nx, sy + s * dy + bulge * ny};
}

}  // namespace

std::pair<ModeTrajectory, ModeTrajectory> parabolic_arc_modes(
    const std::vector<double>& start, const std::vector<double>& goal, double amplitude,
    int total_ticks) {
  if (start.size() != 2 || goal.size() != 2) {
    throw ConfigError("parabolic arcs are defined for 2-D start/goal points");
  }
  if (total_ticks < 1) throw ConfigError("arc must span at least one tick");
  auto make = [=](double side) {
    return [=](std::int64_t tick, const ObservationHistory&) -> Action {
      if (tick < 0 || tick >= total_ticks) return Action{0.0, 0.0};
      const double s0 = static_cast<double>(tick) / total_ticks;
      const double s1 = static_cast<double>(tick + 1) / total_ticks;
      const auto [x0, y0] =
          arc_position(start[0], start[1], goal[0], goal[1], amplitude, side, s0);
      const auto [x1, y1] =
          arc_position(start[0], start[1], goal[0], goal[1], amplitude, side, s1);
      return Action{x1 - x0, y1 - y0};
    };
  };
  return {make(+1.0), make(-1.0)};
}

std::pair<ModeTrajectory, ModeTrajectory> pursuit_arc_modes(double amplitude, double speed) {
  if (speed <= 0.0) throw ConfigError("pursuit speed must be positive");
  auto make = [=](double side) {
    return [=](std::int64_t tick, const ObservationHistory& history) -> Action {
      const State& obs = history.current();
      if (obs.size() != 4) {
        throw AlignmentError("pursuit modes need [agent_x, agent_y, target_x, target_y]");
      }
      const std::int64_t k = tick - history.current_tick;
      const double dist = std::hypot(obs[2] - obs[0], obs[3] - obs[1]);
      if (k < 0 || dist < 1e-12) return Action{0.0, 0.0};
      // The lateral bulge scales with the remaining distance so the arcs
      // collapse onto the target.
      const double bulge = amplitude * dist;
      auto at = [&](double s) {
        return arc_position(obs[0], obs[1], obs[2], obs[3], bulge, side, s);
      };
      // Polyline arc length, so the plan advances `speed` per step.
      double length = 0.0;
      constexpr int kSegments = 16;
      auto [px, py] = at(0.0);
      for (int j = 1; j <= kSegments; ++j) {
        const auto [x, y] = at(static_cast<double>(j) / kSegments);
        length += std::hypot(x - px, y - py);
        px = x;
        py = y;
      }
      const int arrive_steps = std::max(1, static_cast<int>(std::ceil(length / speed)));
      if (k >= arrive_steps) return Action{0.0, 0.0};
      const double s0 = static_cast<double>(k) / arrive_steps;
      const double s1 = std::min(1.0, static_cast<double>(k + 1) / arrive_steps);
      const auto [x0, y0] = at(s0);
      const auto [x1, y1] = at(s1);
      return Action{x1 - x0, y1 - y0};
    };
  };
  return {make(+1.0), make(-1.0)};
}

ModeTrajectory trajectory_from_table(std::istream& in) {
  std::vector<Action> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double tick;
    if (!(fields >> tick)) continue;
    Action a;
    double v;
    while (fields >> v) a.push_back(v);
    if (a.empty()) throw ConfigError("trajectory row needs at least one action value");
    if (!rows.empty() && a.size() != rows.front().size()) {
      throw ConfigError("trajectory rows must share one dimension");
    }
    if (static_cast<std::size_t>(tick) != rows.size()) {
      throw ConfigError("trajectory rows must be consecutive ticks starting at 0");
    }
    rows.push_back(std::move(a));
  }
  if (rows.empty()) throw ConfigError("trajectory table is empty");
  return [rows = std::move(rows)](std::int64_t tick, const ObservationHistory&) -> Action {
    if (tick < 0) return rows.front();
    const std::size_t i = std::min(static_cast<std::size_t>(tick), rows.size() - 1);
    return rows[i];
  };
}

ModeTrajectory trajectory_from_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory table: " + path);
  return trajectory_from_table(in);
}

DriftEnv::DriftEnv(Params params) : params_(std::move(params)) {
  if (params_.agent_start.size() != 2 || params_.target_start.size() != 2) {
    throw ConfigError("drift environment is 2-D");
  }
  if (params_.tolerance <= 0.0) throw ConfigError("tolerance must be positive");
  if (params_.drift_speed < 0.0) throw ConfigError("drift speed must be nonnegative");
  if (params_.max_step <= 0.0) throw ConfigError("max step must be positive");
  if (params_.resample_period < 1) throw ConfigError("resample period must be >= 1");
}

State DriftEnv::observation() const { return {agent_x_, agent_y_, target_x_, target_y_}; }

State DriftEnv::reset(Rng& rng) {
  agent_x_ = params_.agent_start[0];
  agent_y_ = params_.agent_start[1];
  target_x_ = params_.target_start[0];
  target_y_ = params_.target_start[1];
  tick_ = 0;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
  const double theta = angle(rng);
  drift_dx_ = std::cos(theta);
  drift_dy_ = std::sin(theta);
  reached_ = error() <= params_.tolerance;
  return observation();
}

State DriftEnv::step(const Action& action, Rng& rng) {
  if (action.size() != 2) throw AlignmentError("drift actions are 2-D displacements");
  double ax = action[0];
  double ay = action[1];
  const double norm = std::hypot(ax, ay);
  if (norm > params_.max_step && norm > 0.0) {
    ax *= params_.max_step / norm;
    ay *= params_.max_step / norm;
  }
  agent_x_ += ax;
  agent_y_ += ay;

  ++tick_;
  if (tick_ % params_.resample_period == 0) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    const double theta = angle(rng);
    drift_dx_ = std::cos(theta);
    drift_dy_ = std::sin(theta);
  }
  target_x_ += params_.drift_speed * drift_dx_;
  target_y_ += params_.drift_speed * drift_dy_;

  if (error() <= params_.tolerance) reached_ = true;
  return observation();
}

double DriftEnv::error() const {
  return std::hypot(agent_x_ - target_x_, agent_y_ - target_y_);
}

std::vector<int> classify_selected_modes(const RolloutRecord& record,
                                         const BimodalChunkSampler& sampler) {
  std::vector<int> tags;
  tags.reserve(record.selected_chunks.size());
  for (std::size_t i = 0; i < record.selected_chunks.size(); ++i) {
    const std::int64_t tick = record.replanning_ticks[i];
    const ObservationHistory history =
        ObservationHistory::single(record.states.at(static_cast<std::size_t>(tick)), tick);
    tags.push_back(sampler.classify(record.selected_chunks[i], history));
  }
  return tags;
}

double mode_switch_rate(const std::vector<int>& tags) {
  if (tags.size() < 2) {
    throw ConfigError("switch rate needs at least two replanning ticks");
  }
  std::size_t switches = 0;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (tags[i] != tags[i - 1]) ++switches;
  }
  return static_cast<double>(switches) / static_cast<double>(tags.size() - 1);
}

double mode_switch_rate(const RolloutRecord& record, const BimodalChunkSampler& sampler) {
  return mode_switch_rate(classify_selected_modes(record, sampler));
}

}  // namespace bid::synth
