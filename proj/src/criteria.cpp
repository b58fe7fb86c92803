#include "bid/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bid {

void validate(const BackwardConfig& cfg) {
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) {
    throw ConfigError("backward decay rho must lie in [0, 1]");
  }
}

void validate(const ForwardConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch size N must be positive");
  if (cfg.mode_size < 1 || cfg.mode_size > cfg.batch_size) {
    std::ostringstream msg;
    msg << "mode size K must satisfy 1 <= K <= N, got K=" << cfg.mode_size
        << " N=" << cfg.batch_size;
    throw ConfigError(msg.str());
  }
}

double backward_coherence(const ActionChunk& cand, const ActionChunk& prev,
                          const BackwardConfig& cfg) {
  validate(cfg);
  const auto pairs = overlap_pairs(prev, cand);
  double loss = 0.0;
  double weight = 1.0;  // rho^0, also when rho == 0
  for (const auto& [cand_action, prev_action] : pairs) {
    loss += weight * step_distance(cand_action, prev_action);
    weight *= cfg.rho;
  }
  return loss;
}

std::vector<std::size_t> trim_to_mode_indices(const std::vector<ActionChunk>& samples,
                                              const std::optional<ActionChunk>& prev, int k,
                                              const BackwardConfig& cfg) {
  if (samples.empty()) throw ConfigError("trim_to_mode requires a nonempty sample set");
  if (k < 1 || static_cast<std::size_t>(k) > samples.size()) {
    std::ostringstream msg;
    msg << "mode size " << k << " out of range for " << samples.size() << " samples";
    throw ConfigError(msg.str());
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (prev.has_value()) {
    std::vector<double> loss(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      loss[i] = backward_coherence(samples[i], *prev, cfg);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return loss[a] < loss[b]; });
  }
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());  // report in original sampler order
  return order;
}

std::vector<ActionChunk> trim_to_mode(const std::vector<ActionChunk>& samples,
                                      const std::optional<ActionChunk>& prev, int k,
                                      const BackwardConfig& cfg) {
  const auto indices = trim_to_mode_indices(samples, prev, k, cfg);
  std::vector<ActionChunk> kept;
  kept.reserve(indices.size());
  for (std::size_t i : indices) kept.push_back(samples[i]);
  return kept;
}

namespace {

// Full-horizon distance between two aligned chunks: sum of per-step L2 norms.
double chunk_distance(const ActionChunk& a, const ActionChunk& b) {
  if (a.start_time != b.start_time) {
    throw AlignmentError("reference chunk start time differs from candidate");
  }
  if (a.length() != b.length()) {
    throw AlignmentError("reference chunk length differs from candidate");
  }
  double sum = 0.0;
  for (std::size_t tau = 0; tau < a.length(); ++tau) {
    sum += step_distance(a.actions[tau], b.actions[tau]);
  }
  return sum;
}

}  // namespace

double forward_contrast(const ActionChunk& cand, const std::vector<ActionChunk>& positives,
                        const std::vector<ActionChunk>& negatives, const ForwardConfig& cfg) {
  validate(cfg);
  double pos = 0.0;
  for (const ActionChunk& ref : positives) pos += chunk_distance(cand, ref);
  double neg = 0.0;
  for (const ActionChunk& ref : negatives) neg += chunk_distance(cand, ref);
  return (pos - neg) / static_cast<double>(cfg.batch_size);
}

double total_loss(const ActionChunk& cand, const std::optional<ActionChunk>& prev,
                  const std::vector<ActionChunk>& positives,
                  const std::vector<ActionChunk>& negatives, const BackwardConfig& cfg_b,
                  const ForwardConfig& cfg_f) {
  double loss = forward_contrast(cand, positives, negatives, cfg_f);
  if (prev.has_value()) loss += backward_coherence(cand, *prev, cfg_b);
  return loss;
}

}  // namespace bid
