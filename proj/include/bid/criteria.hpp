#pragma once

// The two scoring criteria used for sample selection: backward coherence
// against the previously selected chunk, and forward contrast against trimmed
// reference sets from a stronger and a weaker sampler.

#include <optional>
#include <vector>

#include "bid/core.hpp"

namespace bid {

struct BackwardConfig {
  double rho = 0.9;  // decay per overlap step, in [0, 1]
};

struct ForwardConfig {
  int mode_size = 10;   // K: reference samples kept per population after trimming
  int batch_size = 30;  // N: samples drawn per population, also the Eq. divisor
};

void validate(const BackwardConfig& cfg);
void validate(const ForwardConfig& cfg);

// Decayed sum of per-step distances over the overlap between cand (starting
// at t) and prev (starting at t-1):
//
//   sum_{tau=0}^{l-1} rho^tau * || cand[t+tau] - prev[t+tau] ||_2
//
// Zero when no overlap exists (single-action chunks). rho = 0 keeps only the
// tau = 0 term (0^0 := 1).
double backward_coherence(const ActionChunk& cand, const ActionChunk& prev,
                          const BackwardConfig& cfg);

// The k samples with smallest backward coherence w.r.t. prev, in original
// sampler order; ties broken by lower original index. Without a previous
// decision (first tick) the first k samples pass through unchanged.
std::vector<ActionChunk> trim_to_mode(const std::vector<ActionChunk>& samples,
                                      const std::optional<ActionChunk>& prev, int k,
                                      const BackwardConfig& cfg);

// Same selection, but returning indices into `samples` instead of copies.
std::vector<std::size_t> trim_to_mode_indices(const std::vector<ActionChunk>& samples,
                                              const std::optional<ActionChunk>& prev, int k,
                                              const BackwardConfig& cfg);

// Contrastive score of a candidate against positive and negative reference
// chunks, all sharing the candidate's start time and length:
//
//   (1/N) * ( sum_{a+} sum_tau ||cand - a+||  -  sum_{a-} sum_tau ||cand - a-|| )
//
// Distances run over every chunk step. The caller removes the candidate from
// its own positive set. May be negative; empty sets contribute zero.
double forward_contrast(const ActionChunk& cand, const std::vector<ActionChunk>& positives,
                        const std::vector<ActionChunk>& negatives, const ForwardConfig& cfg);

// backward_coherence + forward_contrast; backward term is zero at the first
// tick, when no previous decision exists.
double total_loss(const ActionChunk& cand, const std::optional<ActionChunk>& prev,
                  const std::vector<ActionChunk>& positives,
                  const std::vector<ActionChunk>& negatives, const BackwardConfig& cfg_b,
                  const ForwardConfig& cfg_f);

}  // namespace bid
