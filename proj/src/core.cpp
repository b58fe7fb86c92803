#include "bid/core.hpp"

#include <cmath>
#include <sstream>

namespace bid {

void validate_chunk(const ActionChunk& chunk) {
  if (chunk.actions.empty()) throw AlignmentError("chunk must hold at least one action");
  if (chunk.start_time < 0) throw AlignmentError("chunk start_time must be nonnegative");
  const std::size_t dim = chunk.actions.front().size();
  if (dim == 0) throw AlignmentError("actions must have dimension >= 1");
  for (const Action& a : chunk.actions) {
    if (a.size() != dim) throw AlignmentError("all actions in a chunk must share one dimension");
    for (double v : a) {
      if (!std::isfinite(v)) throw AlignmentError("action entries must be finite");
    }
  }
}

double step_distance(const Action& a, const Action& b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "action dimension mismatch: " << a.size() << " vs " << b.size();
    throw AlignmentError(msg.str());
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::vector<std::pair<Action, Action>> overlap_pairs(const ActionChunk& prev,
                                                     const ActionChunk& cand) {
  if (cand.start_time != prev.start_time + 1) {
    std::ostringstream msg;
    msg << "chunks are not adjacent: prev starts at " << prev.start_time
        << ", cand starts at " << cand.start_time;
    throw AlignmentError(msg.str());
  }
  if (prev.length() != cand.length()) {
    throw AlignmentError("adjacent chunks must have equal length");
  }
  if (prev.dim() != cand.dim()) {
    throw AlignmentError("adjacent chunks must share action dimension");
  }
  const std::size_t overlap = cand.length() - 1;
  std::vector<std::pair<Action, Action>> pairs;
  pairs.reserve(overlap);
  for (std::size_t tau = 0; tau < overlap; ++tau) {
    pairs.emplace_back(cand.actions[tau], prev.actions[tau + 1]);
  }
  return pairs;
}

}  // namespace bid
