#include <algorithm>
#include <limits>

#include "cqkit/errors.hpp"
#include "cqkit/retrieval.hpp"

namespace cqkit {

std::vector<std::size_t> mmr_select(std::span<const ScoredDoc> candidates,
                                    double lambda, std::size_t k,
                                    const SimilarityFn &sim) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw UsageError("MMR lambda must lie in [0, 1]");
  if (k == 0)
    return {};
  if (candidates.empty())
    throw DataError("MMR needs at least one candidate");
  const std::size_t n = candidates.size();
  k = std::min(k, n);

  double lo = candidates[0].score, hi = candidates[0].score;
  for (const auto &c : candidates) {
    lo = std::min(lo, c.score);
    hi = std::max(hi, c.score);
  }
  std::vector<double> rel(n, 1.0);
  if (hi > lo)
    for (std::size_t i = 0; i < n; ++i)
      rel[i] = (candidates[i].score - lo) / (hi - lo);

  std::vector<std::size_t> picked;
  std::vector<bool> taken(n, false);
  // Highest similarity of each candidate to anything selected so far.
  std::vector<double> max_sim(n, -std::numeric_limits<double>::infinity());

  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (candidates[i].score > candidates[first].score)
      first = i;

  auto take = [&](std::size_t p) {
    picked.push_back(p);
    taken[p] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i])
        max_sim[i] = std::max(max_sim[i], sim(i, p));
  };
  take(first);

  while (picked.size() < k) {
    std::size_t best = n;
    double best_value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i])
        continue;
      const double value = lambda * rel[i] - (1.0 - lambda) * max_sim[i];
      if (best == n || value > best_value) {
        best = i;
        best_value = value;
      }
    }
    take(best);
  }
  return picked;
}

std::vector<ScoredDoc> mmr_rerank(std::span<const ScoredDoc> candidates,
                                  double lambda, std::size_t k,
                                  const SimilarityFn &sim) {
  const auto picks = mmr_select(candidates, lambda, k, sim);
  std::vector<ScoredDoc> out;
  out.reserve(picks.size());
  for (std::size_t r = 0; r < picks.size(); ++r) {
    ScoredDoc d = candidates[picks[r]];
    d.rank = r + 1;
    out.push_back(std::move(d));
  }
  return out;
}

} // namespace cqkit
