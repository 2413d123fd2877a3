#include <algorithm>
#include <bit>
#include <limits>

#include "cqkit/metrics.hpp"

namespace cqkit::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Totals closer than this are treated as ties; BLEU-1 values are ratios of
// small integers so genuine differences are far larger.
constexpr double kTieEps = 1e-9;
constexpr std::size_t kMaxDpTruth = 14;

FacetAssignment finish(std::vector<FacetPair> pairs, std::size_t n,
                       std::size_t m) {
  FacetAssignment a;
  std::sort(pairs.begin(), pairs.end(),
            [](const auto &x, const auto &y) { return x.generated < y.generated; });
  std::vector<bool> gen_used(n, false), truth_used(m, false);
  for (const auto &p : pairs) {
    gen_used[p.generated] = true;
    truth_used[p.truth] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!gen_used[i])
      a.unmatched_generated.push_back(i);
  for (std::size_t j = 0; j < m; ++j)
    if (!truth_used[j])
      a.unmatched_truth.push_back(j);
  a.pairs = std::move(pairs);
  return a;
}

} // namespace

FacetAssignment assign_by_subset_dp(const std::vector<std::vector<double>> &score) {
  const std::size_t n = score.size();
  const std::size_t m = n == 0 ? 0 : score[0].size();
  const std::size_t want = std::min(n, m);
  const std::size_t masks = std::size_t{1} << m;
  // best[i][mask]: best total over generated i..n-1 given truth facets in
  // `mask` are taken, under the constraint that exactly `want` pairs form.
  std::vector<std::vector<double>> best(n + 1, std::vector<double>(masks, kNegInf));
  for (std::size_t mask = 0; mask < masks; ++mask)
    if (static_cast<std::size_t>(std::popcount(mask)) == want)
      best[n][mask] = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t mask = 0; mask < masks; ++mask) {
      const auto used = static_cast<std::size_t>(std::popcount(mask));
      if (used > want)
        continue;
      double v = best[i + 1][mask];
      if (used < want)
        for (std::size_t j = 0; j < m; ++j)
          if (!(mask >> j & 1) && best[i + 1][mask | (std::size_t{1} << j)] != kNegInf)
            v = std::max(v, score[i][j] + best[i + 1][mask | (std::size_t{1} << j)]);
      best[i][mask] = v;
    }
  }
  std::vector<FacetPair> pairs;
  std::size_t mask = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = best[i][mask];
    bool matched = false;
    if (static_cast<std::size_t>(std::popcount(mask)) < want) {
      for (std::size_t j = 0; j < m && !matched; ++j) {
        if (mask >> j & 1)
          continue;
        const double rest = best[i + 1][mask | (std::size_t{1} << j)];
        if (rest != kNegInf && score[i][j] + rest >= target - kTieEps) {
          pairs.push_back({i, j, score[i][j]});
          mask |= std::size_t{1} << j;
          matched = true;
        }
      }
    }
  }
  return finish(std::move(pairs), n, m);
}

namespace {

// Kuhn-Munkres on the zero-padded square matrix; returns an optimal set of
// exactly min(n, m) pairs with no particular tie-break.
std::vector<FacetPair> kuhn_munkres(const std::vector<std::vector<double>> &score) {
  const std::size_t n = score.size();
  const std::size_t m = n == 0 ? 0 : score[0].size();
  const std::size_t sz = std::max(n, m);
  if (sz == 0)
    return {};
  // Square cost matrix (1-based, potentials form) minimizing -score.
  auto cost = [&](std::size_t r, std::size_t c) {
    return (r < n && c < m) ? -score[r][c] : 0.0;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(sz + 1, 0.0), v(sz + 1, 0.0);
  std::vector<std::size_t> p(sz + 1, 0), way(sz + 1, 0);
  for (std::size_t i = 1; i <= sz; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(sz + 1, inf);
    std::vector<bool> used(sz + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= sz; ++j) {
        if (used[j])
          continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= sz; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<FacetPair> pairs;
  for (std::size_t j = 1; j <= sz; ++j) {
    const std::size_t r = p[j] - 1, c = j - 1;
    if (r < n && c < m)
      pairs.push_back({r, c, score[r][c]});
  }
  return pairs;
}

double total_of(const std::vector<FacetPair> &pairs) {
  double t = 0.0;
  for (const auto &p : pairs)
    t += p.bleu1;
  return t;
}

std::vector<std::vector<double>> sub_matrix(const std::vector<std::vector<double>> &score,
                                            const std::vector<std::size_t> &rows,
                                            const std::vector<std::size_t> &cols) {
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out[r][c] = score[rows[r]][cols[c]];
  return out;
}

} // namespace

FacetAssignment assign_by_hungarian(const std::vector<std::vector<double>> &score) {
  const std::size_t n = score.size();
  const std::size_t m = n == 0 ? 0 : score[0].size();
  if (n == 0 || m == 0)
    return finish({}, n, m);
  // Walk generated facets in order, committing each to the smallest truth
  // index (or to no partner) that still admits an optimal completion.
  double remaining = total_of(kuhn_munkres(score));
  std::vector<std::size_t> rows, cols(m);
  for (std::size_t j = 0; j < m; ++j)
    cols[j] = j;
  std::vector<FacetPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    rows.clear();
    for (std::size_t r = i + 1; r < n; ++r)
      rows.push_back(r);
    bool matched = false;
    if (!cols.empty()) {
      for (std::size_t c = 0; c < cols.size() && !matched; ++c) {
        auto rest_cols = cols;
        rest_cols.erase(rest_cols.begin() + static_cast<long>(c));
        const double rest = (rows.empty() || rest_cols.empty())
                                ? 0.0
                                : total_of(kuhn_munkres(sub_matrix(score, rows, rest_cols)));
        if (score[i][cols[c]] + rest >= remaining - kTieEps) {
          pairs.push_back({i, cols[c], score[i][cols[c]]});
          remaining = rest;
          cols = std::move(rest_cols);
          matched = true;
        }
      }
    }
  }
  return finish(std::move(pairs), n, m);
}

FacetAssignment assign(const std::vector<std::vector<double>> &score) {
  const std::size_t m = score.empty() ? 0 : score[0].size();
  if (m <= kMaxDpTruth)
    return assign_by_subset_dp(score);
  return assign_by_hungarian(score);
}

} // namespace cqkit::detail
