#include <doctest.h>

#include "cqkit/errors.hpp"
#include "cqkit/retrieval.hpp"
#include "support.hpp"

using namespace cqkit;

namespace {

std::vector<ScoredDoc> ranked(const std::vector<double> &scores) {
  std::vector<ScoredDoc> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.push_back({"d" + std::to_string(i), scores[i], i + 1});
  return out;
}

SimilarityFn matrix_sim(std::vector<std::vector<double>> m) {
  return [m = std::move(m)](std::size_t i, std::size_t j) { return m[i][j]; };
}

} // namespace

TEST_CASE("mmr skips a near duplicate") {
  const auto cands = ranked({3.0, 2.0, 1.0});
  const auto sim = matrix_sim({{1, 1, 0}, {1, 1, 0}, {0, 0, 1}});
  CHECK(mmr_select(cands, 0.5, 2, sim) == std::vector<std::size_t>{0, 2});
  const auto out = mmr_rerank(cands, 0.5, 2, sim);
  REQUIRE(out.size() == 2);
  CHECK(out[0].doc_id == "d0");
  CHECK(out[1].doc_id == "d2");
  CHECK(out[1].score == 1.0);
  CHECK(out[1].rank == 2);
}

TEST_CASE("mmr contract") {
  const auto sim = matrix_sim({{1}});
  CHECK_THROWS_AS(mmr_select({}, 0.5, 1, sim), DataError);
  CHECK(mmr_select({}, 0.5, 0, sim).empty());
  CHECK_THROWS_AS(mmr_select(ranked({1.0}), 1.5, 1, sim), UsageError);
  CHECK(mmr_select(ranked({1.0}), 0.5, 4, sim) == std::vector<std::size_t>{0});
}

TEST_CASE("mmr with lambda 1 is the relevance top-k") {
  SplitMix rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.uniform(12);
    std::vector<double> scores(n);
    for (auto &s : scores)
      s = static_cast<double>(rng.uniform(1000)) / 10.0;
    std::sort(scores.rbegin(), scores.rend());
    const auto k = 1 + rng.uniform(n);
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (auto &row : m)
      for (auto &x : row)
        x = static_cast<double>(rng.uniform(101)) / 100.0;
    const auto out = mmr_rerank(ranked(scores), 1.0, k, matrix_sim(m));
    REQUIRE(out.size() == k);
    for (std::size_t r = 0; r < k; ++r)
      CHECK(out[r].score == scores[r]);
  }
}

TEST_CASE("mmr with k equal to the candidate count is a permutation") {
  SplitMix rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform(8);
    std::vector<double> scores(n);
    for (auto &s : scores)
      s = static_cast<double>(rng.uniform(50));
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (auto &row : m)
      for (auto &x : row)
        x = static_cast<double>(rng.uniform(101)) / 100.0;
    const double lambda = static_cast<double>(rng.uniform(11)) / 10.0;
    auto picks = mmr_select(ranked(scores), lambda, n, matrix_sim(m));
    std::sort(picks.begin(), picks.end());
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    CHECK(picks == all);
  }
}

TEST_CASE("mmr greedy agrees with exhaustive objective check on 3 candidates") {
  // Oracle: among all orderings, the greedy one is the unique ordering where
  // every step's pick scores strictly above every earlier-indexed remaining
  // candidate and at least as high as every later one.
  const std::vector<std::vector<double>> m{{1.0, 0.9, 0.1}, {0.9, 1.0, 0.4}, {0.1, 0.4, 1.0}};
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  for (double s0 : grid)
    for (double s1 : grid)
      for (double s2 : grid)
        for (double lambda : {0.0, 0.25, 0.5, 0.7, 1.0})
          for (std::size_t k = 1; k <= 3; ++k) {
            const std::vector<double> scores{s0, s1, s2};
            const double lo = *std::min_element(scores.begin(), scores.end());
            const double hi = *std::max_element(scores.begin(), scores.end());
            auto rel = [&](std::size_t i) { return hi > lo ? (scores[i] - lo) / (hi - lo) : 1.0; };
            std::vector<std::size_t> perm{0, 1, 2};
            std::vector<std::vector<std::size_t>> valid;
            do {
              bool ok = true;
              // First pick: highest score, earliest on ties.
              for (std::size_t j = 0; j < 3; ++j)
                if (j != perm[0] && (scores[j] > scores[perm[0]] ||
                                     (scores[j] == scores[perm[0]] && j < perm[0])))
                  ok = false;
              for (std::size_t step = 1; step < k && ok; ++step) {
                auto value = [&](std::size_t c) {
                  double ms = -std::numeric_limits<double>::infinity();
                  for (std::size_t s = 0; s < step; ++s)
                    ms = std::max(ms, m[c][perm[s]]);
                  return lambda * rel(c) - (1.0 - lambda) * ms;
                };
                const auto pick = perm[step];
                for (std::size_t r = step + 1; r < 3; ++r) {
                  const auto other = perm[r];
                  if (value(other) > value(pick) ||
                      (value(other) == value(pick) && other < pick))
                    ok = false;
                }
              }
              std::vector<std::size_t> prefix(perm.begin(), perm.begin() + static_cast<long>(k));
              if (ok && std::find(valid.begin(), valid.end(), prefix) == valid.end())
                valid.push_back(prefix);
            } while (std::next_permutation(perm.begin(), perm.end()));
            REQUIRE(valid.size() == 1);
            CHECK(mmr_select(ranked(scores), lambda, k, matrix_sim(m)) == valid[0]);
          }
}

TEST_CASE("mmr pools over embeddings and the lexical fallback") {
  const Corpus corpus({{"a", "apple pie recipe"},
                       {"b", "apple pie recipe easy"},
                       {"c", "apple orchard tour"},
                       {"d", "banana"}});
  const auto index = InvertedIndex::build(corpus);
  RetrievalConfig cfg;
  cfg.k = 2;
  cfg.candidate_n = 3;
  cfg.mmr_lambda = 0.3;
  const ClarificationInstance inst{"t", "apple pie", std::nullopt, {"x"}};

  const auto lexical = PoolBuilder({&corpus, &index, nullptr, nullptr}, cfg).build(inst);
  REQUIRE(lexical.entries.size() == 2);
  CHECK(lexical.entries[1].doc_id == "c");

  EmbeddingTable vecs(2);
  vecs.add("a", {1, 0});
  vecs.add("b", {0, 1});
  vecs.add("c", {1, 0.01});
  vecs.add("d", {0, 1});
  const auto dense = PoolBuilder({&corpus, &index, &vecs, nullptr}, cfg).build(inst);
  REQUIRE(dense.entries.size() == 2);
  CHECK(dense.entries[0].doc_id == lexical.entries[0].doc_id);
  CHECK(dense.entries[1].doc_id == "b");
}
