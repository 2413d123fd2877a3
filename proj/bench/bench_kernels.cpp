// Serial vs OpenMP timings for the hot kernels.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "cqkit/index.hpp"
#include "cqkit/metrics.hpp"
#include "cqkit/parallel.hpp"
#include "cqkit/retrieval.hpp"
#include "cqkit/rng.hpp"

using namespace cqkit;

namespace {

template <class Fn> double time_ms(Fn &&fn, int reps = 5) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char *name, double serial, double parallel) {
  std::printf("%-22s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name, serial,
              parallel, serial / parallel);
}

std::string random_text(SplitMix &rng, std::size_t words, std::size_t vocab) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i)
      s += ' ';
    s += "w" + std::to_string(rng.uniform(vocab));
  }
  return s;
}

} // namespace

int main() {
  SplitMix rng(7);
  const int threads = default_parallelism();
  std::printf("threads: %d\n", threads);

  EmbeddingTable table(128);
  for (int i = 0; i < 50000; ++i) {
    std::vector<double> v(128);
    for (auto &x : v)
      x = static_cast<double>(rng.uniform(1000)) / 1000.0 - 0.5;
    table.add("d" + std::to_string(i), v);
  }
  std::vector<double> q(128, 0.1);
  volatile double sink = 0;
  row("dense_scores",
      time_ms([&] { sink = sink + dense_scores_serial(table, q, true)[0]; }),
      time_ms([&] { sink = sink + dense_scores(table, q, true, threads)[0]; }));

  std::vector<Document> docs;
  for (int i = 0; i < 20000; ++i)
    docs.push_back({"d" + std::to_string(i), random_text(rng, 60, 5000)});
  const auto index = InvertedIndex::build(Corpus(std::move(docs)));
  std::vector<std::string> queries;
  for (int i = 0; i < 200; ++i)
    queries.push_back(random_text(rng, 4, 5000));
  row("bm25_retrieve_batch",
      time_ms([&] { sink = sink + bm25_retrieve_batch(index, queries, 10, {}, 1).size(); }, 3),
      time_ms([&] { sink = sink + bm25_retrieve_batch(index, queries, 10, {}, threads).size(); }, 3));

  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::string> f, g;
    for (int j = 0; j < 5; ++j) {
      f.push_back(random_text(rng, 3, 40));
      g.push_back(random_text(rng, 3, 40));
    }
    pairs.emplace_back(std::move(f), std::move(g));
  }
  const HashedBagEmbedder embedder;
  std::vector<MetricReport> out(pairs.size());
  auto eval = [&](std::size_t i) {
    out[i] = evaluate_instance(pairs[i].first, pairs[i].second, embedder);
  };
  row("evaluate_instance",
      time_ms([&] { serial_for(pairs.size(), eval); }, 3),
      time_ms([&] { parallel_for(pairs.size(), threads, eval); }, 3));
  return 0;
}
