#include <doctest.h>

#include "cqkit/errors.hpp"
#include "cqkit/index.hpp"
#include "cqkit/metrics.hpp"
#include "cqkit/parallel.hpp"
#include "support.hpp"

using namespace cqkit;

TEST_CASE("parallel_for matches serial_for") {
  std::vector<std::uint64_t> serial(1000), parallel(1000);
  serial_for(serial.size(), [&](std::size_t i) { serial[i] = splitmix64(i); });
  for (int p : {1, 2, 4, 8}) {
    std::fill(parallel.begin(), parallel.end(), 0);
    parallel_for(parallel.size(), p, [&](std::size_t i) { parallel[i] = splitmix64(i); });
    CHECK(parallel == serial);
  }
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  for (int p : {1, 4}) {
    try {
      parallel_for(100, p, [](std::size_t i) {
        if (i % 30 == 17)
          throw DataError("index " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const DataError &e) {
      CHECK(std::string(e.what()) == "index 17");
    }
  }
}

TEST_CASE("bm25 batch is independent of parallelism") {
  const auto planted = testing::planted_corpus(20);
  const auto index = InvertedIndex::build(Corpus(planted.docs));
  std::vector<std::string> queries;
  for (const auto &inst : planted.instances) {
    queries.push_back(inst.query);
    queries.push_back(inst.query + " " + inst.facets[0]);
  }
  const auto serial = bm25_retrieve_batch(index, queries, 7, {}, 1);
  REQUIRE(serial.size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    CHECK(serial[i] == bm25_retrieve(index, queries[i], 7));
  CHECK(bm25_retrieve_batch(index, queries, 7, {}, 4) == serial);
}

TEST_CASE("batch evaluation is independent of parallelism") {
  SplitMix rng(61);
  const auto words = testing::vocab(10);
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  for (int i = 0; i < 200; ++i)
    pairs.emplace_back(testing::random_facets(rng, words, 5),
                       testing::random_facets(rng, words, 5));
  const HashedBagEmbedder bag;
  std::vector<MetricReport> a(pairs.size()), b(pairs.size());
  serial_for(pairs.size(), [&](std::size_t i) {
    a[i] = evaluate_instance(pairs[i].first, pairs[i].second, bag);
  });
  parallel_for(pairs.size(), 4, [&](std::size_t i) {
    b[i] = evaluate_instance(pairs[i].first, pairs[i].second, bag);
  });
  CHECK(a == b);
}
