#include <doctest.h>

#include "cqkit/errors.hpp"
#include "cqkit/retrieval.hpp"
#include "support.hpp"

using namespace cqkit;

namespace {

EmbeddingTable table_of(const std::vector<std::pair<std::string, std::vector<double>>> &rows) {
  EmbeddingTable t;
  for (const auto &[id, v] : rows)
    t.add(id, v);
  return t;
}

std::vector<std::string> ids_of(const std::vector<ScoredDoc> &docs) {
  std::vector<std::string> out;
  for (const auto &d : docs)
    out.push_back(d.doc_id);
  return out;
}

using Strings = std::vector<std::string>;

} // namespace

TEST_CASE("dense retrieval examples") {
  const auto t = table_of({{"d1", {1, 0}}, {"d2", {0, 1}}});
  const auto top = dense_retrieve(t, std::vector<double>{1, 0}, 1, false);
  REQUIRE(top.size() == 1);
  CHECK(top[0].doc_id == "d1");
  CHECK(top[0].score == 1.0);

  const auto zero = dense_retrieve(t, std::vector<double>{0, 0}, 2, false);
  CHECK(ids_of(zero) == Strings{"d1", "d2"});
  CHECK(zero[0].score == 0.0);
  CHECK(zero[1].score == 0.0);

  const auto collinear = table_of({{"d2", {1, 0}}, {"d1", {2, 0}}});
  const auto cos = dense_retrieve(collinear, std::vector<double>{1, 0}, 2, true);
  CHECK(ids_of(cos) == Strings{"d1", "d2"});
  CHECK(cos[0].score == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cos[1].score == doctest::Approx(1.0).epsilon(1e-15));
  const auto ip = dense_retrieve(collinear, std::vector<double>{1, 0}, 2, false);
  CHECK(ip[0].score == 2.0);

  CHECK_THROWS_AS(dense_retrieve(t, std::vector<double>{1, 0, 0}, 1, false), DataError);
}

TEST_CASE("dense scores: parallel equals serial") {
  SplitMix rng(9);
  EmbeddingTable t(16);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> v(16);
    for (auto &x : v)
      x = static_cast<double>(rng.uniform(2001)) / 1000.0 - 1.0;
    t.add("d" + std::to_string(i), v);
  }
  std::vector<double> q(16, 0.25);
  q[3] = -1;
  for (bool cosine : {false, true}) {
    const auto serial = dense_scores_serial(t, q, cosine);
    for (int p : {1, 2, 4})
      CHECK(dense_scores(t, q, cosine, p) == serial);
  }
  CHECK(dense_retrieve(t, q, 20, true, 1) == dense_retrieve(t, q, 20, true, 4));
}

TEST_CASE("interleave examples") {
  CHECK(interleave_round_robin({{"a", "b"}, {"c", "d"}}, 4) == Strings{"a", "c", "b", "d"});
  CHECK(interleave_round_robin({{"a", "b"}, {"a", "c"}}, 4) == Strings{"a", "b", "c"});
  CHECK(interleave_round_robin({{"a"}, {"b"}, {"c"}}, 2) == Strings{"a", "b"});
  CHECK(interleave_round_robin({{}, {"x"}}, 3) == Strings{"x"});
  CHECK_THROWS_AS(interleave_round_robin({{"a"}}, 0), UsageError);
}

TEST_CASE("interleave is a subsequence merge") {
  SplitMix rng(21);
  const auto words = testing::vocab(8, "");
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Strings> lists(1 + rng.uniform(4));
    for (auto &l : lists) {
      auto pool = words;
      const auto n = rng.uniform(6);
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = rng.uniform(pool.size());
        l.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<long>(j));
      }
    }
    const auto cap = 1 + rng.uniform(10);
    const auto out = interleave_round_robin(lists, cap);
    CHECK(out.size() <= cap);
    CHECK(std::set<std::string>(out.begin(), out.end()).size() == out.size());
    for (std::size_t l = 0; l < lists.size(); ++l) {
      const auto pos = testing::contributed_positions(
          out, lists, l, [](const std::string &x) { return x; });
      CHECK(std::is_sorted(pos.begin(), pos.end()));
    }
  }
}

TEST_CASE("retrieval config parsing") {
  const auto c = RetrievalConfig::from_json(
      json{{"mode", "dense"}, {"alignment", "facet_aligned"}, {"k", 5}, {"mmr_lambda", 0.5}});
  CHECK(c.mode == RetrievalMode::dense);
  CHECK(c.alignment == Alignment::facet_aligned);
  CHECK(c.k == 5);
  CHECK(c.mmr_lambda == std::optional<double>(0.5));
  CHECK(c.candidate_n == 50);
  CHECK(RetrievalConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(RetrievalConfig::from_json(json{{"kk", 1}}), UsageError);
  CHECK_THROWS_AS(RetrievalConfig::from_json(json{{"alignment", "sideways"}}), UsageError);
  RetrievalConfig bad;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.k = 60;
  bad.mmr_lambda = 0.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.k = 5;
  bad.mmr_lambda = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("oracle and closed-book pools") {
  const ClarificationInstance inst{"t", "movie", std::nullopt, {"cast", "quotes"}};
  RetrievalConfig cfg;
  cfg.alignment = Alignment::oracle;
  const auto oracle = PoolBuilder({}, cfg).build(inst);
  REQUIRE(oracle.entries.size() == 2);
  CHECK(oracle.texts() == Strings{"cast", "quotes"});
  CHECK(oracle.entries[0].doc_id == "oracle:1");
  CHECK(oracle.entries[1].provenance == Strings{"F2"});

  cfg.k = 1;
  CHECK(PoolBuilder({}, cfg).build(inst).entries.size() == 1);

  cfg.alignment = Alignment::closed_book;
  CHECK(PoolBuilder({}, cfg).build(inst).entries.empty());
}

TEST_CASE("facet-aligned provenance union") {
  // d1 mentions both the query and the facet, so it tops both sub-queries.
  const Corpus corpus({{"d1", "jaguar jaguar speed"}, {"d2", "jaguar car"}, {"d3", "fast cat"}});
  const auto index = InvertedIndex::build(corpus);
  RetrievalConfig cfg;
  cfg.alignment = Alignment::facet_aligned;
  cfg.k = 3;
  const PoolBuilder builder({&corpus, &index, nullptr, nullptr}, cfg);
  const ClarificationInstance inst{"t", "jaguar", std::nullopt, {"speed"}};

  CHECK(PoolBuilder::sub_queries(inst, Alignment::facet_aligned) ==
        std::vector<std::pair<std::string, std::string>>{{"Q", "jaguar"},
                                                         {"F1", "jaguar speed"}});
  const auto q = bm25_retrieve(index, "jaguar", 3);
  const auto f = bm25_retrieve(index, "jaguar speed", 3);
  REQUIRE(q[0].doc_id == "d1");
  REQUIRE(f[0].doc_id == "d1");

  const auto pool = builder.build(inst);
  REQUIRE(pool.entries.size() == 2);
  CHECK(pool.entries[0].doc_id == "d1");
  CHECK(pool.entries[0].provenance == Strings{"Q", "F1"});
  CHECK(pool.entries[0].text == "jaguar jaguar speed");
  CHECK(pool.entries[1].doc_id == "d2");

  const auto dump = pool.to_json();
  CHECK(dump["instance_id"] == "t");
  CHECK(dump["entries"][0]["provenance"] == json::array({"Q", "F1"}));
  CHECK_FALSE(dump["entries"][0].contains("text"));
  CHECK(dump["config"]["alignment"] == "facet_aligned");
}

TEST_CASE("pool invariants on the planted corpus") {
  const auto planted = testing::planted_corpus(8, 3, 6);
  const Corpus corpus(planted.docs);
  const auto index = InvertedIndex::build(corpus);
  for (auto alignment : {Alignment::query_only, Alignment::facet_aligned}) {
    for (std::size_t k : {1, 4, 10}) {
      for (std::optional<double> lambda : {std::optional<double>{}, std::optional(0.3)}) {
        RetrievalConfig cfg;
        cfg.alignment = alignment;
        cfg.k = k;
        cfg.mmr_lambda = lambda;
        cfg.candidate_n = 12;
        const PoolBuilder builder({&corpus, &index, nullptr, nullptr}, cfg);
        for (const auto &inst : planted.instances) {
          const auto pool = builder.build(inst);
          CHECK(pool.entries.size() <= k);
          std::set<std::string> ids;
          for (const auto &e : pool.entries) {
            CHECK(ids.insert(e.doc_id).second);
            CHECK_FALSE(e.provenance.empty());
            for (const auto &label : e.provenance) {
              const bool ok =
                  label == "Q" || (alignment == Alignment::facet_aligned &&
                                   (label == "F1" || label == "F2" || label == "F3"));
              CHECK(ok);
            }
          }
          CHECK(builder.build(inst).to_json() == pool.to_json());
        }
      }
    }
  }
}

TEST_CASE("dense pools use query embeddings by instance label or text") {
  EmbeddingTable docs(2), queries(2);
  docs.add("a", {1, 0});
  docs.add("b", {0, 1});
  docs.add("c", {0.7, 0.7});
  queries.add("t:Q", {1, 0});
  queries.add("q f", {0, 1});
  RetrievalConfig cfg;
  cfg.mode = RetrievalMode::dense;
  cfg.alignment = Alignment::facet_aligned;
  cfg.k = 2;
  const PoolBuilder builder({nullptr, nullptr, &docs, &queries}, cfg);
  const auto pool = builder.build({"t", "q", std::nullopt, {"f"}});
  REQUIRE(pool.entries.size() == 2);
  CHECK(pool.entries[0].doc_id == "a");
  CHECK(pool.entries[0].provenance == Strings{"Q"});
  CHECK(pool.entries[1].doc_id == "b");
  CHECK(pool.entries[1].provenance == Strings{"F1"});
  CHECK_THROWS_AS(builder.build({"u", "other", std::nullopt, {"g"}}), DataError);
  CHECK_THROWS_AS(PoolBuilder({nullptr, nullptr, &docs, nullptr}, cfg), UsageError);
}
