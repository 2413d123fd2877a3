#include <doctest.h>

#include "cqkit/errors.hpp"
#include "cqkit/experiment.hpp"
#include "support.hpp"

using namespace cqkit;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

TEST_CASE("experiment config parsing") {
  const json j{{"corpus", "c.jsonl"},
               {"instances", "/abs/i.jsonl"},
               {"embeddings", nullptr},
               {"retrieval", {{"alignment", "facet_aligned"}, {"k", 3}}},
               {"generator", {{"kind", "extractive"}, {"max_facets", 2}}},
               {"seed", 5}};
  const auto c = ExperimentConfig::from_json(j, "/base");
  CHECK(c.corpus == std::filesystem::path("/base/c.jsonl"));
  CHECK(c.instances == std::filesystem::path("/abs/i.jsonl"));
  CHECK_FALSE(c.embeddings.has_value());
  CHECK(c.retrieval.k == 3);
  CHECK(c.generator.max_facets == 2);
  CHECK(c.seed == 5);
  CHECK(c.hash() == ExperimentConfig::from_json(j, "/base").hash());
  CHECK(c.hash().size() == 16);

  auto changed = j;
  changed["seed"] = 6;
  CHECK(ExperimentConfig::from_json(changed, "/base").hash() != c.hash());

  auto unknown = j;
  unknown["colour"] = "blue";
  CHECK_THROWS_AS(ExperimentConfig::from_json(unknown), UsageError);
  auto no_corpus = j;
  no_corpus.erase("corpus");
  CHECK_THROWS_AS(ExperimentConfig::from_json(no_corpus), UsageError);
  auto remote = j;
  remote["generator"] = {{"kind", "remote"}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(remote), UsageError);
  auto bad_type = j;
  bad_type["seed"] = "five";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_type), UsageError);
}

TEST_CASE("experiments are deterministic across runs and parallelism") {
  TempDir dir;
  const auto cfg = testing::write_planted_experiment(dir.path(), 12, "facet_aligned");
  const ExperimentContext ctx(ExperimentConfig::load(cfg));
  const auto r1 = run_experiment(ctx, 1);
  const auto r2 = run_experiment(ctx, 1);
  const auto r4 = run_experiment(ctx, 4);
  CHECK(r1.to_json().dump() == r2.to_json().dump());
  CHECK(r1.to_json().dump() == r4.to_json().dump());
  CHECK(r1.summary_csv() == r4.summary_csv());
  CHECK(r1.skips.evaluated_count == 12);

  // Stored means equal the per-instance average.
  std::vector<MetricReport> rows;
  for (const auto &r : r1.per_instance)
    rows.push_back(r.metrics);
  const auto mean = metric_values(mean_report(rows));
  const auto stored = metric_values(r1.mean);
  for (std::size_t i = 0; i < mean.size(); ++i)
    CHECK(std::abs(mean[i] - stored[i]) < 1e-12);

  write_experiment_outputs(r1, ctx.config().output_dir);
  CHECK(testing::list_dir(dir / "out") == std::vector<std::string>{"report.json", "summary.csv"});
  const auto csv = read_text(dir / "out" / "summary.csv");
  CHECK(csv.rfind("config_hash,mode,alignment,k,mmr_lambda,generator,evaluated_count,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const auto report = json::parse(read_text(dir / "out" / "report.json"));
  CHECK(report["config_hash"] == r1.config_hash);
  CHECK(report["inputs"].size() == 2);
  CHECK(report["per_instance"].size() == 12);

  const auto em = load_report_metric(dir / "out" / "report.json", "exact_match.f1");
  CHECK(em.size() == 12);
  CHECK(em.at("i0") == r1.per_instance[0].metrics.exact_match.f1);
}

TEST_CASE("oracle evidence with single-facet instances") {
  TempDir dir;
  std::vector<ClarificationInstance> inst{{"a", "shoes", std::nullopt, {"red sneakers"}},
                                          {"b", "leiden", std::nullopt, {"weather"}},
                                          {"c", "python", std::nullopt, {"snake species"}}};
  write_instances(inst, dir / "i.jsonl");
  write_corpus(Corpus(std::vector<Document>{{"d", "unused"}}), dir / "c.jsonl");
  const json cfg{{"corpus", "c.jsonl"},
                 {"instances", "i.jsonl"},
                 {"retrieval", {{"alignment", "oracle"}}},
                 {"generator", {{"kind", "extractive"}, {"max_facets", 1}}}};
  write_text(dir / "cfg.json", cfg.dump());
  const ExperimentContext ctx(ExperimentConfig::load(dir / "cfg.json"));
  const auto r = run_experiment(ctx);
  CHECK(r.mean.exact_match.f1 == doctest::Approx(1.0));
  CHECK(r.mean.term_overlap.f1 == doctest::Approx(1.0));
}

TEST_CASE("experiment startup errors") {
  TempDir dir;
  const json cfg{{"corpus", "missing.jsonl"}, {"instances", "i.jsonl"}, {"output_dir", "out"}};
  write_text(dir / "cfg.json", cfg.dump());
  CHECK_THROWS_AS(ExperimentContext(ExperimentConfig::load(dir / "cfg.json")), IoError);
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
  write_text(dir / "broken.json", "{");
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "broken.json"), UsageError);
}

TEST_CASE("generator failures are recorded as skips") {
  TempDir dir;
  testing::write_planted_experiment(dir.path(), 3, "closed_book");
  const auto ctx = ExperimentContext(ExperimentConfig::load(dir / "config.json"));
  const auto r = run_experiment(ctx);
  CHECK(r.skips.skipped_count == 3);
  CHECK(r.skips.evaluated_count == 0);
  CHECK(r.per_instance.empty());
  CHECK(r.to_json()["skips"]["skip_reasons"][0]["reason"] == "generator: no evidence");
}

TEST_CASE("atomic files") {
  TempDir dir;
  {
    AtomicFile f(dir / "sub" / "x.txt");
    f.stream() << "partial";
  }
  CHECK(testing::list_dir(dir / "sub").empty());
  {
    AtomicFile f(dir / "sub" / "x.txt");
    f.stream() << "done";
    f.commit();
  }
  CHECK(read_text(dir / "sub" / "x.txt") == "done");
  CHECK(testing::list_dir(dir / "sub") == std::vector<std::string>{"x.txt"});
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}
