#include "cqkit/cli.hpp"

#include <CLI11.hpp>
#include <sstream>

#include "cqkit/errors.hpp"
#include "cqkit/experiment.hpp"
#include "cqkit/jsonl.hpp"
#include "cqkit/parallel.hpp"

namespace cqkit {

namespace {

// Flags that override experiment-config keys of the same name.
struct Overrides {
  std::string corpus, instances, embeddings, query_embeddings, facet_embeddings;
  std::string mode, alignment, output_dir, generator, endpoint;
  std::size_t k = 0, candidate_n = 0, max_facets = 0;
  double mmr_lambda = 0.0, bm25_k1 = 0.0, bm25_b = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option *> opts;

  void attach(CLI::App *app, bool with_instances = true, bool with_seed = true) {
    opts["corpus"] = app->add_option("--corpus", corpus, "Override config corpus path");
    if (with_instances)
      opts["instances"] = app->add_option("--instances", instances, "Override config instances path");
    opts["embeddings"] = app->add_option("--embeddings", embeddings, "Override document embeddings path");
    opts["query_embeddings"] = app->add_option("--query-embeddings", query_embeddings);
    opts["facet_embeddings"] = app->add_option("--facet-embeddings", facet_embeddings);
    opts["mode"] = app->add_option("--mode", mode, "lexical | dense");
    opts["alignment"] = app->add_option("--alignment", alignment,
                                        "query_only | facet_aligned | oracle | closed_book");
    opts["k"] = app->add_option("--k", k, "Pool size");
    opts["candidate_n"] = app->add_option("--candidate-n", candidate_n, "MMR candidate count");
    opts["mmr_lambda"] = app->add_option("--mmr-lambda", mmr_lambda, "Enable MMR with this lambda");
    opts["bm25_k1"] = app->add_option("--bm25-k1", bm25_k1);
    opts["bm25_b"] = app->add_option("--bm25-b", bm25_b);
    opts["generator"] = app->add_option("--generator", generator, "extractive | remote");
    opts["endpoint"] = app->add_option("--endpoint", endpoint, "Remote generator URL");
    opts["max_facets"] = app->add_option("--max-facets", max_facets);
    opts["output_dir"] = app->add_option("--output-dir", output_dir);
    if (with_seed)
      opts["seed"] = app->add_option("--seed", seed, "Override config seed");
  }

  bool set(const std::string &key) const {
    auto it = opts.find(key);
    return it != opts.end() && it->second->count() > 0;
  }

  ExperimentConfig load(const std::string &config_path) const {
    auto c = ExperimentConfig::load(config_path);
    if (set("corpus")) c.corpus = corpus;
    if (set("instances")) c.instances = instances;
    if (set("embeddings")) c.embeddings = embeddings;
    if (set("query_embeddings")) c.query_embeddings = query_embeddings;
    if (set("facet_embeddings")) c.facet_embeddings = facet_embeddings;
    if (set("mode")) c.retrieval.mode = parse_mode(mode);
    if (set("alignment")) c.retrieval.alignment = parse_alignment(alignment);
    if (set("k")) c.retrieval.k = k;
    if (set("candidate_n")) c.retrieval.candidate_n = candidate_n;
    if (set("mmr_lambda")) c.retrieval.mmr_lambda = mmr_lambda;
    if (set("bm25_k1")) c.retrieval.bm25_k1 = bm25_k1;
    if (set("bm25_b")) c.retrieval.bm25_b = bm25_b;
    if (set("generator")) c.generator.kind = generator;
    if (set("endpoint")) c.generator.endpoint = endpoint;
    if (set("max_facets")) c.generator.max_facets = max_facets;
    if (set("output_dir")) c.output_dir = output_dir;
    if (set("seed")) c.seed = seed;
    c.retrieval.validate();
    if (c.generator.kind != "extractive" && c.generator.kind != "remote")
      throw UsageError("generator kind must be \"extractive\" or \"remote\"");
    if (c.generator.kind == "remote" && !c.generator.endpoint)
      throw UsageError("remote generator needs an endpoint");
    if (c.generator.max_facets == 0)
      throw UsageError("max_facets must be at least 1");
    return c;
  }
};

std::filesystem::path csv_sibling(const std::filesystem::path &p) {
  auto out = p;
  out.replace_extension(".csv");
  if (out == p)
    out += ".csv";
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string &list) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(item, &pos);
      if (pos != item.size())
        throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception &) {
      throw UsageError("--n expects comma-separated integers, got \"" + list + "\"");
    }
  }
  return out;
}

std::string metrics_csv_row(const std::string &id, const MetricReport &r) {
  std::string row = id;
  for (double v : metric_values(r))
    row += "," + format_double(v);
  return row + "\n";
}

// Streams the truth file, evaluating in parallel chunks and writing results
// in input order.
json cmd_evaluate(const std::string &generated_path, const std::string &truth_path,
                  const std::string &embeddings_path, const std::string &out_path,
                  int parallelism) {
  std::unique_ptr<Embedder> embedder;
  if (!embeddings_path.empty())
    embedder = std::make_unique<TableEmbedder>(
        std::make_shared<const EmbeddingTable>(load_embeddings(embeddings_path)));
  else
    embedder = std::make_unique<HashedBagEmbedder>();

  std::unordered_map<std::string, std::vector<std::string>> generated;
  for_each_json_line(generated_path, [&](const json &obj, std::size_t line) {
    const auto where = generated_path + ":" + std::to_string(line) + ": ";
    if (!obj.contains("id") || !obj["id"].is_string())
      throw DataError(where + "missing string field \"id\"");
    if (!obj.contains("facets") || !obj["facets"].is_array())
      throw DataError(where + "missing array field \"facets\"");
    std::vector<std::string> facets;
    for (const auto &f : obj["facets"]) {
      if (!f.is_string())
        throw DataError(where + "facets must be strings");
      facets.push_back(f.get<std::string>());
    }
    if (!generated.emplace(obj["id"].get<std::string>(), std::move(facets)).second)
      throw DataError(where + "duplicate id \"" + obj["id"].get<std::string>() + "\"");
  });

  AtomicFile out(out_path);
  AtomicFile csv(csv_sibling(out_path));
  csv.stream() << "id";
  for (const auto &c : metric_columns())
    csv.stream() << ',' << c;
  csv.stream() << '\n';

  std::vector<MetricReport> all;
  std::vector<ClarificationInstance> chunk;
  auto flush = [&] {
    std::vector<MetricReport> reports(chunk.size());
    parallel_for(chunk.size(), parallelism, [&](std::size_t i) {
      reports[i] = evaluate_instance(generated.at(chunk[i].id), chunk[i].facets, *embedder);
    });
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      out.stream() << json{{"id", chunk[i].id}, {"metrics", to_json(reports[i])}}.dump()
                   << '\n';
      csv.stream() << metrics_csv_row(chunk[i].id, reports[i]);
      all.push_back(reports[i]);
    }
    chunk.clear();
  };
  for_each_json_line(truth_path, [&](const json &obj, std::size_t line) {
    auto inst = parse_instance(obj, truth_path, line);
    auto it = generated.find(inst.id);
    if (it == generated.end())
      throw DataError("instance \"" + inst.id + "\" has no generated facets in " +
                      generated_path);
    if (it->second.empty())
      throw DataError("instance \"" + inst.id + "\" has an empty generated facet list");
    chunk.push_back(std::move(inst));
    if (chunk.size() == 256)
      flush();
  });
  flush();
  const auto mean = mean_report(all);
  const json summary{{"mean", to_json(mean)}, {"evaluated_count", all.size()}};
  out.stream() << summary.dump() << '\n';
  csv.stream() << metrics_csv_row("mean", mean);
  out.commit();
  csv.commit();
  return summary;
}

void write_json(const std::string &path, const json &j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

int report_error(std::ostream &err, int code, const std::string &what) {
  err << "error: " << what << '\n';
  return code;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Evidence pools, facet generation and evaluation for clarifying questions",
               "cqkit"};
  app.require_subcommand(1);
  bool as_json = false;
  int parallelism = 0;
  app.add_flag("--json", as_json, "Print a machine-readable JSON summary");
  app.add_option("--parallelism", parallelism, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);

  std::string corpus_path, out_path, index_path, query, config_path, instances_path;
  std::string generated_path, truth_path, embeddings_path, metric, sizes, a_path, b_path;
  std::size_t k = 10, top_k = 20, iters = 1000;
  double k1 = 0.9, b = 0.4;
  std::uint64_t seed = 0;
  std::string loo_metric = "term_overlap";
  bool sole = false;

  auto *index_cmd = app.add_subcommand("index", "Build an inverted index");
  index_cmd->add_option("--corpus", corpus_path)->required();
  index_cmd->add_option("--out", out_path, "Index directory")->required();

  auto *retrieve_cmd = app.add_subcommand("retrieve", "BM25 search over an index");
  retrieve_cmd->add_option("--index", index_path)->required();
  retrieve_cmd->add_option("--query", query)->required();
  retrieve_cmd->add_option("--k", k)->required()->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--k1", k1);
  retrieve_cmd->add_option("--b", b);

  Overrides pool_ov, align_ov, loo_ov, sweep_ov, exp_ov;
  auto *pool_cmd = app.add_subcommand("pool", "Build and dump evidence pools");
  pool_cmd->add_option("--config", config_path)->required();
  pool_cmd->add_option("--instances", instances_path)->required();
  pool_cmd->add_option("--out", out_path)->required();
  pool_ov.attach(pool_cmd, false);

  auto *eval_cmd = app.add_subcommand("evaluate", "Score generated facets against truth");
  eval_cmd->add_option("--generated", generated_path)->required();
  eval_cmd->add_option("--truth", truth_path)->required();
  eval_cmd->add_option("--embeddings", embeddings_path, "Facet embeddings for Set-Sim");
  eval_cmd->add_option("--out", out_path)->required();

  auto *align_cmd = app.add_subcommand("align-stats", "Evidence/facet alignment statistics");
  align_cmd->add_option("--config", config_path)->required();
  align_cmd->add_option("--out", out_path)->required();
  align_ov.attach(align_cmd);

  auto *loo_cmd = app.add_subcommand("loo", "Leave-one-out faithfulness");
  loo_cmd->add_option("--config", config_path)->required();
  loo_cmd->add_option("--out", out_path)->required();
  loo_cmd->add_option("--metric", loo_metric)
      ->check(CLI::IsMember({"term_overlap", "exact_match"}));
  loo_cmd->add_flag("--sole-provenance", sole,
                    "Drop only documents retrieved by the chosen facet alone");
  loo_ov.attach(loo_cmd);
  loo_ov.opts["seed"]->required();

  auto *sweep_cmd = app.add_subcommand("sweep", "Evidence-size sweep");
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--n", sizes, "Comma-separated evidence sizes")->required();
  sweep_cmd->add_option("--out", out_path)->required();
  sweep_ov.attach(sweep_cmd);

  auto *tax_cmd = app.add_subcommand("taxonomy", "Frequent facet words and dataset bias");
  tax_cmd->add_option("--instances", instances_path)->required();
  tax_cmd->add_option("--top-k", top_k)->check(CLI::PositiveNumber);
  tax_cmd->add_option("--out", out_path)->required();

  auto *exp_cmd = app.add_subcommand("experiment", "Run a full experiment");
  exp_cmd->add_option("--config", config_path)->required();
  exp_ov.attach(exp_cmd);

  auto *boot_cmd = app.add_subcommand("bootstrap", "Paired bootstrap between two reports");
  boot_cmd->add_option("--a", a_path)->required();
  boot_cmd->add_option("--b", b_path)->required();
  boot_cmd->add_option("--metric", metric)->required();
  boot_cmd->add_option("--iters", iters)->required()->check(CLI::PositiveNumber);
  boot_cmd->add_option("--seed", seed)->required();

  std::vector<char *> argv;
  std::vector<std::string> storage(args);
  if (storage.empty())
    storage.push_back("cqkit");
  for (auto &s : storage)
    argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto *failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return kExitUsage;
  }

  if (parallelism == 0)
    parallelism = default_parallelism();
  auto emit = [&](const std::string &line, const json &j) {
    if (as_json)
      out << j.dump() << '\n';
    else
      out << line << '\n';
  };

  try {
    if (*index_cmd) {
      const auto corpus = load_corpus(corpus_path);
      const auto index = InvertedIndex::build(corpus);
      index.save(out_path);
      emit("indexed " + std::to_string(index.doc_count()) + " documents, " +
               std::to_string(index.term_count()) + " terms -> " + out_path,
           {{"documents", index.doc_count()}, {"terms", index.term_count()}, {"out", out_path}});
    } else if (*retrieve_cmd) {
      const auto index = InvertedIndex::load(index_path);
      const auto hits = bm25_retrieve(index, query, k, {k1, b});
      json list = json::array();
      for (const auto &h : hits)
        list.push_back({{"rank", h.rank}, {"doc_id", h.doc_id}, {"score", h.score}});
      if (as_json) {
        out << json{{"query", query}, {"results", list}}.dump() << '\n';
      } else {
        for (const auto &h : hits)
          out << h.rank << '\t' << h.doc_id << '\t' << format_double(h.score) << '\n';
        out << hits.size() << " results\n";
      }
    } else if (*pool_cmd) {
      auto config = pool_ov.load(config_path);
      config.instances = instances_path;
      const ExperimentContext ctx(config);
      const auto &instances = ctx.instances();
      std::vector<EvidencePool> pools(instances.size());
      parallel_for(instances.size(), parallelism, [&](std::size_t i) {
        pools[i] = ctx.pool_builder().build(instances[i]);
      });
      AtomicFile file(out_path);
      std::size_t entries = 0;
      for (const auto &p : pools) {
        file.stream() << p.to_json().dump() << '\n';
        entries += p.entries.size();
      }
      file.commit();
      emit("wrote " + std::to_string(pools.size()) + " pools (" + std::to_string(entries) +
               " entries) -> " + out_path,
           {{"pools", pools.size()}, {"entries", entries}, {"out", out_path}});
    } else if (*eval_cmd) {
      const auto summary =
          cmd_evaluate(generated_path, truth_path, embeddings_path, out_path, parallelism);
      const auto &m = summary["mean"];
      emit("evaluated " + std::to_string(summary["evaluated_count"].get<std::size_t>()) +
               " instances; exact_match.f1=" +
               format_double(m["exact_match"]["f1"].get<double>()) + " -> " + out_path,
           summary);
    } else if (*align_cmd) {
      const ExperimentContext ctx(align_ov.load(config_path));
      const auto report = alignment_stats(ctx.instances(), ctx.pool_builder(), parallelism);
      const auto j = report.to_json();
      write_json(out_path, j);
      emit("term_overlap_recall=" + format_double(report.term_overlap_recall) +
               " exact_match_recall=" + format_double(report.exact_match_recall) +
               " skipped=" + std::to_string(report.skips.skipped_count),
           {{"term_overlap_recall", report.term_overlap_recall},
            {"exact_match_recall", report.exact_match_recall},
            {"skipped_count", report.skips.skipped_count},
            {"out", out_path}});
    } else if (*loo_cmd) {
      const ExperimentContext ctx(loo_ov.load(config_path));
      LooOptions opts;
      opts.seed = ctx.config().seed;
      opts.metric = parse_recall_metric(loo_metric);
      opts.max_facets = ctx.config().generator.max_facets;
      opts.sole_provenance_only = sole;
      opts.parallelism = parallelism;
      const auto report =
          loo_faithfulness(ctx.instances(), ctx.generator(), ctx.pool_builder(), opts);
      write_json(out_path, report.to_json());
      emit("recall=" + format_double(report.recall) + " recall_loo=" +
               format_double(report.recall_loo) + " delta_pct=" +
               format_double(report.delta_pct) +
               " skipped=" + std::to_string(report.skips.skipped_count),
           {{"recall", report.recall},
            {"recall_loo", report.recall_loo},
            {"delta_pct", report.delta_pct},
            {"skipped_count", report.skips.skipped_count},
            {"out", out_path}});
    } else if (*sweep_cmd) {
      const auto n_values = parse_sizes(sizes);
      const ExperimentContext ctx(sweep_ov.load(config_path));
      SweepOptions opts;
      opts.max_facets = ctx.config().generator.max_facets;
      opts.parallelism = parallelism;
      const auto report = evidence_size_sweep(ctx.instances(), ctx.generator(),
                                              ctx.pool_builder(), n_values, ctx.embedder(),
                                              opts);
      AtomicFile json_file(out_path);
      AtomicFile csv_file(csv_sibling(out_path));
      json_file.stream() << report.to_json().dump(2) << '\n';
      csv_file.stream() << report.to_csv();
      json_file.commit();
      csv_file.commit();
      emit("swept " + std::to_string(report.points.size()) + " evidence sizes -> " + out_path,
           {{"points", report.points.size()}, {"out", out_path}});
    } else if (*tax_cmd) {
      const auto report = taxonomy_analysis(load_instances(instances_path), top_k);
      write_json(out_path, report.to_json());
      emit("biased_fraction=" + format_double(report.biased_fraction) + " (" +
               std::to_string(report.biased_count) + "/" +
               std::to_string(report.instance_count) + ")",
           report.to_json());
    } else if (*exp_cmd) {
      const ExperimentContext ctx(exp_ov.load(config_path));
      const auto report = run_experiment(ctx, parallelism);
      write_experiment_outputs(report, ctx.config().output_dir);
      emit("config " + report.config_hash + ": evaluated " +
               std::to_string(report.skips.evaluated_count) + ", skipped " +
               std::to_string(report.skips.skipped_count) + ", exact_match.f1=" +
               format_double(report.mean.exact_match.f1) + " -> " +
               ctx.config().output_dir.string(),
           {{"config_hash", report.config_hash},
            {"evaluated_count", report.skips.evaluated_count},
            {"skipped_count", report.skips.skipped_count},
            {"mean", to_json(report.mean)},
            {"output_dir", ctx.config().output_dir.string()}});
    } else if (*boot_cmd) {
      const auto a = load_report_metric(a_path, metric);
      const auto bb = load_report_metric(b_path, metric);
      const auto r = paired_bootstrap(a, bb, iters, seed);
      emit("mean_diff=" + format_double(r.mean_diff) + " ci95=[" + format_double(r.ci_low) +
               ", " + format_double(r.ci_high) + "] n=" + std::to_string(r.instances),
           r.to_json());
    }
  } catch (const UsageError &e) {
    return report_error(err, kExitUsage, e.what());
  } catch (const DataError &e) {
    return report_error(err, kExitData, e.what());
  } catch (const json::exception &e) {
    return report_error(err, kExitData, e.what());
  } catch (const GeneratorError &e) {
    return report_error(err, kExitGeneratorOrIo, e.what());
  } catch (const IoError &e) {
    return report_error(err, kExitGeneratorOrIo, e.what());
  } catch (const std::exception &e) {
    return report_error(err, kExitGeneratorOrIo, e.what());
  }
  return kExitOk;
}

} // namespace cqkit
