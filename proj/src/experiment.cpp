#include "cqkit/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cqkit/errors.hpp"
#include "cqkit/parallel.hpp"
#include "cqkit/rng.hpp"

namespace cqkit {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hash_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path resolve(const std::filesystem::path &base,
                              const std::string &p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty())
    return base / path;
  return path;
}

GeneratorSpec generator_from_json(const json &j) {
  GeneratorSpec g;
  if (!j.is_object())
    throw UsageError("\"generator\" must be an object");
  for (const auto &[key, value] : j.items()) {
    if (key == "kind")
      g.kind = value.get<std::string>();
    else if (key == "endpoint")
      g.endpoint = value.is_null() ? std::nullopt
                                   : std::optional(value.get<std::string>());
    else if (key == "max_facets")
      g.max_facets = value.get<std::size_t>();
    else if (key == "emit_question")
      g.emit_question = value.get<bool>();
    else if (key == "timeout_ms")
      g.timeout = std::chrono::milliseconds(value.get<long long>());
    else
      throw UsageError("unknown generator key \"" + key + "\"");
  }
  if (g.kind != "extractive" && g.kind != "remote")
    throw UsageError("generator kind must be \"extractive\" or \"remote\"");
  if (g.kind == "remote" && !g.endpoint)
    throw UsageError("remote generator needs an endpoint");
  if (g.max_facets == 0)
    throw UsageError("max_facets must be at least 1");
  return g;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json &j,
                                             const std::filesystem::path &base_dir) {
  if (!j.is_object())
    throw UsageError("experiment config must be a JSON object");
  ExperimentConfig c;
  bool have_corpus = false, have_instances = false;
  try {
    for (const auto &[key, value] : j.items()) {
      auto opt_path = [&]() -> std::optional<std::filesystem::path> {
        if (value.is_null())
          return std::nullopt;
        return resolve(base_dir, value.get<std::string>());
      };
      if (key == "corpus") {
        c.corpus = resolve(base_dir, value.get<std::string>());
        have_corpus = true;
      } else if (key == "instances") {
        c.instances = resolve(base_dir, value.get<std::string>());
        have_instances = true;
      } else if (key == "embeddings") {
        c.embeddings = opt_path();
      } else if (key == "query_embeddings") {
        c.query_embeddings = opt_path();
      } else if (key == "facet_embeddings") {
        c.facet_embeddings = opt_path();
      } else if (key == "retrieval") {
        c.retrieval = RetrievalConfig::from_json(value);
      } else if (key == "generator") {
        c.generator = generator_from_json(value);
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "output_dir") {
        c.output_dir = resolve(base_dir, value.get<std::string>());
      } else {
        throw UsageError("unknown config key \"" + key + "\"");
      }
    }
  } catch (const json::exception &e) {
    throw UsageError(std::string("bad experiment config: ") + e.what());
  }
  if (!have_corpus || !have_instances)
    throw UsageError("experiment config needs \"corpus\" and \"instances\"");
  c.retrieval.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const DataError &e) {
    throw UsageError(e.what());
  } catch (const IoError &e) {
    throw UsageError(e.what());
  }
  return from_json(j, path.parent_path());
}

json ExperimentConfig::to_json() const {
  auto opt = [](const std::optional<std::filesystem::path> &p) {
    return p ? json(p->string()) : json(nullptr);
  };
  return json{
      {"corpus", corpus.string()},
      {"instances", instances.string()},
      {"embeddings", opt(embeddings)},
      {"query_embeddings", opt(query_embeddings)},
      {"facet_embeddings", opt(facet_embeddings)},
      {"retrieval", retrieval.to_json()},
      {"generator",
       {{"kind", generator.kind},
        {"endpoint", generator.endpoint ? json(*generator.endpoint) : json(nullptr)},
        {"max_facets", generator.max_facets},
        {"emit_question", generator.emit_question},
        {"timeout_ms", generator.timeout.count()}}},
      {"seed", seed},
      {"output_dir", output_dir.string()}};
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

// ---------------------------------------------------------------------------

ExperimentContext::ExperimentContext(ExperimentConfig config)
    : config_(std::move(config)) {
  auto record = [&](const std::filesystem::path &p) {
    input_hashes_[p.string()] = hash_file(p);
  };
  record(config_.corpus);
  record(config_.instances);
  corpus_ = std::make_unique<Corpus>(load_corpus(config_.corpus));
  instances_ = load_instances(config_.instances);

  PoolSources sources;
  sources.corpus = corpus_.get();
  const auto &rc = config_.retrieval;
  const bool retrieves =
      rc.alignment == Alignment::query_only || rc.alignment == Alignment::facet_aligned;
  if (retrieves && rc.mode == RetrievalMode::lexical) {
    index_ = std::make_unique<InvertedIndex>(InvertedIndex::build(*corpus_));
    sources.index = index_.get();
  }
  if (config_.embeddings) {
    record(*config_.embeddings);
    doc_table_ = std::make_unique<EmbeddingTable>(load_embeddings(*config_.embeddings));
    sources.doc_embeddings = doc_table_.get();
  }
  if (config_.query_embeddings) {
    record(*config_.query_embeddings);
    query_table_ =
        std::make_unique<EmbeddingTable>(load_embeddings(*config_.query_embeddings));
    sources.query_embeddings = query_table_.get();
  }
  builder_ = std::make_unique<PoolBuilder>(sources, rc);

  if (config_.generator.kind == "remote")
    generator_ = std::make_unique<RemoteGenerator>(*config_.generator.endpoint,
                                                   config_.generator.timeout);
  else
    generator_ = std::make_unique<ExtractiveGenerator>();

  if (config_.facet_embeddings) {
    record(*config_.facet_embeddings);
    embedder_ = std::make_unique<TableEmbedder>(std::make_shared<const EmbeddingTable>(
        load_embeddings(*config_.facet_embeddings)));
  } else {
    embedder_ = std::make_unique<HashedBagEmbedder>();
  }
}

// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentContext &context, int parallelism) {
  const auto &instances = context.instances();
  const auto &spec = context.config().generator;
  struct Slot {
    std::optional<InstanceResult> result;
    std::string error;
  };
  std::vector<Slot> slots(instances.size());
  parallel_for(instances.size(), parallelism, [&](std::size_t i) {
    const auto &inst = instances[i];
    try {
      const auto pool = context.pool_builder().build(inst);
      GeneratorRequest request{inst.query, pool.texts(), spec.max_facets,
                               spec.emit_question};
      auto generated = context.generator().generate(request);
      InstanceResult r;
      r.id = inst.id;
      r.question = generated.question;
      r.generated = std::move(generated.facets);
      for (const auto &e : pool.entries)
        r.pool_doc_ids.push_back(e.doc_id);
      r.metrics = evaluate_instance(r.generated, inst.facets, context.embedder());
      slots[i].result = std::move(r);
    } catch (const GeneratorError &e) {
      slots[i].error = std::string("generator: ") + e.what();
    } catch (const DataError &e) {
      slots[i].error = e.what();
    }
  });

  ExperimentReport report;
  report.config = context.config().to_json();
  report.config_hash = context.config().hash();
  report.seed = context.config().seed;
  report.inputs = context.input_hashes();
  std::vector<MetricReport> metrics;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!slots[i].result) {
      report.skips.skip(instances[i].id, slots[i].error);
      continue;
    }
    metrics.push_back(slots[i].result->metrics);
    report.per_instance.push_back(std::move(*slots[i].result));
    ++report.skips.evaluated_count;
  }
  report.mean = mean_report(metrics);
  return report;
}

json ExperimentReport::to_json() const {
  json rows = json::array();
  for (const auto &r : per_instance)
    rows.push_back({{"id", r.id},
                    {"question", r.question ? json(*r.question) : json(nullptr)},
                    {"generated", r.generated},
                    {"pool", r.pool_doc_ids},
                    {"metrics", cqkit::to_json(r.metrics)}});
  return json{{"config", config},
              {"config_hash", config_hash},
              {"seed", seed},
              {"inputs", inputs},
              {"mean", cqkit::to_json(mean)},
              {"skips", skips.to_json()},
              {"per_instance", std::move(rows)}};
}

std::string ExperimentReport::summary_csv() const {
  std::ostringstream out;
  out << "config_hash,mode,alignment,k,mmr_lambda,generator,evaluated_count,skipped_count";
  for (const auto &c : metric_columns())
    out << ',' << c;
  out << '\n';
  const auto &r = config.at("retrieval");
  out << config_hash << ',' << r.at("mode").get<std::string>() << ','
      << r.at("alignment").get<std::string>() << ',' << r.at("k").get<std::size_t>()
      << ',' << (r.at("mmr_lambda").is_null() ? "" : format_double(r.at("mmr_lambda").get<double>()))
      << ',' << config.at("generator").at("kind").get<std::string>() << ','
      << skips.evaluated_count << ',' << skips.skipped_count;
  for (double v : metric_values(mean))
    out << ',' << format_double(v);
  out << '\n';
  return out.str();
}

void write_experiment_outputs(const ExperimentReport &report,
                              const std::filesystem::path &output_dir) {
  // Both files are staged before either is renamed into place.
  AtomicFile json_file(output_dir / "report.json");
  AtomicFile csv_file(output_dir / "summary.csv");
  json_file.stream() << report.to_json().dump(2) << '\n';
  csv_file.stream() << report.summary_csv();
  json_file.commit();
  csv_file.commit();
}

std::map<std::string, double> load_report_metric(const std::filesystem::path &path,
                                                 const std::string &metric) {
  const json root = read_json_file(path);
  std::map<std::string, double> out;
  try {
    for (const auto &row : root.at("per_instance")) {
      const auto id = row.at("id").get<std::string>();
      const auto report = metric_report_from_json(row.at("metrics"));
      if (!out.emplace(id, metric_value(report, metric)).second)
        throw DataError(path.string() + ": duplicate instance id \"" + id + "\"");
    }
  } catch (const json::exception &e) {
    throw DataError(path.string() + ": malformed report: " + e.what());
  }
  return out;
}

} // namespace cqkit
