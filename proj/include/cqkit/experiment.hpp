#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cqkit/corpus.hpp"
#include "cqkit/generator.hpp"
#include "cqkit/harness.hpp"
#include "cqkit/index.hpp"
#include "cqkit/metrics.hpp"
#include "cqkit/retrieval.hpp"

namespace cqkit {

struct GeneratorSpec {
  std::string kind = "extractive"; // "extractive" | "remote"
  std::optional<std::string> endpoint;
  std::size_t max_facets = kDefaultMaxFacets;
  bool emit_question = false;
  std::chrono::milliseconds timeout{30000};
};

/// Experiment configuration file. Relative paths resolve against the
/// directory holding the config file.
struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path instances;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> query_embeddings;
  std::optional<std::filesystem::path> facet_embeddings;
  RetrievalConfig retrieval;
  GeneratorSpec generator;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  /// Throws UsageError on unknown keys or invalid values.
  static ExperimentConfig from_json(const json &j,
                                    const std::filesystem::path &base_dir = {});
  static ExperimentConfig load(const std::filesystem::path &path);
  json to_json() const;
  /// FNV-1a over the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

/// Loaded inputs for one configuration. Everything is immutable after
/// construction and shared read-only across workers.
class ExperimentContext {
public:
  /// Fails fast (IoError / DataError / UsageError) on missing or malformed
  /// inputs.
  explicit ExperimentContext(ExperimentConfig config);

  const ExperimentConfig &config() const { return config_; }
  const Corpus &corpus() const { return *corpus_; }
  const std::vector<ClarificationInstance> &instances() const { return instances_; }
  const PoolBuilder &pool_builder() const { return *builder_; }
  const Generator &generator() const { return *generator_; }
  const Embedder &embedder() const { return *embedder_; }
  /// Input file path -> content hash, for provenance records.
  const std::map<std::string, std::string> &input_hashes() const { return input_hashes_; }

private:
  ExperimentConfig config_;
  std::unique_ptr<Corpus> corpus_;
  std::vector<ClarificationInstance> instances_;
  std::unique_ptr<InvertedIndex> index_;
  std::unique_ptr<EmbeddingTable> doc_table_;
  std::unique_ptr<EmbeddingTable> query_table_;
  std::unique_ptr<PoolBuilder> builder_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Embedder> embedder_;
  std::map<std::string, std::string> input_hashes_;
};

struct InstanceResult {
  std::string id;
  std::optional<std::string> question;
  std::vector<std::string> generated;
  std::vector<std::string> pool_doc_ids;
  MetricReport metrics;
};

struct ExperimentReport {
  json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::vector<InstanceResult> per_instance;
  MetricReport mean;
  SkipLog skips;

  json to_json() const;
  std::string summary_csv() const;
};

/// Builds pools, generates and evaluates every instance. Per-instance
/// failures are recorded in the skip log; results are identical for any
/// parallelism.
ExperimentReport run_experiment(const ExperimentContext &context, int parallelism = 0);

/// Writes report.json and summary.csv into the configured output directory.
void write_experiment_outputs(const ExperimentReport &report,
                              const std::filesystem::path &output_dir);

/// Per-instance values of one metric from a report.json file.
std::map<std::string, double> load_report_metric(const std::filesystem::path &path,
                                                 const std::string &metric);

std::string hash_file(const std::filesystem::path &path);
std::string hex64(std::uint64_t v);

} // namespace cqkit
