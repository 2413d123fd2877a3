#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cqkit/corpus.hpp"
#include "cqkit/generator.hpp"
#include "cqkit/metrics.hpp"
#include "cqkit/retrieval.hpp"

namespace cqkit {

/// Per-report bookkeeping of instances left out of the means.
struct SkipLog {
  std::size_t evaluated_count = 0;
  std::size_t skipped_count = 0;
  /// (instance id, reason), in instance order.
  std::vector<std::pair<std::string, std::string>> skip_reasons;

  void skip(const std::string &id, const std::string &reason) {
    ++skipped_count;
    skip_reasons.emplace_back(id, reason);
  }
  json to_json() const;
};

using PoolFn = std::function<EvidencePool(const ClarificationInstance &)>;

// ---------------------------------------------------------------------------

struct AlignmentRow {
  std::string instance_id;
  double term_overlap_recall = 0.0;
  double exact_match_recall = 0.0;
};

struct AlignmentReport {
  double term_overlap_recall = 0.0;
  double exact_match_recall = 0.0;
  std::vector<AlignmentRow> per_instance;
  RetrievalConfig config;
  SkipLog skips;

  json to_json() const;
};

/// Term-overlap recall of the facet words against all pool text, and the
/// share of facets found verbatim (as a contiguous normalized token run)
/// inside a single pool entry. Empty pools score 0.
AlignmentRow alignment_of(const ClarificationInstance &instance,
                          const EvidencePool &pool);

AlignmentReport alignment_stats(const std::vector<ClarificationInstance> &instances,
                                const PoolFn &pools, const RetrievalConfig &config,
                                int parallelism = 0);
AlignmentReport alignment_stats(const std::vector<ClarificationInstance> &instances,
                                const PoolBuilder &builder, int parallelism = 0);

// ---------------------------------------------------------------------------

enum class RecallMetric { term_overlap, exact_match };
std::string to_string(RecallMetric m);
RecallMetric parse_recall_metric(const std::string &s);

struct LooRow {
  std::string instance_id;
  std::size_t chosen_facet_index = 0;
  double recall = 0.0;
  double recall_loo = 0.0;
};

struct LooReport {
  double recall = 0.0;
  double recall_loo = 0.0;
  double delta_pct = 0.0;
  RecallMetric metric_kind = RecallMetric::term_overlap;
  std::vector<LooRow> per_instance;
  std::uint64_t seed = 0;
  SkipLog skips;

  json to_json() const;
};

struct LooOptions {
  std::uint64_t seed = 0;
  RecallMetric metric = RecallMetric::term_overlap;
  std::size_t max_facets = kDefaultMaxFacets;
  /// Remove only entries retrieved solely by the chosen facet's sub-query
  /// instead of every entry it contributed to.
  bool sole_provenance_only = false;
  int parallelism = 0;
};

/// The facet index drawn for an instance under `seed`.
std::size_t loo_facet_choice(std::uint64_t seed, const ClarificationInstance &instance);

/// Recall of a random ground-truth facet with its aligned evidence present,
/// then with the evidence its sub-query retrieved removed.
LooReport loo_faithfulness(const std::vector<ClarificationInstance> &instances,
                           const Generator &generator, const PoolBuilder &builder,
                           const LooOptions &options);

// ---------------------------------------------------------------------------

struct SweepPoint {
  std::size_t n_evidence = 0;
  MetricReport mean;
  SkipLog skips;
};

struct SweepReport {
  std::vector<SweepPoint> points;

  json to_json() const;
  /// Header "n,<metric columns>" then one row per point.
  std::string to_csv() const;
};

struct SweepOptions {
  std::size_t max_facets = kDefaultMaxFacets;
  int parallelism = 0;
};

/// Builds each pool once at depth max(n_values) and evaluates the generator
/// on prefixes of n entries. Throws UsageError unless n_values is strictly
/// increasing and positive.
SweepReport evidence_size_sweep(const std::vector<ClarificationInstance> &instances,
                                const Generator &generator, const PoolBuilder &builder,
                                const std::vector<std::size_t> &n_values,
                                const Embedder &embedder, const SweepOptions &options = {});

// ---------------------------------------------------------------------------

struct TaxonomyReport {
  std::vector<std::pair<std::string, std::size_t>> top_words;
  double biased_fraction = 0.0;
  std::size_t biased_count = 0;
  std::size_t instance_count = 0;

  json to_json() const;
};

/// Most frequent facet words (stopwords excluded) and the share of instances
/// with at least one facet containing one of them.
TaxonomyReport taxonomy_analysis(const std::vector<ClarificationInstance> &instances,
                                 std::size_t top_k = 20);

// ---------------------------------------------------------------------------

struct BootstrapResult {
  double mean_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t instances = 0;
  std::size_t iterations = 0;

  json to_json() const;
};

/// Paired bootstrap of mean(b - a) over shared instance ids with a 95%
/// percentile interval. Throws DataError listing the symmetric difference
/// when the id sets differ.
BootstrapResult paired_bootstrap(const std::map<std::string, double> &a,
                                 const std::map<std::string, double> &b,
                                 std::size_t iterations, std::uint64_t seed);

} // namespace cqkit
