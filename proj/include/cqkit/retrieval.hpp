#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cqkit/corpus.hpp"
#include "cqkit/index.hpp"
#include "cqkit/jsonl.hpp"

namespace cqkit {

// ---------------------------------------------------------------------------
// Dense retrieval
// ---------------------------------------------------------------------------

/// Inner product (or cosine when `cosine`) of `query` against every row of
/// `table`. Zero-norm rows or queries score 0 under cosine.
std::vector<double> dense_scores(const EmbeddingTable &table,
                                 std::span<const double> query, bool cosine,
                                 int parallelism = 0);

/// Single-threaded reference for dense_scores.
std::vector<double> dense_scores_serial(const EmbeddingTable &table,
                                        std::span<const double> query,
                                        bool cosine);

/// Exact top-k scan; ties go to the smaller id. Throws DataError when the
/// query dimension differs from the table's.
std::vector<ScoredDoc> dense_retrieve(const EmbeddingTable &table,
                                      std::span<const double> query_vector,
                                      std::size_t k, bool normalize_vectors,
                                      int parallelism = 1);

double cosine(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Round-robin interleaving
// ---------------------------------------------------------------------------

/// Takes item 1 of every list in list order, then item 2 of every list, and
/// so on. An item whose key was already emitted is skipped; its slot is not
/// back-filled from deeper in the same list. Stops after `max_items` items or
/// when all lists are exhausted.
template <class T, class KeyFn>
std::vector<T> interleave_round_robin(const std::vector<std::vector<T>> &lists,
                                      std::size_t max_items, KeyFn key) {
  std::vector<T> out;
  if (max_items == 0)
    return out;
  std::unordered_set<std::string> seen;
  std::size_t depth = 0;
  bool any = true;
  while (any && out.size() < max_items) {
    any = false;
    for (const auto &list : lists) {
      if (depth >= list.size())
        continue;
      any = true;
      const T &item = list[depth];
      if (seen.insert(std::string(key(item))).second) {
        out.push_back(item);
        if (out.size() == max_items)
          break;
      }
    }
    ++depth;
  }
  return out;
}

/// Interleaves plain strings, deduplicating on exact equality.
/// Throws UsageError when max_items is 0.
std::vector<std::string>
interleave_round_robin(const std::vector<std::vector<std::string>> &lists,
                       std::size_t max_items);

// ---------------------------------------------------------------------------
// Evidence pools
// ---------------------------------------------------------------------------

enum class RetrievalMode { lexical, dense };
enum class Alignment { query_only, facet_aligned, oracle, closed_book };

std::string to_string(RetrievalMode mode);
std::string to_string(Alignment alignment);
RetrievalMode parse_mode(const std::string &s);
Alignment parse_alignment(const std::string &s);

struct RetrievalConfig {
  RetrievalMode mode = RetrievalMode::lexical;
  Alignment alignment = Alignment::query_only;
  std::size_t k = 10;
  std::size_t candidate_n = 50;
  std::optional<double> mmr_lambda;
  double bm25_k1 = 0.9;
  double bm25_b = 0.4;

  /// Throws UsageError on k == 0, lambda outside [0,1], or k > candidate_n
  /// with MMR enabled.
  void validate() const;
  json to_json() const;
  /// Missing keys keep their defaults.
  static RetrievalConfig from_json(const json &j);
};

struct PoolEntry {
  std::string doc_id;
  double score = 0.0;
  /// Sub-query labels ("Q", "F1".."Fn") that retrieved this document within
  /// their own top list, ordered Q first then by facet number.
  std::vector<std::string> provenance;
  std::string text;
};

struct EvidencePool {
  std::string instance_id;
  std::vector<PoolEntry> entries;
  RetrievalConfig config;

  std::vector<std::string> texts() const;
  /// Dump form: instance_id, config and entries without texts.
  json to_json() const;
};

/// Label of the i-th facet (0-based) in provenance sets: "F1", "F2", ...
std::string facet_label(std::size_t facet_index);

/// Similarity between candidate i and candidate j.
using SimilarityFn = std::function<double(std::size_t, std::size_t)>;

/// Greedy Maximal Marginal Relevance. Each step picks the candidate
/// maximizing lambda * rel(d) - (1 - lambda) * max_{s in selected} sim(d, s),
/// where rel is the candidate score min-max normalized over the candidate
/// set (all 1 when the scores are constant). The first pick is the most
/// relevant candidate. Ties go to the earlier candidate. Returns candidate
/// positions in selection order; k is clamped to the candidate count.
std::vector<std::size_t> mmr_select(std::span<const ScoredDoc> candidates,
                                    double lambda, std::size_t k,
                                    const SimilarityFn &sim);

/// mmr_select returning the selected documents, re-ranked 1..k in selection
/// order with their original scores.
std::vector<ScoredDoc> mmr_rerank(std::span<const ScoredDoc> candidates,
                                  double lambda, std::size_t k,
                                  const SimilarityFn &sim);

/// Read-only retrieval resources shared by all pool builds. Any pointer may
/// be null when the configured mode does not need it.
struct PoolSources {
  const Corpus *corpus = nullptr;
  const InvertedIndex *index = nullptr;
  /// Document vectors for dense retrieval and MMR similarity.
  const EmbeddingTable *doc_embeddings = nullptr;
  /// Sub-query vectors, keyed "<instance_id>:<label>" or by the sub-query
  /// text itself.
  const EmbeddingTable *query_embeddings = nullptr;
};

/// Builds evidence pools for instances under one configuration. Immutable
/// after construction; build() may be called concurrently.
class PoolBuilder {
public:
  PoolBuilder(PoolSources sources, RetrievalConfig config);

  EvidencePool build(const ClarificationInstance &instance) const;

  const RetrievalConfig &config() const { return config_; }
  const PoolSources &sources() const { return sources_; }

  /// The sub-queries issued for an instance, as (label, text) pairs.
  static std::vector<std::pair<std::string, std::string>>
  sub_queries(const ClarificationInstance &instance, Alignment alignment);

private:
  std::vector<ScoredDoc> retrieve(const ClarificationInstance &instance,
                                  const std::string &label,
                                  const std::string &text,
                                  std::size_t depth) const;
  SimilarityFn similarity(const std::vector<PoolEntry> &entries) const;
  std::string text_of(const std::string &doc_id) const;

  PoolSources sources_;
  RetrievalConfig config_;
  // Document frequencies for the TF-IDF similarity fallback.
  std::unordered_map<std::string, std::size_t> df_;
};

} // namespace cqkit
