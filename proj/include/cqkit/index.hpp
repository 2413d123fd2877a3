#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cqkit/corpus.hpp"

namespace cqkit {

struct Posting {
  std::uint32_t doc;
  std::uint32_t tf;
  bool operator==(const Posting &) const = default;
};

/// A ranked retrieval result; ranks are 1-based and consecutive.
struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;
  bool operator==(const ScoredDoc &) const = default;
};

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

/// Term -> postings over document ordinals, with ordinal -> id mapping and
/// per-document lengths. Postings are sorted by ordinal.
class InvertedIndex {
public:
  InvertedIndex() = default;

  /// Tokenizes every document with normalize(text, false). Throws DataError
  /// on an empty corpus.
  static InvertedIndex build(const Corpus &corpus);

  void save(const std::filesystem::path &dir) const;
  static InvertedIndex load(const std::filesystem::path &dir);

  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_len() const { return avg_doc_len_; }
  const std::vector<std::string> &doc_ids() const { return doc_ids_; }
  const std::vector<std::uint32_t> &doc_lengths() const { return doc_lengths_; }
  const std::vector<Posting> *postings(std::string_view term) const;
  std::size_t term_count() const { return postings_.size(); }

  /// Sorted vocabulary, used for stable serialization and comparison.
  std::vector<std::string> terms() const;

  bool operator==(const InvertedIndex &other) const;

private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_len_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)). Every query
/// token occurrence contributes, so repeated query terms weigh more. Only
/// documents matching at least one term are returned; ties go to the smaller
/// doc id. Throws DataError("empty query") if the query has no tokens.
std::vector<ScoredDoc> bm25_retrieve(const InvertedIndex &index,
                                     std::string_view query, std::size_t k,
                                     Bm25Params params = {});

/// Many queries at once, parallel over queries. Output order follows input.
std::vector<std::vector<ScoredDoc>>
bm25_retrieve_batch(const InvertedIndex &index,
                    const std::vector<std::string> &queries, std::size_t k,
                    Bm25Params params = {}, int parallelism = 0);

/// Selects the top-k of (score, id) pairs: score descending, id ascending.
std::vector<ScoredDoc> top_k(std::vector<std::pair<double, std::size_t>> scored,
                             const std::vector<std::string> &ids,
                             std::size_t k);

} // namespace cqkit
