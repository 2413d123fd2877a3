#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace cqkit {

struct Document {
  std::string id;
  std::string text;
};

struct CorpusStats {
  std::size_t doc_count = 0;
  std::size_t total_token_count = 0;
  double avg_doc_len = 0.0;

  bool operator==(const CorpusStats &) const = default;
};

/// An ordered document collection. Immutable once built; ids are unique.
class Corpus {
public:
  Corpus() = default;
  /// Throws DataError on duplicate or empty ids and on blank texts.
  explicit Corpus(std::vector<Document> docs);

  const std::vector<Document> &docs() const { return docs_; }
  const CorpusStats &stats() const { return stats_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  const Document *find(const std::string &id) const;
  /// Per-document token counts under normalize(text, false), in doc order.
  const std::vector<std::size_t> &doc_lengths() const { return lengths_; }

  /// Recomputes the statistics from the documents.
  CorpusStats recompute_stats() const;

  bool operator==(const Corpus &other) const {
    return docs_.size() == other.docs_.size() && stats_ == other.stats_ &&
           std::equal(docs_.begin(), docs_.end(), other.docs_.begin(),
                      [](const Document &a, const Document &b) {
                        return a.id == b.id && a.text == b.text;
                      });
  }

private:
  std::vector<Document> docs_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<std::string, std::size_t> by_id_;
  CorpusStats stats_;
};

struct ClarificationInstance {
  std::string id;
  std::string query;
  std::optional<std::string> question;
  std::vector<std::string> facets;
};

/// Dense vectors keyed by document or text identifier. Rows are stored
/// contiguously in insertion order.
class EmbeddingTable {
public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  /// Throws DataError on dimension mismatch, non-finite values or a
  /// duplicate id.
  void add(std::string id, const std::vector<double> &vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string> &ids() const { return ids_; }
  const double *row(std::size_t i) const { return data_.data() + i * dim_; }
  std::vector<double> row_copy(std::size_t i) const {
    return {row(i), row(i) + dim_};
  }
  std::optional<std::size_t> find(const std::string &id) const;

private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

Corpus load_corpus(const std::filesystem::path &path);
void write_corpus(const Corpus &corpus, const std::filesystem::path &path);

/// Parses one instances.jsonl object; `path` and `line` only label errors.
ClarificationInstance parse_instance(const nlohmann::json &obj,
                                     const std::filesystem::path &path,
                                     std::size_t line);

std::vector<ClarificationInstance>
load_instances(const std::filesystem::path &path);
void write_instances(const std::vector<ClarificationInstance> &instances,
                     const std::filesystem::path &path);

EmbeddingTable load_embeddings(const std::filesystem::path &path);

} // namespace cqkit
