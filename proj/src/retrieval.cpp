#include "cqkit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "cqkit/errors.hpp"
#include "cqkit/parallel.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

namespace {

double dot(const double *a, const double *b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += a[i] * b[i];
  return s;
}

double row_score(const EmbeddingTable &table, std::size_t i,
                 std::span<const double> query, double query_norm,
                 bool use_cosine) {
  const double *row = table.row(i);
  const double d = dot(row, query.data(), table.dim());
  if (!use_cosine)
    return d;
  const double rn = std::sqrt(dot(row, row, table.dim()));
  if (rn == 0.0 || query_norm == 0.0)
    return 0.0;
  return d / (rn * query_norm);
}

void check_dim(const EmbeddingTable &table, std::span<const double> query) {
  if (query.size() != table.dim())
    throw DataError("query vector has " + std::to_string(query.size()) +
                    " components, table dimension is " +
                    std::to_string(table.dim()));
}

} // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("cosine of vectors with different dimensions");
  const double na = dot(a.data(), a.data(), a.size());
  const double nb = dot(b.data(), b.data(), b.size());
  if (na == 0.0 || nb == 0.0)
    return 0.0;
  return dot(a.data(), b.data(), a.size()) / std::sqrt(na * nb);
}

std::vector<double> dense_scores_serial(const EmbeddingTable &table,
                                        std::span<const double> query,
                                        bool use_cosine) {
  check_dim(table, query);
  const double qn = std::sqrt(dot(query.data(), query.data(), query.size()));
  std::vector<double> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i)
    out[i] = row_score(table, i, query, qn, use_cosine);
  return out;
}

std::vector<double> dense_scores(const EmbeddingTable &table,
                                 std::span<const double> query,
                                 bool use_cosine, int parallelism) {
  check_dim(table, query);
  const double qn = std::sqrt(dot(query.data(), query.data(), query.size()));
  std::vector<double> out(table.size());
  const int threads = parallelism > 0 ? parallelism : default_parallelism();
  const auto n = static_cast<long long>(table.size());
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long long i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        row_score(table, static_cast<std::size_t>(i), query, qn, use_cosine);
  return out;
}

std::vector<ScoredDoc> dense_retrieve(const EmbeddingTable &table,
                                      std::span<const double> query_vector,
                                      std::size_t k, bool normalize_vectors,
                                      int parallelism) {
  if (k == 0)
    throw UsageError("k must be at least 1");
  const auto scores =
      dense_scores(table, query_vector, normalize_vectors, parallelism);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    scored.emplace_back(scores[i], i);
  return top_k(std::move(scored), table.ids(), k);
}

std::vector<std::string>
interleave_round_robin(const std::vector<std::vector<std::string>> &lists,
                       std::size_t max_items) {
  if (max_items == 0)
    throw UsageError("max_items must be at least 1");
  return interleave_round_robin(lists, max_items,
                                [](const std::string &s) -> const std::string & {
                                  return s;
                                });
}

std::string to_string(RetrievalMode mode) {
  return mode == RetrievalMode::lexical ? "lexical" : "dense";
}

std::string to_string(Alignment alignment) {
  switch (alignment) {
  case Alignment::query_only:
    return "query_only";
  case Alignment::facet_aligned:
    return "facet_aligned";
  case Alignment::oracle:
    return "oracle";
  case Alignment::closed_book:
    return "closed_book";
  }
  return "?";
}

RetrievalMode parse_mode(const std::string &s) {
  if (s == "lexical")
    return RetrievalMode::lexical;
  if (s == "dense")
    return RetrievalMode::dense;
  throw UsageError("unknown retrieval mode \"" + s + "\"");
}

Alignment parse_alignment(const std::string &s) {
  if (s == "query_only")
    return Alignment::query_only;
  if (s == "facet_aligned")
    return Alignment::facet_aligned;
  if (s == "oracle")
    return Alignment::oracle;
  if (s == "closed_book")
    return Alignment::closed_book;
  throw UsageError("unknown alignment \"" + s + "\"");
}

void RetrievalConfig::validate() const {
  if (k == 0)
    throw UsageError("retrieval k must be at least 1");
  if (mmr_lambda) {
    if (!(*mmr_lambda >= 0.0 && *mmr_lambda <= 1.0))
      throw UsageError("mmr_lambda must lie in [0, 1]");
    if (k > candidate_n)
      throw UsageError("k must not exceed candidate_n when MMR is enabled");
  }
  if (!(bm25_k1 >= 0.0) || !(bm25_b >= 0.0 && bm25_b <= 1.0))
    throw UsageError("bm25_k1 must be >= 0 and bm25_b in [0, 1]");
}

json RetrievalConfig::to_json() const {
  return json{{"mode", to_string(mode)},
              {"alignment", to_string(alignment)},
              {"k", k},
              {"candidate_n", candidate_n},
              {"mmr_lambda", mmr_lambda ? json(*mmr_lambda) : json(nullptr)},
              {"bm25_k1", bm25_k1},
              {"bm25_b", bm25_b}};
}

RetrievalConfig RetrievalConfig::from_json(const json &j) {
  RetrievalConfig c;
  if (!j.is_object())
    throw UsageError("retrieval config must be an object");
  try {
    for (const auto &[key, value] : j.items()) {
      if (key == "mode")
        c.mode = parse_mode(value.get<std::string>());
      else if (key == "alignment")
        c.alignment = parse_alignment(value.get<std::string>());
      else if (key == "k")
        c.k = value.get<std::size_t>();
      else if (key == "candidate_n")
        c.candidate_n = value.get<std::size_t>();
      else if (key == "mmr_lambda")
        c.mmr_lambda = value.is_null() ? std::nullopt
                                       : std::optional(value.get<double>());
      else if (key == "bm25_k1")
        c.bm25_k1 = value.get<double>();
      else if (key == "bm25_b")
        c.bm25_b = value.get<double>();
      else
        throw UsageError("unknown retrieval key \"" + key + "\"");
    }
  } catch (const json::exception &e) {
    throw UsageError(std::string("bad retrieval config: ") + e.what());
  }
  return c;
}

std::vector<std::string> EvidencePool::texts() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto &e : entries)
    out.push_back(e.text);
  return out;
}

json EvidencePool::to_json() const {
  json list = json::array();
  for (const auto &e : entries)
    list.push_back(
        {{"doc_id", e.doc_id}, {"score", e.score}, {"provenance", e.provenance}});
  return json{{"instance_id", instance_id},
              {"config", config.to_json()},
              {"entries", std::move(list)}};
}

std::string facet_label(std::size_t facet_index) {
  return "F" + std::to_string(facet_index + 1);
}

PoolBuilder::PoolBuilder(PoolSources sources, RetrievalConfig config)
    : sources_(sources), config_(config) {
  config_.validate();
  const bool retrieves = config_.alignment == Alignment::query_only ||
                         config_.alignment == Alignment::facet_aligned;
  if (!retrieves)
    return;
  if (config_.mode == RetrievalMode::lexical && !sources_.index)
    throw UsageError("lexical retrieval needs an inverted index");
  if (config_.mode == RetrievalMode::dense &&
      (!sources_.doc_embeddings || !sources_.query_embeddings))
    throw UsageError("dense retrieval needs document and query embeddings");
  if (config_.mmr_lambda && !sources_.doc_embeddings && sources_.corpus) {
    for (const auto &doc : sources_.corpus->docs()) {
      auto tokens = normalize(doc.text);
      std::sort(tokens.begin(), tokens.end());
      tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
      for (auto &t : tokens)
        ++df_[std::move(t)];
    }
  }
}

std::vector<std::pair<std::string, std::string>>
PoolBuilder::sub_queries(const ClarificationInstance &instance,
                         Alignment alignment) {
  std::vector<std::pair<std::string, std::string>> out{{"Q", instance.query}};
  if (alignment == Alignment::facet_aligned)
    for (std::size_t i = 0; i < instance.facets.size(); ++i)
      out.emplace_back(facet_label(i),
                       instance.query + " " + instance.facets[i]);
  return out;
}

std::vector<ScoredDoc>
PoolBuilder::retrieve(const ClarificationInstance &instance,
                      const std::string &label, const std::string &text,
                      std::size_t depth) const {
  if (config_.mode == RetrievalMode::lexical)
    return bm25_retrieve(*sources_.index, text, depth,
                         {config_.bm25_k1, config_.bm25_b});
  const auto &qt = *sources_.query_embeddings;
  auto row = qt.find(instance.id + ":" + label);
  if (!row)
    row = qt.find(text);
  if (!row)
    throw DataError("no query embedding for instance \"" + instance.id +
                    "\" sub-query " + label);
  const auto vec = qt.row_copy(*row);
  return dense_retrieve(*sources_.doc_embeddings, vec, depth, false, 1);
}

std::string PoolBuilder::text_of(const std::string &doc_id) const {
  if (!sources_.corpus)
    return {};
  const auto *doc = sources_.corpus->find(doc_id);
  return doc ? doc->text : std::string();
}

SimilarityFn PoolBuilder::similarity(const std::vector<PoolEntry> &entries) const {
  if (const auto *table = sources_.doc_embeddings) {
    std::vector<std::size_t> rows;
    for (const auto &e : entries) {
      auto r = table->find(e.doc_id);
      if (!r)
        break;
      rows.push_back(*r);
    }
    if (rows.size() == entries.size()) {
      return [table, rows](std::size_t i, std::size_t j) {
        const std::span<const double> a(table->row(rows[i]), table->dim());
        const std::span<const double> b(table->row(rows[j]), table->dim());
        return cosine(a, b);
      };
    }
  }
  // TF-IDF cosine over normalized tokens.
  const double n_docs =
      sources_.corpus ? static_cast<double>(sources_.corpus->size()) : 1.0;
  auto vectors = std::make_shared<std::vector<std::map<std::string, double>>>();
  for (const auto &e : entries) {
    std::map<std::string, double> v;
    for (auto &t : normalize(e.text))
      v[std::move(t)] += 1.0;
    for (auto &[term, w] : v) {
      auto it = df_.find(term);
      const double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
      w *= std::log(1.0 + n_docs / df);
    }
    vectors->push_back(std::move(v));
  }
  return [vectors](std::size_t i, std::size_t j) {
    const auto &a = (*vectors)[i];
    const auto &b = (*vectors)[j];
    double d = 0.0, na = 0.0, nb = 0.0;
    for (const auto &[t, w] : a) {
      na += w * w;
      if (auto it = b.find(t); it != b.end())
        d += w * it->second;
    }
    for (const auto &[t, w] : b)
      nb += w * w;
    if (na == 0.0 || nb == 0.0)
      return 0.0;
    return d / std::sqrt(na * nb);
  };
}

EvidencePool PoolBuilder::build(const ClarificationInstance &instance) const {
  EvidencePool pool;
  pool.instance_id = instance.id;
  pool.config = config_;

  if (config_.alignment == Alignment::closed_book)
    return pool;
  if (config_.alignment == Alignment::oracle) {
    const std::size_t n = std::min(instance.facets.size(), config_.k);
    for (std::size_t i = 0; i < n; ++i)
      pool.entries.push_back({"oracle:" + std::to_string(i + 1), 1.0,
                              {facet_label(i)}, instance.facets[i]});
    return pool;
  }
  if (config_.alignment == Alignment::facet_aligned && instance.facets.empty())
    throw DataError("instance \"" + instance.id + "\" has no facets to align");

  const std::size_t depth =
      config_.mmr_lambda ? config_.candidate_n : config_.k;
  const auto queries = sub_queries(instance, config_.alignment);
  std::vector<std::vector<ScoredDoc>> lists;
  lists.reserve(queries.size());
  std::unordered_map<std::string, std::vector<std::string>> provenance;
  for (const auto &[label, text] : queries) {
    lists.push_back(retrieve(instance, label, text, depth));
    for (const auto &d : lists.back())
      provenance[d.doc_id].push_back(label);
  }
  const auto merged = interleave_round_robin(
      lists, depth, [](const ScoredDoc &d) -> const std::string & {
        return d.doc_id;
      });

  std::vector<PoolEntry> entries;
  entries.reserve(merged.size());
  for (const auto &d : merged)
    entries.push_back({d.doc_id, d.score, provenance[d.doc_id], text_of(d.doc_id)});

  if (config_.mmr_lambda && !entries.empty()) {
    std::vector<ScoredDoc> candidates;
    for (std::size_t i = 0; i < entries.size(); ++i)
      candidates.push_back({entries[i].doc_id, entries[i].score, i + 1});
    const auto picks =
        mmr_select(candidates, *config_.mmr_lambda,
                   std::min(config_.k, candidates.size()), similarity(entries));
    std::vector<PoolEntry> reranked;
    reranked.reserve(picks.size());
    for (auto p : picks)
      reranked.push_back(std::move(entries[p]));
    entries = std::move(reranked);
  }
  pool.entries = std::move(entries);
  return pool;
}

} // namespace cqkit
