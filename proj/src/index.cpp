#include "cqkit/index.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cqkit/errors.hpp"
#include "cqkit/jsonl.hpp"
#include "cqkit/parallel.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

namespace {
constexpr const char *kIndexFormat = "cqkit-index-v1";
constexpr const char *kIndexFile = "index.json";
} // namespace

InvertedIndex InvertedIndex::build(const Corpus &corpus) {
  if (corpus.empty())
    throw DataError("cannot index an empty corpus");
  InvertedIndex index;
  index.doc_ids_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());
  std::uint64_t total = 0;
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const auto &doc = corpus.docs()[ord];
    const auto tokens = normalize(doc.text);
    std::map<std::string_view, std::uint32_t> tf;
    for (const auto &t : tokens)
      ++tf[t];
    for (const auto &[term, count] : tf)
      index.postings_[std::string(term)].push_back(
          {static_cast<std::uint32_t>(ord), count});
    index.doc_ids_.push_back(doc.id);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total += tokens.size();
  }
  index.avg_doc_len_ =
      static_cast<double>(total) / static_cast<double>(corpus.size());
  return index;
}

const std::vector<Posting> *InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<std::string> InvertedIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(postings_.size());
  for (const auto &[term, _] : postings_)
    out.push_back(term);
  std::sort(out.begin(), out.end());
  return out;
}

bool InvertedIndex::operator==(const InvertedIndex &other) const {
  return doc_ids_ == other.doc_ids_ && doc_lengths_ == other.doc_lengths_ &&
         avg_doc_len_ == other.avg_doc_len_ && postings_ == other.postings_;
}

void InvertedIndex::save(const std::filesystem::path &dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json docs = json::array();
  for (std::size_t i = 0; i < doc_ids_.size(); ++i)
    docs.push_back({{"id", doc_ids_[i]}, {"len", doc_lengths_[i]}});
  json postings = json::object();
  for (const auto &term : terms()) {
    json list = json::array();
    for (const auto &p : postings_.at(term))
      list.push_back({p.doc, p.tf});
    postings[term] = std::move(list);
  }
  json root{{"format", kIndexFormat},
            {"doc_count", doc_ids_.size()},
            {"avg_doc_len", avg_doc_len_},
            {"docs", std::move(docs)},
            {"postings", std::move(postings)}};
  write_file_atomic(dir / kIndexFile, root.dump() + "\n");
}

InvertedIndex InvertedIndex::load(const std::filesystem::path &dir) {
  const auto path = dir / kIndexFile;
  const json root = read_json_file(path);
  try {
    if (root.at("format") != kIndexFormat)
      throw DataError(path.string() + ": unsupported index format");
    InvertedIndex index;
    for (const auto &d : root.at("docs")) {
      index.doc_ids_.push_back(d.at("id").get<std::string>());
      index.doc_lengths_.push_back(d.at("len").get<std::uint32_t>());
    }
    index.avg_doc_len_ = root.at("avg_doc_len").get<double>();
    for (const auto &[term, list] : root.at("postings").items()) {
      auto &out = index.postings_[term];
      for (const auto &p : list) {
        const auto doc = p.at(0).get<std::uint32_t>();
        if (doc >= index.doc_ids_.size())
          throw DataError(path.string() + ": posting for \"" + term +
                          "\" references unknown document ordinal");
        out.push_back({doc, p.at(1).get<std::uint32_t>()});
      }
    }
    if (index.doc_ids_.size() != root.at("doc_count").get<std::size_t>())
      throw DataError(path.string() + ": doc_count mismatch");
    return index;
  } catch (const json::exception &e) {
    throw DataError(path.string() + ": malformed index: " + e.what());
  }
}

std::vector<ScoredDoc> top_k(std::vector<std::pair<double, std::size_t>> scored,
                             const std::vector<std::string> &ids,
                             std::size_t k) {
  auto better = [&](const auto &a, const auto &b) {
    if (a.first != b.first)
      return a.first > b.first;
    return ids[a.second] < ids[b.second];
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(n),
                    scored.end(), better);
  std::vector<ScoredDoc> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({ids[scored[i].second], scored[i].first, i + 1});
  return out;
}

std::vector<ScoredDoc> bm25_retrieve(const InvertedIndex &index,
                                     std::string_view query, std::size_t k,
                                     Bm25Params params) {
  if (k == 0)
    throw UsageError("k must be at least 1");
  const auto terms = normalize(query);
  if (terms.empty())
    throw DataError("empty query");
  const double n_docs = static_cast<double>(index.doc_count());
  const double avgdl = index.avg_doc_len();
  // Term-at-a-time accumulation; NaN marks documents no term has touched.
  std::vector<double> acc(index.doc_count(), std::nan(""));
  std::vector<std::size_t> touched;
  for (const auto &term : terms) {
    const auto *list = index.postings(term);
    if (!list)
      continue;
    const double df = static_cast<double>(list->size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto &p : *list) {
      const double tf = p.tf;
      const double len = index.doc_lengths()[p.doc];
      const double norm =
          avgdl > 0.0 ? 1.0 - params.b + params.b * len / avgdl : 1.0;
      const double w = idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
      if (std::isnan(acc[p.doc])) {
        acc[p.doc] = w;
        touched.push_back(p.doc);
      } else {
        acc[p.doc] += w;
      }
    }
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(touched.size());
  for (auto doc : touched)
    scored.emplace_back(acc[doc], doc);
  return top_k(std::move(scored), index.doc_ids(), k);
}

std::vector<std::vector<ScoredDoc>>
bm25_retrieve_batch(const InvertedIndex &index,
                    const std::vector<std::string> &queries, std::size_t k,
                    Bm25Params params, int parallelism) {
  std::vector<std::vector<ScoredDoc>> out(queries.size());
  parallel_for(queries.size(), parallelism, [&](std::size_t i) {
    out[i] = bm25_retrieve(index, queries[i], k, params);
  });
  return out;
}

} // namespace cqkit
