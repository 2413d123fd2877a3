#include "cqkit/corpus.hpp"

#include <cmath>

#include "cqkit/errors.hpp"
#include "cqkit/jsonl.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

namespace {

std::string where(const std::filesystem::path &path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

const std::string &require_string(const json &obj, const char *field,
                                  const std::filesystem::path &path,
                                  std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw DataError(where(path, line) + "missing field \"" + field + "\"");
  if (!it->is_string())
    throw DataError(where(path, line) + "field \"" + field +
                    "\" must be a string");
  return it->get_ref<const std::string &>();
}

bool blank(const std::string &s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

} // namespace

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  by_id_.reserve(docs_.size());
  lengths_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    const auto &doc = docs_[i];
    if (doc.id.empty())
      throw DataError("document " + std::to_string(i) + " has an empty id");
    if (blank(doc.text))
      throw DataError("document \"" + doc.id + "\" has empty text");
    if (!by_id_.emplace(doc.id, i).second)
      throw DataError("duplicate document id \"" + doc.id + "\"");
    lengths_.push_back(normalize(doc.text).size());
  }
  stats_ = recompute_stats();
}

const Document *Corpus::find(const std::string &id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

CorpusStats Corpus::recompute_stats() const {
  CorpusStats s;
  s.doc_count = docs_.size();
  for (const auto &doc : docs_)
    s.total_token_count += normalize(doc.text).size();
  s.avg_doc_len = s.doc_count == 0 ? 0.0
                                   : static_cast<double>(s.total_token_count) /
                                         static_cast<double>(s.doc_count);
  return s;
}

void EmbeddingTable::add(std::string id, const std::vector<double> &vec) {
  if (dim_ == 0) {
    if (vec.empty())
      throw DataError("embedding \"" + id + "\" has no components");
    dim_ = vec.size();
  }
  if (vec.size() != dim_)
    throw DataError("embedding \"" + id + "\" has " +
                    std::to_string(vec.size()) + " components, expected " +
                    std::to_string(dim_));
  for (double v : vec)
    if (!std::isfinite(v))
      throw DataError("embedding \"" + id + "\" has a non-finite component");
  if (!by_id_.emplace(id, ids_.size()).second)
    throw DataError("duplicate embedding id \"" + id + "\"");
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingTable::find(const std::string &id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end())
    return std::nullopt;
  return it->second;
}

Corpus load_corpus(const std::filesystem::path &path) {
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_json_line(path, [&](const json &obj, std::size_t line) {
    Document doc{require_string(obj, "id", path, line),
                 require_string(obj, "text", path, line)};
    if (doc.id.empty())
      throw DataError(where(path, line) + "empty document id");
    if (blank(doc.text))
      throw DataError(where(path, line) + "document \"" + doc.id +
                      "\" has empty text");
    auto [it, fresh] = seen.emplace(doc.id, line);
    if (!fresh)
      throw DataError(where(path, line) + "duplicate document id \"" +
                      doc.id + "\" (first seen on line " +
                      std::to_string(it->second) + ")");
    docs.push_back(std::move(doc));
  });
  return Corpus(std::move(docs));
}

void write_corpus(const Corpus &corpus, const std::filesystem::path &path) {
  AtomicFile file(path);
  for (const auto &doc : corpus.docs())
    file.stream() << json{{"id", doc.id}, {"text", doc.text}}.dump() << '\n';
  file.commit();
}

ClarificationInstance parse_instance(const json &obj,
                                     const std::filesystem::path &path,
                                     std::size_t line) {
  ClarificationInstance inst;
  inst.id = require_string(obj, "id", path, line);
  inst.query = require_string(obj, "query", path, line);
  if (auto q = obj.find("question"); q != obj.end() && !q->is_null()) {
    if (!q->is_string())
      throw DataError(where(path, line) + "\"question\" must be a string");
    inst.question = q->get<std::string>();
  }
  auto f = obj.find("facets");
  if (f == obj.end())
    throw DataError(where(path, line) + "missing field \"facets\"");
  if (!f->is_array())
    throw DataError(where(path, line) + "\"facets\" must be an array");
  if (f->empty())
    throw DataError(where(path, line) + "instance \"" + inst.id +
                    "\" has no facets");
  for (const auto &facet : *f) {
    if (!facet.is_string())
      throw DataError(where(path, line) + "facets must be strings");
    auto text = facet.get<std::string>();
    if (normalize(text).empty())
      throw DataError(where(path, line) + "instance \"" + inst.id +
                      "\" has a facet that normalizes to nothing");
    inst.facets.push_back(std::move(text));
  }
  return inst;
}

std::vector<ClarificationInstance>
load_instances(const std::filesystem::path &path) {
  std::vector<ClarificationInstance> out;
  for_each_json_line(path, [&](const json &obj, std::size_t line) {
    out.push_back(parse_instance(obj, path, line));
  });
  return out;
}

void write_instances(const std::vector<ClarificationInstance> &instances,
                     const std::filesystem::path &path) {
  AtomicFile file(path);
  for (const auto &inst : instances) {
    json obj{{"id", inst.id}, {"query", inst.query}, {"facets", inst.facets}};
    obj["question"] = inst.question ? json(*inst.question) : json(nullptr);
    file.stream() << obj.dump() << '\n';
  }
  file.commit();
}

EmbeddingTable load_embeddings(const std::filesystem::path &path) {
  EmbeddingTable table;
  for_each_json_line(path, [&](const json &obj, std::size_t line) {
    const auto &id = require_string(obj, "id", path, line);
    auto v = obj.find("vector");
    if (v == obj.end() || !v->is_array())
      throw DataError(where(path, line) + "\"vector\" must be an array");
    std::vector<double> vec;
    vec.reserve(v->size());
    for (const auto &x : *v) {
      if (!x.is_number())
        throw DataError(where(path, line) + "non-numeric vector component");
      vec.push_back(x.get<double>());
    }
    try {
      table.add(id, vec);
    } catch (const DataError &e) {
      throw DataError(where(path, line) + e.what());
    }
  });
  return table;
}

} // namespace cqkit
