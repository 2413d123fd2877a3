#include "cqkit/generator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include <httplib.h>

#include "cqkit/errors.hpp"
#include "cqkit/retrieval.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

json GeneratorRequest::to_json() const {
  return json{{"query", query},
              {"evidence", evidence_texts},
              {"max_facets", max_facets},
              {"emit_question", emit_question}};
}

namespace {

struct Candidate {
  std::size_t first_seen = 0;
  std::size_t freq = 0;
  std::set<std::size_t> docs;
};

} // namespace

Clarification extractive_generate(const GeneratorRequest &request) {
  if (request.max_facets == 0)
    throw GeneratorError("max_facets must be at least 1");
  if (request.evidence_texts.empty())
    throw GeneratorError("no evidence");

  const auto query_tokens = normalize(request.query);
  const std::unordered_set<std::string> query_set(query_tokens.begin(),
                                                  query_tokens.end());
  std::map<std::string, Candidate> candidates;
  std::size_t order = 0;
  auto see = [&](std::string gram, std::size_t doc) {
    auto [it, fresh] = candidates.try_emplace(std::move(gram));
    if (fresh)
      it->second.first_seen = order++;
    ++it->second.freq;
    it->second.docs.insert(doc);
  };

  for (std::size_t d = 0; d < request.evidence_texts.size(); ++d) {
    const auto tokens = normalize(request.evidence_texts[d]);
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      const auto &a = tokens[p];
      if (is_stopword(a))
        continue;
      // Bigram before unigram at each position.
      if (p + 1 < tokens.size()) {
        const auto &b = tokens[p + 1];
        if (!is_stopword(b) && !(query_set.contains(a) && query_set.contains(b)))
          see(a + " " + b, d);
      }
      if (!query_set.contains(a))
        see(a, d);
    }
  }
  if (candidates.empty())
    throw GeneratorError("no candidates");

  std::vector<std::pair<const std::string *, const Candidate *>> ranked;
  ranked.reserve(candidates.size());
  for (const auto &[gram, c] : candidates)
    ranked.emplace_back(&gram, &c);
  std::sort(ranked.begin(), ranked.end(), [](const auto &x, const auto &y) {
    const auto sx = x.second->freq * x.second->docs.size();
    const auto sy = y.second->freq * y.second->docs.size();
    if (sx != sy)
      return sx > sy;
    return x.second->first_seen < y.second->first_seen;
  });

  Clarification out;
  if (request.emit_question)
    out.question = kTemplateQuestion;
  const std::size_t n = std::min(request.max_facets, ranked.size());
  for (std::size_t i = 0; i < n; ++i)
    out.facets.push_back(*ranked[i].first);
  return out;
}

Clarification validate_clarification(std::optional<std::string> question,
                                     const std::vector<std::string> &raw_facets,
                                     std::size_t max_facets) {
  Clarification out;
  out.question = std::move(question);
  std::unordered_set<std::string> seen;
  for (const auto &raw : raw_facets) {
    auto facet = normalized_key(raw);
    if (facet.empty()) {
      out.warnings.push_back("dropped empty facet");
      continue;
    }
    if (!seen.insert(facet).second) {
      out.warnings.push_back("dropped duplicate facet \"" + raw + "\"");
      continue;
    }
    out.facets.push_back(std::move(facet));
  }
  if (out.facets.empty())
    throw GeneratorError("generator returned no facets");
  if (out.facets.size() > max_facets) {
    out.warnings.push_back("truncated " + std::to_string(out.facets.size()) +
                           " facets to " + std::to_string(max_facets));
    out.facets.resize(max_facets);
  }
  return out;
}

Clarification remote_generate(const std::string &endpoint,
                              const GeneratorRequest &request,
                              std::chrono::milliseconds timeout) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos)
    throw UsageError("generator endpoint must be an http URL: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  const std::string base = endpoint.substr(0, slash);
  const std::string path =
      slash == std::string::npos ? "/" : endpoint.substr(slash);

  httplib::Client client(base);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(path, request.to_json().dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const bool retriable =
        err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::Connection ||
        err == httplib::Error::ConnectionTimeout;
    throw GeneratorError("generator request to " + endpoint +
                             " failed: " + httplib::to_string(err),
                         retriable);
  }
  if (res->status != 200)
    throw GeneratorError("generator returned HTTP " +
                         std::to_string(res->status) + ": " + res->body);

  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error &) {
    throw GeneratorError("malformed generator response: " + res->body);
  }
  std::optional<std::string> question;
  std::vector<std::string> facets;
  try {
    auto f = body.find("facets");
    if (!body.is_object() || f == body.end() || !f->is_array())
      throw GeneratorError("malformed generator response: " + res->body);
    facets = f->get<std::vector<std::string>>();
    if (auto q = body.find("question"); q != body.end() && !q->is_null())
      question = q->get<std::string>();
  } catch (const json::exception &) {
    throw GeneratorError("malformed generator response: " + res->body);
  }
  return validate_clarification(std::move(question), facets, request.max_facets);
}

std::vector<std::string>
fuse_round_robin(const std::vector<std::vector<std::string>> &facet_lists,
                 std::size_t max_facets) {
  if (max_facets == 0)
    throw UsageError("max_facets must be at least 1");
  if (std::all_of(facet_lists.begin(), facet_lists.end(),
                  [](const auto &l) { return l.empty(); }))
    throw UsageError("round-robin fusion needs at least one non-empty list");
  struct Keyed {
    std::string key;
    const std::string *facet;
  };
  std::vector<std::vector<Keyed>> keyed;
  keyed.reserve(facet_lists.size());
  for (const auto &list : facet_lists) {
    auto &out = keyed.emplace_back();
    for (const auto &f : list) {
      auto key = normalized_key(f);
      if (!key.empty())
        out.push_back({std::move(key), &f});
    }
  }
  const auto fused = interleave_round_robin(
      keyed, max_facets, [](const Keyed &k) -> const std::string & { return k.key; });
  std::vector<std::string> out;
  out.reserve(fused.size());
  for (const auto &k : fused)
    out.push_back(*k.facet);
  return out;
}

} // namespace cqkit
