#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cqkit/corpus.hpp"
#include "cqkit/generator.hpp"
#include "cqkit/jsonl.hpp"
#include "cqkit/rng.hpp"
#include "cqkit/text.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("cqkit-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &name) const { return path_ / name; }

private:
  fs::path path_;
};

inline void write_text(const fs::path &p, const std::string &s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> list_dir(const fs::path &p) {
  std::vector<std::string> out;
  if (fs::exists(p))
    for (const auto &e : fs::directory_iterator(p))
      out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Small random generators for property tests.

inline std::string pick(cqkit::SplitMix &rng, const std::vector<std::string> &pool) {
  return pool[rng.uniform(pool.size())];
}

inline std::vector<std::string> vocab(std::size_t n, const std::string &prefix = "w") {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i)
    v.push_back(prefix + std::to_string(i));
  return v;
}

/// A facet list of 1..max_facets facets, each 1..max_words words.
inline std::vector<std::string> random_facets(cqkit::SplitMix &rng,
                                              const std::vector<std::string> &words,
                                              std::size_t max_facets,
                                              std::size_t max_words = 3) {
  std::vector<std::string> out(1 + rng.uniform(max_facets));
  for (auto &f : out) {
    const auto n = 1 + rng.uniform(max_words);
    for (std::size_t i = 0; i < n; ++i)
      f += (i ? " " : "") + pick(rng, words);
  }
  return out;
}

/// Positions, within lists[l], of the output items that list l contributed.
/// An item is contributed by the list holding its earliest (depth, list)
/// occurrence, which is where a round-robin scan first meets it.
inline std::vector<std::size_t>
contributed_positions(const std::vector<std::string> &out,
                      const std::vector<std::vector<std::string>> &lists, std::size_t l,
                      const std::function<std::string(const std::string &)> &key) {
  std::vector<std::size_t> pos;
  for (const auto &item : out) {
    std::pair<std::size_t, std::size_t> first{SIZE_MAX, SIZE_MAX};
    for (std::size_t li = 0; li < lists.size(); ++li)
      for (std::size_t d = 0; d < lists[li].size(); ++d)
        if (key(lists[li][d]) == key(item))
          first = std::min(first, {d, li});
    if (first.second == l)
      pos.push_back(first.first);
  }
  return pos;
}

// ---------------------------------------------------------------------------
// Independent oracles.

/// Sentence BLEU written straight from its definition: clipped n-gram
/// precision for order 1, (hits + 1) / (max(total, 1) + 1) for higher orders,
/// geometric mean, brevity penalty exp(1 - r/c) for c < r.
inline double oracle_bleu(const std::string &cand, const std::string &ref, int n) {
  const auto c = cqkit::normalize(cand);
  const auto r = cqkit::normalize(ref);
  if (c.empty())
    return 0.0;
  double log_sum = 0.0;
  for (int m = 1; m <= n; ++m) {
    std::map<std::vector<std::string>, int> cc, rc;
    for (std::size_t i = 0; i + m <= c.size(); ++i)
      ++cc[std::vector<std::string>(c.begin() + i, c.begin() + i + m)];
    for (std::size_t i = 0; i + m <= r.size(); ++i)
      ++rc[std::vector<std::string>(r.begin() + i, r.begin() + i + m)];
    double hits = 0, total = 0;
    for (const auto &[g, cnt] : cc) {
      total += cnt;
      auto it = rc.find(g);
      hits += std::min(cnt, it == rc.end() ? 0 : it->second);
    }
    double p;
    if (m == 1)
      p = hits / total;
    else
      p = (hits + 1.0) / (std::max(total, 1.0) + 1.0);
    if (p == 0.0)
      return 0.0;
    log_sum += std::log(p);
  }
  const double cl = static_cast<double>(c.size()), rl = static_cast<double>(r.size());
  const double bp = cl < rl ? std::exp(1.0 - rl / cl) : 1.0;
  return bp * std::exp(log_sum / n);
}

struct BruteMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs; // sorted by generated index
  double total = -1.0;
};

/// Exhaustive search over every injective pairing of the smaller side into
/// the larger. Best total BLEU-1 wins; ties (within 1e-9) go to the
/// lexicographically smallest pair list.
inline BruteMatch brute_force_match(const std::vector<std::string> &F,
                                    const std::vector<std::string> &G) {
  std::vector<std::vector<double>> s(F.size(), std::vector<double>(G.size()));
  for (std::size_t i = 0; i < F.size(); ++i)
    for (std::size_t j = 0; j < G.size(); ++j)
      s[i][j] = oracle_bleu(F[i], G[j], 1);
  BruteMatch best;
  const bool gen_small = F.size() <= G.size();
  const std::size_t small = std::min(F.size(), G.size());
  std::vector<std::size_t> perm(std::max(F.size(), G.size()));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double total = 0.0;
    for (std::size_t x = 0; x < small; ++x) {
      const auto p = gen_small ? std::pair{x, perm[x]} : std::pair{perm[x], x};
      pairs.push_back(p);
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto &[i, j] : pairs)
      total += s[i][j];
    if (total > best.total + 1e-9 ||
        (std::abs(total - best.total) <= 1e-9 && pairs < best.pairs)) {
      best.total = total;
      best.pairs = pairs;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// BM25 for one document straight from the formula.
inline double oracle_bm25(const std::vector<std::vector<std::string>> &docs,
                          std::size_t d, const std::vector<std::string> &query,
                          double k1 = 0.9, double b = 0.4) {
  const double N = static_cast<double>(docs.size());
  double avg = 0;
  for (const auto &doc : docs)
    avg += static_cast<double>(doc.size());
  avg /= N;
  double score = 0.0;
  for (const auto &t : query) {
    double df = 0;
    for (const auto &doc : docs)
      df += std::count(doc.begin(), doc.end(), t) > 0;
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
    if (tf == 0)
      continue;
    const double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
    const double len = static_cast<double>(docs[d].size());
    score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
  }
  return score;
}

// ---------------------------------------------------------------------------
// Synthetic planted corpus.
//
// Instance i has query "qi_a qi_b" (spelled with letters and digits) and
// `facets` two-word facets. Each facet phrase is planted three times in each
// of two documents of its own; those documents contain no query word.
// Distractor documents repeat the query words and carry document-unique
// filler, so the query alone only ever reaches distractors.

struct Planted {
  std::vector<cqkit::Document> docs;
  std::vector<cqkit::ClarificationInstance> instances;
};

inline Planted planted_corpus(std::size_t n_instances, std::size_t facets = 2,
                              std::size_t distractors = 12) {
  Planted out;
  for (std::size_t i = 0; i < n_instances; ++i) {
    const auto tag = std::to_string(i);
    cqkit::ClarificationInstance inst;
    inst.id = "i" + tag;
    inst.query = "qry" + tag + "a qry" + tag + "b";
    for (std::size_t j = 0; j < facets; ++j) {
      const auto ft = tag + "x" + std::to_string(j);
      const auto phrase = "fac" + ft + "a fac" + ft + "b";
      inst.facets.push_back(phrase);
      for (int d = 0; d < 2; ++d)
        out.docs.push_back({"f" + ft + "d" + std::to_string(d),
                            phrase + " and " + phrase + " and " + phrase});
    }
    for (std::size_t d = 0; d < distractors; ++d) {
      const auto dt = tag + "d" + std::to_string(d);
      out.docs.push_back({"z" + dt, inst.query + " fill" + dt + "a fill" + dt + "b"});
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

/// Writes a planted corpus and an experiment config; returns the config path.
inline fs::path write_planted_experiment(const fs::path &dir, std::size_t n_instances,
                                         const std::string &alignment,
                                         std::size_t max_facets = 5) {
  const auto planted = planted_corpus(n_instances);
  cqkit::write_corpus(cqkit::Corpus(planted.docs), dir / "corpus.jsonl");
  cqkit::write_instances(planted.instances, dir / "instances.jsonl");
  cqkit::json cfg{{"corpus", "corpus.jsonl"},
                  {"instances", "instances.jsonl"},
                  {"retrieval", {{"mode", "lexical"}, {"alignment", alignment}, {"k", 10}}},
                  {"generator", {{"kind", "extractive"}, {"max_facets", max_facets}}},
                  {"seed", 7},
                  {"output_dir", "out"}};
  write_text(dir / "config.json", cfg.dump(2));
  return dir / "config.json";
}

/// Ignores the evidence and answers with a fixed facet list per query.
class LookupGenerator : public cqkit::Generator {
public:
  explicit LookupGenerator(const std::vector<cqkit::ClarificationInstance> &instances) {
    for (const auto &inst : instances)
      answers_[inst.query] = inst.facets;
  }
  cqkit::Clarification generate(const cqkit::GeneratorRequest &request) const override {
    cqkit::Clarification c;
    c.facets = answers_.at(request.query);
    return c;
  }

private:
  std::map<std::string, std::vector<std::string>> answers_;
};

} // namespace testing
