#include "cqkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cqkit/corpus.hpp"
#include "cqkit/errors.hpp"
#include "cqkit/retrieval.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

PRF PRF::from(double precision, double recall) {
  PRF r{precision, recall, 0.0};
  if (precision + recall > 0.0)
    r.f1 = 2.0 * precision * recall / (precision + recall);
  return r;
}

double FacetAssignment::total() const {
  double s = 0.0;
  for (const auto &p : pairs)
    s += p.bleu1;
  return s;
}

const std::vector<std::string> &metric_columns() {
  static const std::vector<std::string> cols = {
      "term_overlap.precision", "term_overlap.recall", "term_overlap.f1",
      "exact_match.precision",  "exact_match.recall",  "exact_match.f1",
      "set_sim.precision",      "set_sim.recall",      "set_sim.f1",
      "set_bleu.1",             "set_bleu.2",          "set_bleu.3",
      "set_bleu.4"};
  return cols;
}

std::vector<double> metric_values(const MetricReport &r) {
  return {r.term_overlap.precision, r.term_overlap.recall, r.term_overlap.f1,
          r.exact_match.precision,  r.exact_match.recall,  r.exact_match.f1,
          r.set_sim.precision,      r.set_sim.recall,      r.set_sim.f1,
          r.set_bleu[0],            r.set_bleu[1],         r.set_bleu[2],
          r.set_bleu[3]};
}

double metric_value(const MetricReport &report, const std::string &name) {
  const auto &cols = metric_columns();
  auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end())
    throw UsageError("unknown metric \"" + name + "\"");
  return metric_values(report)[static_cast<std::size_t>(it - cols.begin())];
}

namespace {
json prf_json(const PRF &p) {
  return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}
PRF prf_from(const json &j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}
} // namespace

json to_json(const MetricReport &r) {
  return json{{"term_overlap", prf_json(r.term_overlap)},
              {"exact_match", prf_json(r.exact_match)},
              {"set_sim", prf_json(r.set_sim)},
              {"set_bleu", r.set_bleu}};
}

MetricReport metric_report_from_json(const json &j) {
  try {
    MetricReport r;
    r.term_overlap = prf_from(j.at("term_overlap"));
    r.exact_match = prf_from(j.at("exact_match"));
    r.set_sim = prf_from(j.at("set_sim"));
    r.set_bleu = j.at("set_bleu").get<std::array<double, 4>>();
    return r;
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed metric report: ") + e.what());
  }
}

MetricReport mean_report(const std::vector<MetricReport> &reports) {
  MetricReport m;
  if (reports.empty())
    return m;
  const double n = static_cast<double>(reports.size());
  auto avg = [&](auto field) {
    double s = 0.0;
    for (const auto &r : reports)
      s += field(r);
    return s / n;
  };
  auto avg_prf = [&](auto get) {
    return PRF{avg([&](const MetricReport &r) { return get(r).precision; }),
               avg([&](const MetricReport &r) { return get(r).recall; }),
               avg([&](const MetricReport &r) { return get(r).f1; })};
  };
  m.term_overlap = avg_prf([](const MetricReport &r) { return r.term_overlap; });
  m.exact_match = avg_prf([](const MetricReport &r) { return r.exact_match; });
  m.set_sim = avg_prf([](const MetricReport &r) { return r.set_sim; });
  for (std::size_t i = 0; i < 4; ++i)
    m.set_bleu[i] = avg([&](const MetricReport &r) { return r.set_bleu[i]; });
  return m;
}

std::vector<double> HashedBagEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto &tok : normalize(text)) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : tok) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v[h % dim_] += 1.0;
  }
  return v;
}

std::vector<double> TableEmbedder::embed(std::string_view text) const {
  auto row = table_->find(normalized_key(text));
  if (!row)
    row = table_->find(std::string(text));
  if (!row)
    throw DataError("no embedding for facet \"" + std::string(text) + "\"");
  return table_->row_copy(*row);
}

namespace {

std::set<std::string> token_set(const std::vector<std::string> &facets) {
  std::set<std::string> out;
  for (const auto &f : facets)
    for (auto &t : normalize(f))
      out.insert(std::move(t));
  return out;
}

std::set<std::string> facet_set(const std::vector<std::string> &facets) {
  std::set<std::string> out;
  for (const auto &f : facets) {
    auto key = normalized_key(f);
    if (!key.empty())
      out.insert(std::move(key));
  }
  return out;
}

template <class Set> std::size_t intersection_size(const Set &a, const Set &b) {
  std::size_t n = 0;
  for (const auto &x : a)
    n += b.contains(x);
  return n;
}

void require_non_empty(const std::vector<std::string> &generated,
                       const std::vector<std::string> &truth) {
  if (generated.empty() || truth.empty())
    throw DataError("metric needs non-empty generated and truth facet lists");
}

std::map<std::vector<std::string>, int> ngram_counts(const TokenList &t, int n) {
  std::map<std::vector<std::string>, int> out;
  const auto len = static_cast<int>(t.size());
  for (int i = 0; i + n <= len; ++i)
    ++out[std::vector<std::string>(t.begin() + i, t.begin() + i + n)];
  return out;
}

std::vector<std::vector<double>> bleu1_matrix(const std::vector<TokenList> &gen,
                                              const std::vector<TokenList> &truth) {
  std::vector<std::vector<double>> s(gen.size(), std::vector<double>(truth.size()));
  for (std::size_t i = 0; i < gen.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j)
      s[i][j] = bleu_n(gen[i], truth[j], 1);
  return s;
}

std::vector<TokenList> tokenize_all(const std::vector<std::string> &facets) {
  std::vector<TokenList> out;
  out.reserve(facets.size());
  for (const auto &f : facets)
    out.push_back(normalize(f));
  return out;
}

} // namespace

PRF term_overlap(const std::vector<std::string> &generated,
                 const std::vector<std::string> &truth) {
  require_non_empty(generated, truth);
  const auto wf = token_set(generated);
  const auto wg = token_set(truth);
  if (wf.empty() || wg.empty())
    throw DataError("term overlap needs at least one token on each side");
  const double common = static_cast<double>(intersection_size(wf, wg));
  return PRF::from(common / static_cast<double>(wf.size()),
                   common / static_cast<double>(wg.size()));
}

PRF exact_match(const std::vector<std::string> &generated,
                const std::vector<std::string> &truth) {
  require_non_empty(generated, truth);
  const auto ff = facet_set(generated);
  const auto gg = facet_set(truth);
  if (ff.empty() || gg.empty())
    throw DataError("exact match needs at least one non-empty facet on each side");
  const double common = static_cast<double>(intersection_size(ff, gg));
  return PRF::from(common / static_cast<double>(ff.size()),
                   common / static_cast<double>(gg.size()));
}

double bleu_n(const std::vector<std::string> &cand,
              const std::vector<std::string> &ref, int n) {
  if (n < 1 || n > 4)
    throw UsageError("BLEU order must be between 1 and 4");
  if (cand.empty())
    return 0.0;
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;

  auto clipped = [&](int order) {
    const auto cc = ngram_counts(cand, order);
    const auto rc = ngram_counts(ref, order);
    int hits = 0;
    for (const auto &[gram, count] : cc)
      if (auto it = rc.find(gram); it != rc.end())
        hits += std::min(count, it->second);
    return static_cast<double>(hits);
  };

  const double p1 = clipped(1) / c;
  if (p1 == 0.0)
    return 0.0;
  if (n == 1)
    return bp * p1;
  double log_sum = std::log(p1);
  for (int order = 2; order <= n; ++order) {
    const double total =
        std::max(static_cast<double>(cand.size()) - order + 1.0, 1.0);
    log_sum += std::log((clipped(order) + 1.0) / (total + 1.0));
  }
  return bp * std::exp(log_sum / n);
}

double bleu_n(std::string_view candidate, std::string_view reference, int n) {
  return bleu_n(normalize(candidate), normalize(reference), n);
}

FacetAssignment match_facet_pairs(const std::vector<std::string> &generated,
                                  const std::vector<std::string> &truth) {
  require_non_empty(generated, truth);
  return detail::assign(bleu1_matrix(tokenize_all(generated), tokenize_all(truth)));
}

std::array<double, 4> set_bleu(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth,
                               const FacetAssignment &assignment) {
  require_non_empty(generated, truth);
  std::array<double, 4> out{};
  const double denom =
      static_cast<double>(std::max(generated.size(), truth.size()));
  for (const auto &p : assignment.pairs) {
    const auto cand = normalize(generated[p.generated]);
    const auto ref = normalize(truth[p.truth]);
    for (int n = 1; n <= 4; ++n)
      out[static_cast<std::size_t>(n - 1)] += bleu_n(cand, ref, n);
  }
  for (auto &v : out)
    v /= denom;
  return out;
}

std::array<double, 4> set_bleu(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth) {
  return set_bleu(generated, truth, match_facet_pairs(generated, truth));
}

PRF set_sim(const std::vector<std::string> &generated,
            const std::vector<std::string> &truth, const Embedder &embedder,
            const FacetAssignment &assignment) {
  require_non_empty(generated, truth);
  auto embed = [&](const std::string &facet) {
    try {
      return embedder.embed(facet);
    } catch (const std::exception &e) {
      throw DataError("embedder failed on facet \"" + facet + "\": " + e.what());
    }
  };
  double total = 0.0;
  for (const auto &p : assignment.pairs) {
    const auto a = embed(generated[p.generated]);
    const auto b = embed(truth[p.truth]);
    total += std::clamp(cosine(a, b), 0.0, 1.0);
  }
  return PRF::from(total / static_cast<double>(generated.size()),
                   total / static_cast<double>(truth.size()));
}

PRF set_sim(const std::vector<std::string> &generated,
            const std::vector<std::string> &truth, const Embedder &embedder) {
  return set_sim(generated, truth, embedder, match_facet_pairs(generated, truth));
}

MetricReport evaluate_instance(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth,
                               const Embedder &embedder) {
  MetricReport r;
  r.term_overlap = term_overlap(generated, truth);
  r.exact_match = exact_match(generated, truth);
  const auto assignment = match_facet_pairs(generated, truth);
  r.set_bleu = set_bleu(generated, truth, assignment);
  r.set_sim = set_sim(generated, truth, embedder, assignment);
  return r;
}

} // namespace cqkit
