#include "cqkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cqkit/errors.hpp"
#include "cqkit/parallel.hpp"
#include "cqkit/rng.hpp"
#include "cqkit/text.hpp"

namespace cqkit {

json SkipLog::to_json() const {
  json reasons = json::array();
  for (const auto &[id, why] : skip_reasons)
    reasons.push_back({{"id", id}, {"reason", why}});
  return json{{"evaluated_count", evaluated_count},
              {"skipped_count", skipped_count},
              {"skip_reasons", std::move(reasons)}};
}

namespace {

// Outcome of one independent work unit, assembled in input order afterwards.
template <class T> struct Outcome {
  std::optional<T> value;
  std::string error;
};

double mean_of(const std::vector<double> &v) {
  if (v.empty())
    return 0.0;
  double s = 0.0;
  for (double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

} // namespace

// ---------------------------------------------------------------------------

AlignmentRow alignment_of(const ClarificationInstance &instance,
                          const EvidencePool &pool) {
  AlignmentRow row;
  row.instance_id = instance.id;
  std::vector<TokenList> entry_tokens;
  std::unordered_set<std::string> evidence_words;
  for (const auto &e : pool.entries) {
    entry_tokens.push_back(normalize(e.text));
    evidence_words.insert(entry_tokens.back().begin(), entry_tokens.back().end());
  }
  std::set<std::string> facet_words;
  std::set<std::string> facet_keys;
  std::vector<TokenList> facets;
  for (const auto &f : instance.facets) {
    auto tokens = normalize(f);
    facet_words.insert(tokens.begin(), tokens.end());
    if (!tokens.empty() && facet_keys.insert(join_tokens(tokens)).second)
      facets.push_back(std::move(tokens));
  }
  if (facet_words.empty())
    return row;
  std::size_t hit = 0;
  for (const auto &w : facet_words)
    hit += evidence_words.contains(w);
  row.term_overlap_recall =
      static_cast<double>(hit) / static_cast<double>(facet_words.size());
  std::size_t found = 0;
  for (const auto &f : facets)
    found += std::any_of(entry_tokens.begin(), entry_tokens.end(),
                         [&](const TokenList &t) { return contains_sequence(t, f); });
  row.exact_match_recall =
      static_cast<double>(found) / static_cast<double>(facets.size());
  return row;
}

AlignmentReport alignment_stats(const std::vector<ClarificationInstance> &instances,
                                const PoolFn &pools, const RetrievalConfig &config,
                                int parallelism) {
  if (instances.empty())
    throw DataError("alignment statistics need at least one instance");
  std::vector<Outcome<AlignmentRow>> outcomes(instances.size());
  parallel_for(instances.size(), parallelism, [&](std::size_t i) {
    try {
      outcomes[i].value = alignment_of(instances[i], pools(instances[i]));
    } catch (const DataError &e) {
      outcomes[i].error = e.what();
    }
  });
  AlignmentReport report;
  report.config = config;
  std::vector<double> to, em;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!outcomes[i].value) {
      report.skips.skip(instances[i].id, outcomes[i].error);
      continue;
    }
    const auto &row = *outcomes[i].value;
    to.push_back(row.term_overlap_recall);
    em.push_back(row.exact_match_recall);
    report.per_instance.push_back(row);
    ++report.skips.evaluated_count;
  }
  report.term_overlap_recall = mean_of(to);
  report.exact_match_recall = mean_of(em);
  return report;
}

AlignmentReport alignment_stats(const std::vector<ClarificationInstance> &instances,
                                const PoolBuilder &builder, int parallelism) {
  return alignment_stats(
      instances, [&](const ClarificationInstance &inst) { return builder.build(inst); },
      builder.config(), parallelism);
}

json AlignmentReport::to_json() const {
  json rows = json::array();
  for (const auto &r : per_instance)
    rows.push_back({{"id", r.instance_id},
                    {"term_overlap_recall", r.term_overlap_recall},
                    {"exact_match_recall", r.exact_match_recall}});
  return json{{"term_overlap_recall", term_overlap_recall},
              {"exact_match_recall", exact_match_recall},
              {"config", config.to_json()},
              {"skips", skips.to_json()},
              {"per_instance", std::move(rows)}};
}

// ---------------------------------------------------------------------------

std::string to_string(RecallMetric m) {
  return m == RecallMetric::term_overlap ? "term_overlap" : "exact_match";
}

RecallMetric parse_recall_metric(const std::string &s) {
  if (s == "term_overlap")
    return RecallMetric::term_overlap;
  if (s == "exact_match")
    return RecallMetric::exact_match;
  throw UsageError("unknown LOO metric \"" + s + "\"");
}

std::size_t loo_facet_choice(std::uint64_t seed,
                             const ClarificationInstance &instance) {
  if (instance.facets.empty())
    throw DataError("instance \"" + instance.id + "\" has no facets");
  auto rng = SplitMix::keyed(seed, instance.id);
  return static_cast<std::size_t>(rng.uniform(instance.facets.size()));
}

namespace {

double facet_recall(const std::vector<std::string> &generated,
                    const std::string &facet, RecallMetric metric) {
  const std::vector<std::string> truth{facet};
  return metric == RecallMetric::term_overlap
             ? term_overlap(generated, truth).recall
             : exact_match(generated, truth).recall;
}

} // namespace

LooReport loo_faithfulness(const std::vector<ClarificationInstance> &instances,
                           const Generator &generator, const PoolBuilder &builder,
                           const LooOptions &options) {
  if (builder.config().alignment != Alignment::facet_aligned)
    throw UsageError("leave-one-out evaluation needs facet_aligned pools");
  std::vector<Outcome<LooRow>> outcomes(instances.size());
  parallel_for(instances.size(), options.parallelism, [&](std::size_t i) {
    const auto &inst = instances[i];
    try {
      LooRow row;
      row.instance_id = inst.id;
      row.chosen_facet_index = loo_facet_choice(options.seed, inst);
      const auto &facet = inst.facets[row.chosen_facet_index];
      const auto label = facet_label(row.chosen_facet_index);

      auto pool = builder.build(inst);
      GeneratorRequest request{inst.query, pool.texts(), options.max_facets, false};
      row.recall = facet_recall(generator.generate(request).facets, facet,
                                options.metric);

      std::erase_if(pool.entries, [&](const PoolEntry &e) {
        if (options.sole_provenance_only)
          return e.provenance.size() == 1 && e.provenance[0] == label;
        return std::find(e.provenance.begin(), e.provenance.end(), label) !=
               e.provenance.end();
      });
      request.evidence_texts = pool.texts();
      row.recall_loo = facet_recall(generator.generate(request).facets, facet,
                                    options.metric);
      outcomes[i].value = std::move(row);
    } catch (const GeneratorError &e) {
      outcomes[i].error = std::string("generator: ") + e.what();
    } catch (const DataError &e) {
      outcomes[i].error = e.what();
    }
  });

  LooReport report;
  report.metric_kind = options.metric;
  report.seed = options.seed;
  std::vector<double> before, after;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!outcomes[i].value) {
      report.skips.skip(instances[i].id, outcomes[i].error);
      continue;
    }
    before.push_back(outcomes[i].value->recall);
    after.push_back(outcomes[i].value->recall_loo);
    report.per_instance.push_back(std::move(*outcomes[i].value));
    ++report.skips.evaluated_count;
  }
  report.recall = mean_of(before);
  report.recall_loo = mean_of(after);
  report.delta_pct = report.recall > 0.0
                         ? 100.0 * (report.recall_loo - report.recall) / report.recall
                         : 0.0;
  return report;
}

json LooReport::to_json() const {
  json rows = json::array();
  for (const auto &r : per_instance)
    rows.push_back({{"id", r.instance_id},
                    {"chosen_facet_index", r.chosen_facet_index},
                    {"recall", r.recall},
                    {"recall_loo", r.recall_loo}});
  return json{{"metric", to_string(metric_kind)},
              {"seed", seed},
              {"recall", recall},
              {"recall_loo", recall_loo},
              {"delta_pct", delta_pct},
              {"skips", skips.to_json()},
              {"per_instance", std::move(rows)}};
}

// ---------------------------------------------------------------------------

SweepReport evidence_size_sweep(const std::vector<ClarificationInstance> &instances,
                                const Generator &generator, const PoolBuilder &builder,
                                const std::vector<std::size_t> &n_values,
                                const Embedder &embedder, const SweepOptions &options) {
  if (n_values.empty())
    throw UsageError("sweep needs at least one evidence size");
  for (std::size_t i = 0; i < n_values.size(); ++i)
    if (n_values[i] == 0 || (i > 0 && n_values[i] <= n_values[i - 1]))
      throw UsageError("sweep sizes must be positive and strictly increasing");

  auto config = builder.config();
  config.k = std::max(config.k, n_values.back());
  config.candidate_n = std::max(config.candidate_n, config.k);
  const PoolBuilder deep(builder.sources(), config);

  const std::size_t points = n_values.size();
  std::vector<std::vector<Outcome<MetricReport>>> outcomes(
      instances.size(), std::vector<Outcome<MetricReport>>(points));
  parallel_for(instances.size(), options.parallelism, [&](std::size_t i) {
    const auto &inst = instances[i];
    EvidencePool pool;
    try {
      pool = deep.build(inst);
    } catch (const DataError &e) {
      for (auto &o : outcomes[i])
        o.error = std::string("pool: ") + e.what();
      return;
    }
    const auto texts = pool.texts();
    for (std::size_t p = 0; p < points; ++p) {
      const std::size_t n = std::min(n_values[p], texts.size());
      GeneratorRequest request{
          inst.query,
          std::vector<std::string>(texts.begin(), texts.begin() + static_cast<long>(n)),
          options.max_facets, false};
      try {
        const auto generated = generator.generate(request);
        outcomes[i][p].value = evaluate_instance(generated.facets, inst.facets, embedder);
      } catch (const GeneratorError &e) {
        outcomes[i][p].error = std::string("generator: ") + e.what();
      } catch (const DataError &e) {
        outcomes[i][p].error = e.what();
      }
    }
  });

  SweepReport report;
  for (std::size_t p = 0; p < points; ++p) {
    SweepPoint point;
    point.n_evidence = n_values[p];
    std::vector<MetricReport> reports;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (outcomes[i][p].value) {
        reports.push_back(*outcomes[i][p].value);
        ++point.skips.evaluated_count;
      } else {
        point.skips.skip(instances[i].id, outcomes[i][p].error);
      }
    }
    point.mean = mean_report(reports);
    report.points.push_back(std::move(point));
  }
  return report;
}

json SweepReport::to_json() const {
  json list = json::array();
  for (const auto &p : points)
    list.push_back({{"n_evidence", p.n_evidence},
                    {"mean", cqkit::to_json(p.mean)},
                    {"skips", p.skips.to_json()}});
  return json{{"points", std::move(list)}};
}

std::string SweepReport::to_csv() const {
  std::ostringstream out;
  out << "n";
  for (const auto &c : metric_columns())
    out << ',' << c;
  out << '\n';
  for (const auto &p : points) {
    out << p.n_evidence;
    for (double v : metric_values(p.mean))
      out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

TaxonomyReport taxonomy_analysis(const std::vector<ClarificationInstance> &instances,
                                 std::size_t top_k) {
  std::map<std::string, std::size_t> counts;
  for (const auto &inst : instances)
    for (const auto &f : inst.facets)
      for (auto &t : normalize(f, true))
        ++counts[std::move(t)];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  if (ranked.size() > top_k)
    ranked.resize(top_k);

  TaxonomyReport report;
  report.top_words = ranked;
  report.instance_count = instances.size();
  std::unordered_set<std::string> top;
  for (const auto &[w, _] : ranked)
    top.insert(w);
  for (const auto &inst : instances) {
    const bool biased = std::any_of(inst.facets.begin(), inst.facets.end(), [&](const auto &f) {
      const auto tokens = normalize(f, true);
      return std::any_of(tokens.begin(), tokens.end(),
                         [&](const auto &t) { return top.contains(t); });
    });
    report.biased_count += biased;
  }
  report.biased_fraction =
      instances.empty() ? 0.0
                        : static_cast<double>(report.biased_count) /
                              static_cast<double>(instances.size());
  return report;
}

json TaxonomyReport::to_json() const {
  json words = json::array();
  for (const auto &[w, n] : top_words)
    words.push_back({{"word", w}, {"frequency", n}});
  return json{{"top_words", std::move(words)},
              {"biased_fraction", biased_fraction},
              {"biased_count", biased_count},
              {"instance_count", instance_count}};
}

// ---------------------------------------------------------------------------

namespace {
// Linear interpolation between order statistics of a sorted sample.
double quantile(const std::vector<double> &sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}
} // namespace

BootstrapResult paired_bootstrap(const std::map<std::string, double> &a,
                                 const std::map<std::string, double> &b,
                                 std::size_t iterations, std::uint64_t seed) {
  if (iterations == 0)
    throw UsageError("bootstrap needs at least one iteration");
  std::vector<std::string> only;
  for (const auto &[id, _] : a)
    if (!b.contains(id))
      only.push_back(id);
  for (const auto &[id, _] : b)
    if (!a.contains(id))
      only.push_back(id);
  if (!only.empty()) {
    std::string msg = "instance ids differ between reports:";
    for (const auto &id : only)
      msg += " " + id;
    throw DataError(msg);
  }
  if (a.empty())
    throw DataError("bootstrap needs at least one shared instance");

  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (const auto &[id, va] : a)
    diffs.push_back(b.at(id) - va);
  const auto n = diffs.size();

  BootstrapResult r;
  r.instances = n;
  r.iterations = iterations;
  r.mean_diff = mean_of(diffs);
  SplitMix rng(seed);
  std::vector<double> means(iterations);
  for (auto &m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += diffs[rng.uniform(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  r.ci_low = quantile(means, 0.025);
  r.ci_high = quantile(means, 0.975);
  return r;
}

json BootstrapResult::to_json() const {
  return json{{"mean_diff", mean_diff},
              {"ci_low", ci_low},
              {"ci_high", ci_high},
              {"instances", instances},
              {"iterations", iterations}};
}

} // namespace cqkit
