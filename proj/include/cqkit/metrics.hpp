#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cqkit/jsonl.hpp"

namespace cqkit {

/// Precision, recall and their harmonic mean (0 when P + R == 0).
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static PRF from(double precision, double recall);
  bool operator==(const PRF &) const = default;
};

struct FacetPair {
  std::size_t generated;
  std::size_t truth;
  double bleu1;
  bool operator==(const FacetPair &) const = default;
};

/// A one-to-one matching between generated facets F and truth facets G with
/// exactly min(|F|, |G|) pairs, sorted by generated index.
struct FacetAssignment {
  std::vector<FacetPair> pairs;
  std::vector<std::size_t> unmatched_generated;
  std::vector<std::size_t> unmatched_truth;

  double total() const;
  bool operator==(const FacetAssignment &) const = default;
};

struct MetricReport {
  PRF term_overlap;
  PRF exact_match;
  PRF set_sim;
  std::array<double, 4> set_bleu{};

  bool operator==(const MetricReport &) const = default;
};

/// Column names in report order: term overlap P/R/F1, exact match P/R/F1,
/// set-sim P/R/F1, set-BLEU 1..4.
const std::vector<std::string> &metric_columns();
std::vector<double> metric_values(const MetricReport &report);
/// Looks a value up by column name (e.g. "exact_match.f1", "set_bleu.2").
double metric_value(const MetricReport &report, const std::string &name);
json to_json(const MetricReport &report);
MetricReport metric_report_from_json(const json &j);
/// Field-wise mean; a zero report for an empty input.
MetricReport mean_report(const std::vector<MetricReport> &reports);

/// Text -> vector function used by Set-Sim.
class Embedder {
public:
  virtual ~Embedder() = default;
  /// Throws on texts it cannot embed.
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Feature-hashed bag of normalized tokens. The default Set-Sim embedder when
/// no vectors are supplied: a lexical stand-in for a neural encoder.
class HashedBagEmbedder : public Embedder {
public:
  explicit HashedBagEmbedder(std::size_t dim = 4096) : dim_(dim) {}
  std::vector<double> embed(std::string_view text) const override;

private:
  std::size_t dim_;
};

class EmbeddingTable;

/// Looks facets up in an embedding table by their normalized form, falling
/// back to the raw text.
class TableEmbedder : public Embedder {
public:
  explicit TableEmbedder(std::shared_ptr<const EmbeddingTable> table)
      : table_(std::move(table)) {}
  std::vector<double> embed(std::string_view text) const override;

private:
  std::shared_ptr<const EmbeddingTable> table_;
};

/// Word-level overlap of the token sets of all generated and all truth
/// facets. Throws DataError if either side has no tokens.
PRF term_overlap(const std::vector<std::string> &generated,
                 const std::vector<std::string> &truth);

/// Facet-level overlap of the deduplicated normalized facet sets.
PRF exact_match(const std::vector<std::string> &generated,
                const std::vector<std::string> &truth);

/// Sentence BLEU with uniform weights over orders 1..n. Order 1 is the plain
/// clipped precision; orders >= 2 use add-one smoothing on both counts with
/// the candidate n-gram total floored at one, so an order the candidate is
/// too short to contain scores 1/2 instead of vanishing. Brevity penalty
/// exp(1 - r/c) when c < r. Empty candidates score 0.
double bleu_n(std::string_view candidate, std::string_view reference, int n);
double bleu_n(const std::vector<std::string> &candidate_tokens,
              const std::vector<std::string> &reference_tokens, int n);

/// Maximum total BLEU-1 assignment. Among optimal assignments the one whose
/// pair list is lexicographically smallest in (generated, truth) wins.
FacetAssignment match_facet_pairs(const std::vector<std::string> &generated,
                                  const std::vector<std::string> &truth);

/// Set-BLEU-1..4 averaged over max(|F|, |G|); unmatched facets contribute 0.
std::array<double, 4> set_bleu(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth,
                               const FacetAssignment &assignment);
std::array<double, 4> set_bleu(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth);

/// Cosine similarity of matched pairs, clipped to [0, 1]; precision divides
/// by |F| and recall by |G|.
PRF set_sim(const std::vector<std::string> &generated,
            const std::vector<std::string> &truth, const Embedder &embedder,
            const FacetAssignment &assignment);
PRF set_sim(const std::vector<std::string> &generated,
            const std::vector<std::string> &truth, const Embedder &embedder);

MetricReport evaluate_instance(const std::vector<std::string> &generated,
                               const std::vector<std::string> &truth,
                               const Embedder &embedder);

namespace detail {
/// Exact solver over subsets of the truth side; used when |G| is small.
FacetAssignment assign_by_subset_dp(const std::vector<std::vector<double>> &score);
/// Kuhn-Munkres for larger inputs.
FacetAssignment assign_by_hungarian(const std::vector<std::vector<double>> &score);
FacetAssignment assign(const std::vector<std::vector<double>> &score);
} // namespace detail

} // namespace cqkit
